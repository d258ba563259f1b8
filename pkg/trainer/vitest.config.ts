import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // dataset generation and training share one CPU; keep files sequential
    fileParallelism: false,
    testTimeout: 120_000,
    hookTimeout: 900_000,
  },
});
