import { execFileSync } from "child_process";
import * as fs from "fs";
import * as path from "path";
import { fileURLToPath } from "url";

const here = path.dirname(fileURLToPath(import.meta.url));

/** Fixture directory of the simulation package (golden weight files live there). */
export const FIXTURES_DIR = path.resolve(here, "../../src/bwlab/fixtures");

/** Datasets are slow to generate, so test runs share them across processes. */
const CACHE_ROOT = "/tmp/cnn-trainer-test-cache";

export function bwlab(args: string[]): string {
  return execFileSync("bwlab", args, {
    encoding: "utf-8",
    stdio: ["ignore", "pipe", "pipe"],
    env: { ...process.env, BWLAB_THREADS: "1" },
  });
}

/** Generate (or reuse) a dataset directory from a gen-dataset config. */
export function ensureDataset(key: string, config: Record<string, unknown>): string {
  const dir = path.join(CACHE_ROOT, key);
  if (fs.existsSync(path.join(dir, "manifest.json"))) {
    return dir;
  }
  fs.rmSync(dir, { recursive: true, force: true });
  fs.mkdirSync(dir, { recursive: true });
  const cfgPath = path.join(dir, "gen-config.json");
  fs.writeFileSync(cfgPath, JSON.stringify(config, null, 2));
  bwlab(["gen-dataset", "--config", cfgPath, "--out", dir]);
  return dir;
}

/** 5k noisy training records drawn from 1800 train sets; quick to build. */
export function smallDataset(): string {
  return ensureDataset("ds-small", {
    variant: "BW",
    history: { kind: "table", index: 3 },
    n_param_sets: 2000,
    noise: { scale_default_to: 5000 },
    seed: 21,
  });
}

/** 64 clean training records, one per parameter set; for overfit checks. */
export function tinyDataset(): string {
  return ensureDataset("ds-tiny", {
    variant: "BW",
    history: { kind: "table", index: 3 },
    n_param_sets: 80,
    split: 0.8,
    noise: [[0.0, 64]],
    seed: 5,
  });
}

/** 50k training records over 45k parameter sets, 5k clean held-out sets. */
export function deskDataset(): string {
  return ensureDataset("ds-desk", {
    variant: "BW",
    history: { kind: "table", index: 3 },
    n_param_sets: 50000,
    noise: { scale_default_to: 50000 },
    split: 0.9,
    seed: 11,
  });
}

/** Compile src/ to dist/ if any source is newer; returns the CLI entry point. */
export function freshDist(): string {
  const root = path.resolve(here, "..");
  const cli = path.join(root, "dist", "cli.js");
  const built = fs.existsSync(cli) ? fs.statSync(cli).mtimeMs : -Infinity;
  const stale = fs
    .readdirSync(path.join(root, "src"))
    .some((name) => fs.statSync(path.join(root, "src", name)).mtimeMs > built);
  if (stale) {
    execFileSync("npx", ["tsc"], { cwd: root, stdio: ["ignore", "pipe", "pipe"] });
  }
  return cli;
}

/** Everything after the banner noise: the first line that starts a JSON object. */
export function parseCliJson(stdout: string): Record<string, unknown> {
  const start = stdout.indexOf("{");
  if (start < 0) {
    throw new Error(`no JSON object in output: ${JSON.stringify(stdout)}`);
  }
  return JSON.parse(stdout.slice(start));
}

export function scratchDir(prefix: string): string {
  const dir = fs.mkdtempSync(path.join("/tmp", `${prefix}-`));
  return dir;
}

/** Write a curve CSV the way the simulation CLI emits them (row 0 is rest). */
export function writeCurveCsv(file: string, u: ArrayLike<number>, f: ArrayLike<number>): void {
  const lines = ["step,u_m,f_mps2", "0,0.0,0.0"];
  for (let i = 0; i < u.length; i++) {
    lines.push(`${i + 1},${u[i]},${f[i]}`);
  }
  fs.writeFileSync(file, lines.join("\n") + "\n");
}
