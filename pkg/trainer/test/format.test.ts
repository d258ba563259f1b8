import * as fs from "fs";
import * as path from "path";

import { beforeAll, describe, expect, it } from "vitest";

import { initBackend } from "../src/backend";
import {
  LayerSpec,
  readWeights,
  shapeAfter,
  walkLayers,
  weightShapes,
  writeWeights,
} from "../src/format";
import { modelFromWeights, predictBatch, predictParams } from "../src/model";
import { FIXTURES_DIR, scratchDir } from "./helpers";

const GOLDEN = path.join(FIXTURES_DIR, "golden_tiny.bwnn");

function tinyGraph(): LayerSpec[] {
  return [
    { kind: "conv2d", name: "c1", kernel: [2, 2, 1, 3], activation: "relu", padding: "same" },
    { kind: "maxpool2d", name: "p1", pool: [2, 1] },
    { kind: "flatten", name: "fl" },
    { kind: "dense", name: "out", units: 2, activation: "sigmoid" },
  ];
}

function filledWeights(layers: LayerSpec[], d: number): Record<string, Float32Array[]> {
  const weights: Record<string, Float32Array[]> = {};
  let v = 0;
  for (const { layer, shapes } of weightShapes(layers, [d, 2, 1])) {
    weights[layer.name] = shapes.map((shape) => {
      const n = shape.reduce((a, b) => a * b, 1);
      return Float32Array.from({ length: n }, () => Math.fround(Math.sin(v++) * 0.5));
    });
  }
  return weights;
}

describe("weights container", () => {
  beforeAll(async () => {
    await initBackend();
  });

  it("round-trips a graph and its weights exactly", () => {
    const layers = tinyGraph();
    const d = 8;
    const weights = filledWeights(layers, d);
    const file = path.join(scratchDir("bwnn"), "w.bwnn");
    writeWeights(file, {
      category: "BSC",
      architecture: "bsc_dgd",
      d,
      layers,
      weights,
      paramNames: ["T", "F_y"],
      paramLo: [0.1, 0.05],
      paramHi: [6.0, 1.5],
      uRange: [-2.5, 2.5],
      fRange: [-20.0, 20.0],
      history: { label: "LH3", amplitudes_uy: [2.0], step_size_uy: 0.1 },
    });
    const wf = readWeights(file);
    expect(wf.category).toBe("BSC");
    expect(wf.architecture).toBe("bsc_dgd");
    expect(wf.d).toBe(d);
    expect(wf.paramNames).toEqual(["T", "F_y"]);
    expect(wf.uRange).toEqual([-2.5, 2.5]);
    expect(wf.fRange).toEqual([-20.0, 20.0]);
    expect(wf.history?.label).toBe("LH3");
    for (const name of Object.keys(weights)) {
      expect(wf.weights[name].length).toBe(weights[name].length);
      weights[name].forEach((arr, i) => {
        expect(Array.from(wf.weights[name][i])).toEqual(Array.from(arr));
      });
    }
  });

  it("writes byte-identical files for identical content", () => {
    const layers = tinyGraph();
    const weights = filledWeights(layers, 8);
    const dir = scratchDir("bwnn");
    const args = {
      category: "BSC",
      architecture: "bsc_dgd" as const,
      d: 8,
      layers,
      weights,
      paramNames: ["T", "F_y"],
      paramLo: [0.1, 0.05],
      paramHi: [6.0, 1.5],
      uRange: [-1, 1] as [number, number],
      fRange: [-1, 1] as [number, number],
    };
    writeWeights(path.join(dir, "a.bwnn"), args);
    writeWeights(path.join(dir, "b.bwnn"), args);
    expect(fs.readFileSync(path.join(dir, "a.bwnn")).equals(fs.readFileSync(path.join(dir, "b.bwnn")))).toBe(true);
  });

  it("rejects truncated blobs, trailing bytes, and foreign containers", () => {
    const layers = tinyGraph();
    const file = path.join(scratchDir("bwnn"), "w.bwnn");
    writeWeights(file, {
      category: "BSC",
      architecture: "bsc_dgd",
      d: 8,
      layers,
      weights: filledWeights(layers, 8),
      paramNames: ["T", "F_y"],
      paramLo: [0, 0],
      paramHi: [1, 1],
      uRange: [-1, 1],
      fRange: [-1, 1],
    });
    const raw = fs.readFileSync(file);

    const cut = path.join(path.dirname(file), "cut.bwnn");
    fs.writeFileSync(cut, raw.subarray(0, raw.length - 5));
    expect(() => readWeights(cut)).toThrow(/truncated/);

    const fat = path.join(path.dirname(file), "fat.bwnn");
    fs.writeFileSync(fat, Buffer.concat([raw, Buffer.alloc(8)]));
    expect(() => readWeights(fat)).toThrow(/trailing bytes/);

    const alien = path.join(path.dirname(file), "alien.bwnn");
    const head = Buffer.from(JSON.stringify({ format: "other", version: 1 }));
    const len = Buffer.alloc(8);
    len.writeBigUInt64LE(BigInt(head.length));
    fs.writeFileSync(alien, Buffer.concat([len, head]));
    expect(() => readWeights(alien)).toThrow(/not a supported/);

    expect(() => readWeights("/dev/null")).toThrow(/truncated/);
  });

  it("walks parallel branches in listed order", () => {
    const layers: LayerSpec[] = [
      {
        kind: "parallel",
        name: "paths",
        branches: [
          [{ kind: "flatten", name: "af" }],
          [{ kind: "flatten", name: "bf" }],
        ],
      },
      { kind: "dense", name: "out", units: 1, activation: "linear" },
    ];
    expect([...walkLayers(layers)].map((l) => l.name)).toEqual(["af", "bf", "out"]);
    expect(shapeAfter(layers, [4, 2, 1])).toBe(1);
  });

  it("reproduces the golden file's frozen outputs", () => {
    const wf = readWeights(GOLDEN);
    expect(wf.d).toBe(10);
    expect(wf.paramNames).toEqual(["p1", "p2", "p3"]);
    expect(wf.history?.label).toBe("golden");
    const expected = JSON.parse(
      fs.readFileSync(path.join(FIXTURES_DIR, "golden_tiny_expected.json"), "utf-8"),
    ) as { inputs: number[][][]; outputs: number[][] };
    const model = modelFromWeights(wf);
    let worst = 0;
    expected.inputs.forEach((input, i) => {
      const x = Float32Array.from(input.flat());
      const out = predictBatch(model, x, 1, wf.d);
      expected.outputs[i].forEach((ref, j) => {
        worst = Math.max(worst, Math.abs(out[j] - ref));
      });
    });
    expect(worst).toBeLessThan(1e-5);
    console.log(`golden forward agreement: worst |diff| = ${worst.toExponential(3)}`);
  });

  it("denormalizes golden predictions onto the stored bounds", () => {
    const wf = readWeights(GOLDEN);
    const model = modelFromWeights(wf);
    const u = Float64Array.from({ length: wf.d }, (_, i) => -0.8 + (1.6 * i) / (wf.d - 1));
    const f = Float64Array.from({ length: wf.d }, (_, i) => Math.sin(i) * 1.5);
    const params = predictParams(wf, model, u, f);
    expect(Object.keys(params)).toEqual(["p1", "p2", "p3"]);
    wf.paramNames.forEach((name, j) => {
      expect(params[name]).toBeGreaterThanOrEqual(wf.paramLo[j]);
      expect(params[name]).toBeLessThanOrEqual(wf.paramHi[j]);
    });
  });
});
