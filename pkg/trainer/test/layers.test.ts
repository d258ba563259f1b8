import { beforeAll, describe, expect, it } from "vitest";

import { initBackend } from "../src/backend";
import { shapeAfter, weightShapes } from "../src/format";
import { bscDgdLayers, pchLayers } from "../src/layers";
import { buildModel, predictBatch } from "../src/model";

/** Hand-derived weight shapes for d = 430: 430 -> 215 -> 107, flat 107*2*8. */
const BSC_430 = {
  conv1: [
    [2, 2, 1, 4],
    [4],
  ],
  conv2: [
    [4, 2, 4, 8],
    [8],
  ],
  dense1: [
    [1712, 256],
    [256],
  ],
  dense2: [
    [256, 32],
    [32],
  ],
  out: [
    [32, 5],
    [5],
  ],
};

/** Hand-derived weight shapes for d = 720: 720 -> 360 -> 180 -> 90 per path, flat 90*2*32, two paths. */
const PCH_720 = {
  aconv1: [
    [2, 2, 1, 8],
    [8],
  ],
  aconv2: [
    [2, 2, 8, 16],
    [16],
  ],
  aconv3: [
    [2, 2, 16, 32],
    [32],
  ],
  bconv1: [
    [16, 2, 1, 8],
    [8],
  ],
  bconv2: [
    [16, 2, 8, 16],
    [16],
  ],
  bconv3: [
    [16, 2, 16, 32],
    [32],
  ],
  dense1: [
    [11520, 1024],
    [1024],
  ],
  dense2: [
    [1024, 256],
    [256],
  ],
  dense3: [
    [256, 64],
    [64],
  ],
  dense4: [
    [64, 16],
    [16],
  ],
  out: [
    [16, 6],
    [6],
  ],
};

function shapeTable(layers: ReturnType<typeof bscDgdLayers>, d: number): Record<string, number[][]> {
  const table: Record<string, number[][]> = {};
  for (const { layer, shapes } of weightShapes(layers, [d, 2, 1])) {
    table[layer.name] = shapes;
  }
  return table;
}

describe("architecture graphs", () => {
  beforeAll(async () => {
    await initBackend();
  });

  it("matches the hand-derived shape table at d = 430", () => {
    const layers = bscDgdLayers(5);
    const table = shapeTable(layers, 430);
    for (const [name, shapes] of Object.entries(BSC_430)) {
      expect(table[name], name).toEqual(shapes);
    }
    expect(shapeAfter(layers, [430, 2, 1])).toBe(5);
  });

  it("matches the hand-derived shape table at d = 720", () => {
    const layers = pchLayers(6);
    const table = shapeTable(layers, 720);
    for (const [name, shapes] of Object.entries(PCH_720)) {
      expect(table[name], name).toEqual(shapes);
    }
    expect(shapeAfter(layers, [720, 2, 1])).toBe(6);
  });

  it("builds tfjs models whose layer weights match the tables", () => {
    const bsc = buildModel(bscDgdLayers(5), 430, 3);
    for (const [name, shapes] of Object.entries(BSC_430)) {
      const got = bsc.getLayer(name).getWeights().map((t) => t.shape);
      expect(got, name).toEqual(shapes);
    }
    expect(bsc.outputs[0].shape).toEqual([null, 5]);

    const pch = buildModel(pchLayers(6), 720, 3);
    for (const [name, shapes] of Object.entries(PCH_720)) {
      const got = pch.getLayer(name).getWeights().map((t) => t.shape);
      expect(got, name).toEqual(shapes);
    }
    expect(pch.outputs[0].shape).toEqual([null, 6]);
  });

  it("halves the step dimension and keeps both channels at every pool", () => {
    const model = buildModel(bscDgdLayers(5), 430, 1);
    expect(model.getLayer("pool1").outputShape).toEqual([null, 215, 2, 4]);
    expect(model.getLayer("pool2").outputShape).toEqual([null, 107, 2, 8]);
  });

  it("concatenates the two pinching paths to the sum of their widths", () => {
    const layers = pchLayers(6);
    const model = buildModel(layers, 720, 1);
    const perPath = 90 * 2 * 32;
    expect(model.getLayer("aflat").outputShape).toEqual([null, perPath]);
    expect(model.getLayer("bflat").outputShape).toEqual([null, perPath]);
    expect(model.getLayer("paths").outputShape).toEqual([null, 2 * perPath]);
  });

  it("keeps sigmoid outputs inside [0, 1] for random inputs", () => {
    for (const [layers, d, nOut] of [
      [bscDgdLayers(5), 430, 5] as const,
      [bscDgdLayers(2), 430, 2] as const,
      [pchLayers(6), 720, 6] as const,
    ]) {
      const model = buildModel(layers, d, 17);
      const n = 4;
      const x = Float32Array.from({ length: n * d * 2 }, (_, i) => Math.sin(i * 0.37) * 3);
      const out = predictBatch(model, x, n, d);
      expect(out.length).toBe(n * nOut);
      for (const v of out) {
        expect(v).toBeGreaterThanOrEqual(0);
        expect(v).toBeLessThanOrEqual(1);
      }
    }
  });

  it("rejects graphs whose channels do not chain", () => {
    expect(() =>
      shapeAfter(
        [
          { kind: "conv2d", name: "c1", kernel: [2, 2, 3, 4], activation: "relu", padding: "same" },
        ],
        [16, 2, 1],
      ),
    ).toThrow(/expects 3 channels/);
    expect(() => shapeAfter(bscDgdLayers(5), [2, 2, 1])).toThrow(/input too small/);
  });
});
