/**
 * Layer graphs for the two curve-to-parameters architectures.
 *
 * The graphs are plain data (see format.ts LayerSpec) so the same
 * description drives model construction here and the forward pass on the
 * consumer side. Output width is the number of predicted parameters:
 * 5 for the backbone set, 2 for the degradation set, 6 for the pinching
 * set. Every output unit is a sigmoid, so predictions land in [0, 1] and
 * map linearly onto the parameter bounds.
 */
import { LayerSpec } from "./format";

/** Small network: two conv+pool blocks, then 256/32 dense and a sigmoid head. */
export function bscDgdLayers(nOut: number): LayerSpec[] {
  return [
    { kind: "conv2d", name: "conv1", kernel: [2, 2, 1, 4], activation: "relu", padding: "same" },
    { kind: "maxpool2d", name: "pool1", pool: [2, 1] },
    { kind: "conv2d", name: "conv2", kernel: [4, 2, 4, 8], activation: "relu", padding: "same" },
    { kind: "maxpool2d", name: "pool2", pool: [2, 1] },
    { kind: "flatten", name: "flat" },
    { kind: "dense", name: "dense1", units: 256, activation: "relu" },
    { kind: "dense", name: "dense2", units: 32, activation: "relu" },
    { kind: "dense", name: "out", units: nOut, activation: "sigmoid" },
  ];
}

function pchBranch(tag: string, kh: number): LayerSpec[] {
  return [
    { kind: "conv2d", name: `${tag}conv1`, kernel: [kh, 2, 1, 8], activation: "relu", padding: "same" },
    { kind: "maxpool2d", name: `${tag}pool1`, pool: [2, 1] },
    { kind: "conv2d", name: `${tag}conv2`, kernel: [kh, 2, 8, 16], activation: "relu", padding: "same" },
    { kind: "maxpool2d", name: `${tag}pool2`, pool: [2, 1] },
    { kind: "conv2d", name: `${tag}conv3`, kernel: [kh, 2, 16, 32], activation: "relu", padding: "same" },
    { kind: "maxpool2d", name: `${tag}pool3`, pool: [2, 1] },
    { kind: "flatten", name: `${tag}flat` },
  ];
}

/** Pinching network: two receptive-field branches concatenated, wide dense tail. */
export function pchLayers(nOut = 6): LayerSpec[] {
  return [
    { kind: "parallel", name: "paths", branches: [pchBranch("a", 2), pchBranch("b", 16)] },
    { kind: "dense", name: "dense1", units: 1024, activation: "relu" },
    { kind: "dense", name: "dense2", units: 256, activation: "relu" },
    { kind: "dense", name: "dense3", units: 64, activation: "relu" },
    { kind: "dense", name: "dense4", units: 16, activation: "relu" },
    { kind: "dense", name: "out", units: nOut, activation: "sigmoid" },
  ];
}

export type Architecture = "bsc_dgd" | "pch";

export function layersFor(architecture: Architecture, nOut: number): LayerSpec[] {
  return architecture === "pch" ? pchLayers(nOut) : bscDgdLayers(nOut);
}
