/**
 * Reader for simulated curve datasets (manifest.json + records.bin).
 *
 * A dataset directory holds a JSON manifest and one flat binary file of
 * float32 records. Each record is the 2d curve samples (u, f interleaved
 * per step, raw physical units) followed by the 13 bound-normalized model
 * parameters. Training records come first, then the clean held-out test
 * records; offsets and counts live in the manifest, as do the curve
 * normalization ranges, which are never recomputed here.
 */
import * as fs from "fs";
import * as path from "path";

export const MANIFEST_SCHEMA = "bwlab-dataset-1";
export const MANIFEST_FILE = "manifest.json";

export interface NoiseLevel {
  cov: number;
  count: number;
}

export interface Manifest {
  schema: string;
  label: string;
  variant: string;
  history: { label: string; amplitudes_uy: number[]; step_size_uy: number };
  d: number;
  seed: number;
  split: number;
  substeps: number;
  u_y_cov: number;
  n_param_sets: number;
  n_train_sets: number;
  n_test_sets: number;
  n_resampled: number;
  noise_levels: NoiseLevel[];
  n_train_records: number;
  n_test_records: number;
  record_floats: number;
  record_bytes: number;
  records_file: string;
  train_offset_bytes: number;
  test_offset_bytes: number;
  dtype: string;
  layout: string;
  param_names: string[];
  param_lo: number[];
  param_hi: number[];
  u_range_m: [number, number];
  f_range_mps2: [number, number];
}

/** Parameter names per prediction category, in canonical order. */
export const CATEGORY_NAMES = {
  BSC: ["T", "F_y", "alpha", "beta", "n"],
  DGD: ["delta_nu", "delta_eta"],
  PCH: ["zeta0", "p", "q", "psi", "delta_psi", "lam"],
} as const;

export type Category = keyof typeof CATEGORY_NAMES;

export function loadManifest(datasetDir: string): Manifest {
  const text = fs.readFileSync(path.join(datasetDir, MANIFEST_FILE), "utf-8");
  const manifest = JSON.parse(text) as Manifest;
  if (manifest.schema !== MANIFEST_SCHEMA) {
    throw new Error(`unsupported dataset schema: ${JSON.stringify(manifest.schema)}`);
  }
  if (manifest.dtype !== "<f4") {
    throw new Error(`unsupported record dtype: ${JSON.stringify(manifest.dtype)}`);
  }
  if (manifest.record_floats !== 2 * manifest.d + manifest.param_names.length) {
    throw new Error("manifest record_floats does not match d and parameter count");
  }
  return manifest;
}

export type Partition = "train" | "test";

export interface RecordBlock {
  count: number;
  d: number;
  /** (count, d, 2) row-major: u then f per step, raw physical units. */
  curves: Float32Array;
  /** (count, nParams) row-major, bound-normalized to [0, 1]. */
  params: Float32Array;
}

/** Read one partition back into memory as separate curve and parameter blocks. */
export function readRecords(datasetDir: string, manifest: Manifest, partition: Partition): RecordBlock {
  const file = path.join(datasetDir, manifest.records_file);
  const raw = fs.readFileSync(file);
  const nTotal = manifest.n_train_records + manifest.n_test_records;
  if (raw.length !== nTotal * manifest.record_bytes) {
    throw new Error(`records file is ${raw.length} bytes, manifest implies ${nTotal * manifest.record_bytes}`);
  }
  const count = partition === "train" ? manifest.n_train_records : manifest.n_test_records;
  const offset = partition === "train" ? manifest.train_offset_bytes : manifest.test_offset_bytes;
  const d = manifest.d;
  const recFloats = manifest.record_floats;
  const nParams = recFloats - 2 * d;
  const block = new Float32Array(count * recFloats);
  new Uint8Array(block.buffer).set(raw.subarray(offset, offset + count * manifest.record_bytes));
  const curves = new Float32Array(count * d * 2);
  const params = new Float32Array(count * nParams);
  for (let r = 0; r < count; r++) {
    curves.set(block.subarray(r * recFloats, r * recFloats + 2 * d), r * d * 2);
    params.set(block.subarray(r * recFloats + 2 * d, (r + 1) * recFloats), r * nParams);
  }
  return { count, d, curves, params };
}

/** Column indices of a category's parameters within the manifest ordering. */
export function categoryIndices(manifest: Manifest, category: Category): number[] {
  return CATEGORY_NAMES[category].map((name) => {
    const idx = manifest.param_names.indexOf(name);
    if (idx < 0) {
      throw new Error(`dataset has no parameter named ${JSON.stringify(name)}`);
    }
    return idx;
  });
}

/** Min-max scale interleaved (u, f) curve samples in place-order into a new array. */
export function normalizedInputs(block: RecordBlock, manifest: Manifest): Float32Array {
  const [uLo, uHi] = manifest.u_range_m;
  const [fLo, fHi] = manifest.f_range_mps2;
  if (!(uHi > uLo) || !(fHi > fLo)) {
    throw new Error("degenerate normalization ranges in manifest");
  }
  const uScale = 1 / (uHi - uLo);
  const fScale = 1 / (fHi - fLo);
  const out = new Float32Array(block.curves.length);
  for (let i = 0; i < out.length; i += 2) {
    out[i] = (block.curves[i] - uLo) * uScale;
    out[i + 1] = (block.curves[i + 1] - fLo) * fScale;
  }
  return out;
}

/** Extract the target columns for a category as a (count, k) row-major block. */
export function targetColumns(block: RecordBlock, manifest: Manifest, indices: number[]): Float32Array {
  const nParams = manifest.param_names.length;
  const out = new Float32Array(block.count * indices.length);
  for (let r = 0; r < block.count; r++) {
    for (let j = 0; j < indices.length; j++) {
      out[r * indices.length + j] = block.params[r * nParams + indices[j]];
    }
  }
  return out;
}
