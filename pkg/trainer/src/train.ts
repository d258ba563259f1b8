/**
 * Training loop and evaluation for curve-to-parameters networks.
 *
 * Adam on mean-squared error, batch size 64 by default. The loop owns its
 * batch order: a seeded shuffle per epoch, so a fixed seed reproduces the
 * run exactly on the deterministic CPU backend (weight init included; see
 * buildModel). Targets are the bound-normalized parameter columns of the
 * chosen category, which is also the space of the sigmoid outputs.
 */
import * as fs from "fs";

import * as tf from "@tensorflow/tfjs";

import {
  CATEGORY_NAMES,
  Category,
  Manifest,
  RecordBlock,
  categoryIndices,
  loadManifest,
  normalizedInputs,
  readRecords,
  targetColumns,
} from "./dataset";
import { HistoryInfo, LayerSpec, writeWeights } from "./format";
import { Architecture, layersFor } from "./layers";
import { buildModel, extractWeights, predictBatch } from "./model";

export const DEFAULT_BATCH_SIZE = 64;
export const DEFAULT_LEARNING_RATE = 0.001; // tf.train.adam default, recorded in the log

export const DEFAULT_EPOCHS: Record<Category, number> = {
  BSC: 100,
  DGD: 300,
  PCH: 1000,
};

export function architectureFor(category: Category): Architecture {
  return category === "PCH" ? "pch" : "bsc_dgd";
}

export interface TrainOptions {
  category: Category;
  epochs: number;
  batchSize: number;
  seed: number;
  learningRate: number;
}

export interface EpochLog {
  epoch: number;
  loss: number;
}

export interface TrainResult {
  model: tf.LayersModel;
  layers: LayerSpec[];
  manifest: Manifest;
  log: EpochLog[];
}

/** Deterministic 32-bit PRNG (mulberry32); enough state for batch order. */
function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffledIndices(n: number, rng: () => number, out?: Uint32Array): Uint32Array {
  const idx = out ?? new Uint32Array(n);
  for (let i = 0; i < n; i++) idx[i] = i;
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    const tmp = idx[i];
    idx[i] = idx[j];
    idx[j] = tmp;
  }
  return idx;
}

/** Train a fresh model of the category's architecture on a dataset directory. */
export async function trainOnDataset(datasetDir: string, opts: TrainOptions): Promise<TrainResult> {
  if (opts.epochs < 1) {
    throw new Error("epochs must be >= 1");
  }
  const manifest = loadManifest(datasetDir);
  const block = readRecords(datasetDir, manifest, "train");
  const indices = categoryIndices(manifest, opts.category);
  const x = normalizedInputs(block, manifest);
  const y = targetColumns(block, manifest, indices);

  const d = manifest.d;
  const k = indices.length;
  const layers = layersFor(architectureFor(opts.category), k);
  const model = buildModel(layers, d, opts.seed);
  model.compile({ optimizer: tf.train.adam(opts.learningRate), loss: "meanSquaredError" });

  const n = block.count;
  const batch = opts.batchSize;
  const rng = makeRng(opts.seed);
  const order = new Uint32Array(n);
  const bx = new Float32Array(batch * d * 2);
  const by = new Float32Array(batch * k);
  const log: EpochLog[] = [];

  for (let epoch = 1; epoch <= opts.epochs; epoch++) {
    shuffledIndices(n, rng, order);
    let lossSum = 0;
    for (let start = 0; start < n; start += batch) {
      const m = Math.min(batch, n - start);
      for (let b = 0; b < m; b++) {
        const row = order[start + b];
        bx.set(x.subarray(row * d * 2, (row + 1) * d * 2), b * d * 2);
        by.set(y.subarray(row * k, (row + 1) * k), b * k);
      }
      const xT = tf.tensor4d(bx.subarray(0, m * d * 2), [m, d, 2, 1]);
      const yT = tf.tensor2d(by.subarray(0, m * k), [m, k]);
      const loss = (await model.trainOnBatch(xT, yT)) as number;
      xT.dispose();
      yT.dispose();
      lossSum += loss * m;
    }
    const loss = lossSum / n;
    log.push({ epoch, loss });
    console.log(`epoch ${epoch}/${opts.epochs}  loss=${loss.toExponential(6)}`);
  }
  return { model, layers, manifest, log };
}

/** Export a trained model as a .bwnn container alongside the dataset metadata. */
export function exportWeights(
  path: string,
  result: TrainResult,
  category: Category,
): void {
  const manifest = result.manifest;
  const indices = categoryIndices(manifest, category);
  writeWeights(path, {
    category,
    architecture: architectureFor(category),
    d: manifest.d,
    layers: result.layers,
    weights: extractWeights(result.model, result.layers, manifest.d),
    paramNames: [...CATEGORY_NAMES[category]],
    paramLo: indices.map((i) => manifest.param_lo[i]),
    paramHi: indices.map((i) => manifest.param_hi[i]),
    uRange: [manifest.u_range_m[0], manifest.u_range_m[1]],
    fRange: [manifest.f_range_mps2[0], manifest.f_range_mps2[1]],
    history: manifest.history as HistoryInfo,
  });
}

export interface ColumnStats {
  r: number;
  mse: number;
}

/** Per-column Pearson correlation and mean-squared error, float64 accumulation. */
export function columnStats(pred: Float32Array, truth: Float32Array, count: number, k: number): ColumnStats[] {
  const out: ColumnStats[] = [];
  for (let j = 0; j < k; j++) {
    let sp = 0;
    let st = 0;
    for (let r = 0; r < count; r++) {
      sp += pred[r * k + j];
      st += truth[r * k + j];
    }
    const mp = sp / count;
    const mt = st / count;
    let cov = 0;
    let vp = 0;
    let vt = 0;
    let se = 0;
    for (let r = 0; r < count; r++) {
      const dp = pred[r * k + j] - mp;
      const dt = truth[r * k + j] - mt;
      cov += dp * dt;
      vp += dp * dp;
      vt += dt * dt;
      const e = pred[r * k + j] - truth[r * k + j];
      se += e * e;
    }
    out.push({ r: cov / Math.sqrt(vp * vt), mse: se / count });
  }
  return out;
}

export interface ParamMetrics {
  param: string;
  r: number;
  mseTrain: number;
  mseTest: number;
}

function partitionPredictions(
  model: tf.LayersModel,
  manifest: Manifest,
  block: RecordBlock,
  indices: number[],
): { pred: Float32Array; truth: Float32Array } {
  const x = normalizedInputs(block, manifest);
  const pred = predictBatch(model, x, block.count, manifest.d);
  const truth = targetColumns(block, manifest, indices);
  return { pred, truth };
}

/**
 * Correlation on the held-out test records plus train/test MSE per
 * parameter, in the category's canonical order.
 */
export function evaluateOnDataset(
  model: tf.LayersModel,
  datasetDir: string,
  category: Category,
): ParamMetrics[] {
  const manifest = loadManifest(datasetDir);
  const indices = categoryIndices(manifest, category);
  const names = CATEGORY_NAMES[category];
  const train = partitionPredictions(model, manifest, readRecords(datasetDir, manifest, "train"), indices);
  const test = partitionPredictions(model, manifest, readRecords(datasetDir, manifest, "test"), indices);
  const trainStats = columnStats(train.pred, train.truth, train.truth.length / names.length, names.length);
  const testStats = columnStats(test.pred, test.truth, test.truth.length / names.length, names.length);
  return names.map((param, j) => ({
    param,
    r: testStats[j].r,
    mseTrain: trainStats[j].mse,
    mseTest: testStats[j].mse,
  }));
}

export function writeMetricsCsv(path: string, metrics: ParamMetrics[]): void {
  const lines = ["param,r,mse_train,mse_test"];
  for (const m of metrics) {
    lines.push(`${m.param},${m.r},${m.mseTrain},${m.mseTest}`);
  }
  fs.writeFileSync(path, lines.join("\n") + "\n");
}

export function writeTrainLog(path: string, opts: TrainOptions, log: EpochLog[]): void {
  const lines = [
    `# optimizer=adam learning_rate=${opts.learningRate} batch_size=${opts.batchSize} ` +
      `epochs=${opts.epochs} seed=${opts.seed} category=${opts.category}`,
    "epoch,loss",
  ];
  for (const row of log) {
    lines.push(`${row.epoch},${row.loss}`);
  }
  fs.writeFileSync(path, lines.join("\n") + "\n");
}
