/**
 * tfjs model construction from a layer graph, plus weight transfer in the
 * container's walk order.
 *
 * Convolutions are stride-1 'same' (TF padding rule: the odd cell goes
 * bottom/right), pooling is 'valid' with stride equal to the pool size,
 * and flattening is row-major over (h, w, c). Conv kernels live as
 * (kh, kw, cin, cout) and dense kernels as (cin, units), so tensors move
 * to and from the container without reordering.
 */
import * as tf from "@tensorflow/tfjs";

import { LayerSpec, WeightsFile, shapeAfter, weightShapes } from "./format";

function applyLayers(
  x: tf.SymbolicTensor,
  layers: LayerSpec[],
  seedRef: { next: () => number | undefined },
): tf.SymbolicTensor {
  for (const layer of layers) {
    if (layer.kind === "conv2d") {
      const [kh, kw, , cout] = layer.kernel;
      x = tf.layers
        .conv2d({
          name: layer.name,
          filters: cout,
          kernelSize: [kh, kw],
          strides: [1, 1],
          padding: "same",
          activation: layer.activation,
          kernelInitializer: tf.initializers.glorotUniform({ seed: seedRef.next() }),
          biasInitializer: "zeros",
        })
        .apply(x) as tf.SymbolicTensor;
    } else if (layer.kind === "maxpool2d") {
      const [ph, pw] = layer.pool;
      x = tf.layers
        .maxPooling2d({ name: layer.name, poolSize: [ph, pw], strides: [ph, pw], padding: "valid" })
        .apply(x) as tf.SymbolicTensor;
    } else if (layer.kind === "flatten") {
      x = tf.layers.flatten({ name: layer.name }).apply(x) as tf.SymbolicTensor;
    } else if (layer.kind === "dense") {
      x = tf.layers
        .dense({
          name: layer.name,
          units: layer.units,
          activation: layer.activation,
          kernelInitializer: tf.initializers.glorotUniform({ seed: seedRef.next() }),
          biasInitializer: "zeros",
        })
        .apply(x) as tf.SymbolicTensor;
    } else if (layer.kind === "parallel") {
      const parts = layer.branches.map((branch) => applyLayers(x, branch, seedRef));
      x = tf.layers.concatenate({ name: layer.name }).apply(parts) as tf.SymbolicTensor;
    } else {
      throw new Error(`unknown layer kind ${JSON.stringify((layer as LayerSpec).kind)}`);
    }
  }
  return x;
}

/**
 * Build an uncompiled model for curves of d steps. A seed makes the kernel
 * initializers deterministic (each weighted layer gets seed + its walk index).
 */
export function buildModel(layers: LayerSpec[], d: number, seed?: number): tf.LayersModel {
  shapeAfter(layers, [d, 2, 1]); // validate the graph before handing it to tfjs
  let walkIndex = 0;
  const seedRef = {
    next: () => (seed === undefined ? undefined : seed + walkIndex++),
  };
  const input = tf.input({ shape: [d, 2, 1] });
  const output = applyLayers(input, layers, seedRef);
  return tf.model({ inputs: input, outputs: output });
}

/** Pull kernel and bias out of every weighted layer, flat, in walk order. */
export function extractWeights(
  model: tf.LayersModel,
  layers: LayerSpec[],
  d: number,
): Record<string, Float32Array[]> {
  const out: Record<string, Float32Array[]> = {};
  for (const { layer, shapes } of weightShapes(layers, [d, 2, 1])) {
    const tensors = model.getLayer(layer.name).getWeights();
    if (tensors.length !== shapes.length) {
      throw new Error(`${layer.name}: layer holds ${tensors.length} arrays, expected ${shapes.length}`);
    }
    out[layer.name] = tensors.map((t, i) => {
      if (JSON.stringify(t.shape) !== JSON.stringify(shapes[i])) {
        throw new Error(`${layer.name}: tensor shape ${t.shape} != ${shapes[i]}`);
      }
      return new Float32Array(t.dataSync());
    });
  }
  return out;
}

/** Push container weights into a model built from the same layer graph. */
export function loadWeightsInto(
  model: tf.LayersModel,
  layers: LayerSpec[],
  d: number,
  weights: Record<string, Float32Array[]>,
): void {
  for (const { layer, shapes } of weightShapes(layers, [d, 2, 1])) {
    const arrays = weights[layer.name];
    if (!arrays || arrays.length !== shapes.length) {
      throw new Error(`${layer.name}: missing weights`);
    }
    const tensors = arrays.map((arr, i) => tf.tensor(arr, shapes[i]));
    model.getLayer(layer.name).setWeights(tensors);
    tensors.forEach((t) => t.dispose());
  }
}

/** Reconstruct a runnable model from a parsed weights container. */
export function modelFromWeights(wf: WeightsFile): tf.LayersModel {
  const model = buildModel(wf.layers, wf.d);
  loadWeightsInto(model, wf.layers, wf.d, wf.weights);
  return model;
}

/**
 * Run the model on (count, d, 2) normalized inputs, returning the flat
 * (count, nOut) prediction block.
 */
export function predictBatch(
  model: tf.LayersModel,
  inputs: Float32Array,
  count: number,
  d: number,
  batchSize = 256,
): Float32Array {
  return tf.tidy(() => {
    const x = tf.tensor4d(inputs, [count, d, 2, 1]);
    const y = model.predict(x, { batchSize }) as tf.Tensor;
    return new Float32Array(y.dataSync());
  });
}

/**
 * Predict physical parameter values from one raw curve: normalize by the
 * container's training ranges, run the network, and map the sigmoid
 * outputs back onto the parameter bounds.
 */
export function predictParams(
  wf: WeightsFile,
  model: tf.LayersModel,
  u: ArrayLike<number>,
  f: ArrayLike<number>,
): Record<string, number> {
  if (u.length !== wf.d || f.length !== wf.d) {
    throw new Error(`expected ${wf.d} curve points`);
  }
  const [uLo, uHi] = wf.uRange;
  const [fLo, fHi] = wf.fRange;
  if (!(uHi > uLo) || !(fHi > fLo)) {
    throw new Error("degenerate normalization ranges in weights file");
  }
  const x = new Float32Array(wf.d * 2);
  for (let i = 0; i < wf.d; i++) {
    x[2 * i] = (u[i] - uLo) / (uHi - uLo);
    x[2 * i + 1] = (f[i] - fLo) / (fHi - fLo);
  }
  const out = predictBatch(model, x, 1, wf.d);
  const values: Record<string, number> = {};
  wf.paramNames.forEach((name, j) => {
    values[name] = wf.paramLo[j] + out[j] * (wf.paramHi[j] - wf.paramLo[j]);
  });
  return values;
}
