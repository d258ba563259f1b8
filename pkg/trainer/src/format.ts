/**
 * Portable network weights container (.bwnn).
 *
 * Layout: an 8-byte little-endian unsigned header length, a UTF-8 JSON
 * header, then the weight blobs concatenated in walk order as raw row-major
 * little-endian float32. The header carries the layer graph plus everything
 * a consumer needs to run a prediction on a raw curve: the input step count
 * d, the curve channel normalization ranges, and the name and bounds of
 * each predicted parameter.
 *
 * Walk order expands parallel branches in listed order; every weighted
 * layer contributes its kernel followed by its bias. Conv kernels are
 * stored (kh, kw, cin, cout) and dense kernels (cin, units), matching the
 * tensor layout tfjs uses internally, so blobs move between frameworks
 * without transposition.
 */
import * as fs from "fs";
import * as os from "os";

export const FORMAT_NAME = "bwnn";
export const FORMAT_VERSION = 1;

export type Activation = "relu" | "sigmoid" | "linear";

export interface Conv2dSpec {
  kind: "conv2d";
  name: string;
  /** (kh, kw, cin, cout); stride 1, 'same' zero padding, extra cell bottom/right. */
  kernel: [number, number, number, number];
  activation: Activation;
  padding: "same";
}

export interface MaxPool2dSpec {
  kind: "maxpool2d";
  name: string;
  /** (ph, pw); stride equals pool size, 'valid' (remainder rows dropped). */
  pool: [number, number];
}

export interface FlattenSpec {
  kind: "flatten";
  name: string;
}

export interface DenseSpec {
  kind: "dense";
  name: string;
  units: number;
  activation: Activation;
}

export interface ParallelSpec {
  kind: "parallel";
  name?: string;
  /** Branches evaluated on the same input, each ending flattened, concatenated in order. */
  branches: LayerSpec[][];
}

export type LayerSpec =
  | Conv2dSpec
  | MaxPool2dSpec
  | FlattenSpec
  | DenseSpec
  | ParallelSpec;

/** (h, w, c) feature shape, or the flat width after a flatten. */
export type FeatureShape = [number, number, number] | number;

export interface HistoryInfo {
  label: string;
  amplitudes_uy: number[];
  step_size_uy: number;
}

/** Parsed .bwnn container: header metadata plus flat weight arrays by layer name. */
export interface WeightsFile {
  category: string;
  architecture: string;
  d: number;
  paramNames: string[];
  paramLo: number[];
  paramHi: number[];
  uRange: [number, number];
  fRange: [number, number];
  history: HistoryInfo | null;
  layers: LayerSpec[];
  /** layer name -> [kernel, bias] as flat row-major float32. */
  weights: Record<string, Float32Array[]>;
}

// Blob IO below views Float32Array memory directly, which bakes in the
// platform byte order.
if (os.endianness() !== "LE") {
  throw new Error("bwnn IO requires a little-endian platform");
}

export function* walkLayers(layers: LayerSpec[]): Generator<Exclude<LayerSpec, ParallelSpec>> {
  for (const layer of layers) {
    if (layer.kind === "parallel") {
      for (const branch of layer.branches) {
        yield* walkLayers(branch);
      }
    } else {
      yield layer;
    }
  }
}

function layerLabel(layer: LayerSpec): string {
  return "name" in layer && layer.name ? layer.name : layer.kind;
}

/** Propagate a feature shape through a layer list; flatten yields a flat width. */
export function shapeAfter(layers: LayerSpec[], shape: FeatureShape): FeatureShape {
  for (const layer of layers) {
    if (layer.kind === "conv2d") {
      const [, , cin, cout] = layer.kernel;
      if (typeof shape === "number") {
        throw new Error(`${layerLabel(layer)}: conv2d needs an (h, w, c) input`);
      }
      const [h, w, c] = shape;
      if (c !== cin) {
        throw new Error(`${layerLabel(layer)}: expects ${cin} channels, got ${c}`);
      }
      shape = [h, w, cout];
    } else if (layer.kind === "maxpool2d") {
      const [ph, pw] = layer.pool;
      if (typeof shape === "number") {
        throw new Error(`${layerLabel(layer)}: maxpool2d needs an (h, w, c) input`);
      }
      const [h, w, c] = shape;
      if (h < ph || w < pw) {
        throw new Error(`${layerLabel(layer)}: input too small`);
      }
      shape = [Math.floor(h / ph), Math.floor(w / pw), c];
    } else if (layer.kind === "flatten") {
      if (typeof shape === "number") {
        throw new Error(`${layerLabel(layer)}: input already flat`);
      }
      shape = shape[0] * shape[1] * shape[2];
    } else if (layer.kind === "dense") {
      if (typeof shape !== "number") {
        throw new Error("dense needs a flattened input");
      }
      shape = layer.units;
    } else if (layer.kind === "parallel") {
      const sizes: number[] = [];
      for (const branch of layer.branches) {
        const out = shapeAfter(branch, shape);
        if (typeof out !== "number") {
          throw new Error("parallel branches must end flattened");
        }
        sizes.push(out);
      }
      shape = sizes.reduce((a, b) => a + b, 0);
    } else {
      throw new Error(`unknown layer kind ${JSON.stringify((layer as LayerSpec).kind)}`);
    }
  }
  return shape;
}

export interface WeightedLayerShapes {
  layer: Conv2dSpec | DenseSpec;
  /** [kernel shape, bias shape] in blob order. */
  shapes: number[][];
}

/** Weighted layers with their array shapes, in walk order. */
export function weightShapes(layers: LayerSpec[], shape: FeatureShape): WeightedLayerShapes[] {
  const out: WeightedLayerShapes[] = [];
  for (const layer of layers) {
    if (layer.kind === "conv2d") {
      const [kh, kw, cin, cout] = layer.kernel;
      out.push({ layer, shapes: [[kh, kw, cin, cout], [cout]] });
      const [h, w] = shape as [number, number, number];
      shape = [h, w, cout];
    } else if (layer.kind === "maxpool2d") {
      const [ph, pw] = layer.pool;
      const [h, w, c] = shape as [number, number, number];
      shape = [Math.floor(h / ph), Math.floor(w / pw), c];
    } else if (layer.kind === "flatten") {
      const [h, w, c] = shape as [number, number, number];
      shape = h * w * c;
    } else if (layer.kind === "dense") {
      out.push({ layer, shapes: [[shape as number, layer.units], [layer.units]] });
      shape = layer.units;
    } else if (layer.kind === "parallel") {
      const sizes: number[] = [];
      for (const branch of layer.branches) {
        out.push(...weightShapes(branch, shape));
        sizes.push(shapeAfter(branch, shape) as number);
      }
      shape = sizes.reduce((a, b) => a + b, 0);
    }
  }
  return out;
}

function numel(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/** JSON with recursively sorted object keys, so rewrites are byte-stable. */
function stableStringify(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return `[${value.map(stableStringify).join(",")}]`;
  }
  const entries = Object.keys(value as Record<string, unknown>)
    .sort()
    .map((k) => `${JSON.stringify(k)}:${stableStringify((value as Record<string, unknown>)[k])}`);
  return `{${entries.join(",")}}`;
}

export interface WriteWeightsArgs {
  category: string;
  architecture: string;
  d: number;
  layers: LayerSpec[];
  weights: Record<string, Float32Array[]>;
  paramNames: string[];
  paramLo: number[];
  paramHi: number[];
  uRange: [number, number];
  fRange: [number, number];
  history?: HistoryInfo | null;
}

/** Serialize a layer graph and its weights to a .bwnn file. */
export function writeWeights(path: string, args: WriteWeightsArgs): void {
  const header = {
    format: FORMAT_NAME,
    version: FORMAT_VERSION,
    category: args.category,
    architecture: args.architecture,
    d: args.d,
    input_shape: [args.d, 2, 1],
    param_names: args.paramNames,
    param_lo: args.paramLo,
    param_hi: args.paramHi,
    u_range: [args.uRange[0], args.uRange[1]],
    f_range: [args.fRange[0], args.fRange[1]],
    history: args.history ?? null,
    layers: args.layers,
  };
  const blobs: Buffer[] = [];
  for (const { layer, shapes } of weightShapes(args.layers, [args.d, 2, 1])) {
    const arrays = args.weights[layer.name];
    if (!arrays || arrays.length !== shapes.length) {
      throw new Error(`${layer.name}: expected ${shapes.length} arrays`);
    }
    arrays.forEach((arr, i) => {
      if (arr.length !== numel(shapes[i])) {
        throw new Error(
          `${layer.name}: array has ${arr.length} values, shape ${JSON.stringify(shapes[i])} needs ${numel(shapes[i])}`,
        );
      }
      blobs.push(Buffer.from(arr.buffer, arr.byteOffset, arr.byteLength));
    });
  }
  const head = Buffer.from(stableStringify(header), "utf-8");
  const lenField = Buffer.alloc(8);
  lenField.writeBigUInt64LE(BigInt(head.length));
  fs.writeFileSync(path, Buffer.concat([lenField, head, ...blobs]));
}

function asNumberPair(value: unknown, field: string): [number, number] {
  if (!Array.isArray(value) || value.length !== 2) {
    throw new Error(`weights header field ${field} must be a 2-element array`);
  }
  return [Number(value[0]), Number(value[1])];
}

export function readWeights(path: string): WeightsFile {
  const raw = fs.readFileSync(path);
  if (raw.length < 8) {
    throw new Error("truncated weights file");
  }
  const headLen = Number(raw.readBigUInt64LE(0));
  if (raw.length < 8 + headLen) {
    throw new Error("truncated weights header");
  }
  const header = JSON.parse(raw.subarray(8, 8 + headLen).toString("utf-8"));
  if (header.format !== FORMAT_NAME || header.version !== FORMAT_VERSION) {
    throw new Error("not a supported weights container");
  }
  const d = Math.trunc(Number(header.d));
  const layers = header.layers as LayerSpec[];
  const blob = raw.subarray(8 + headLen);
  const weights: Record<string, Float32Array[]> = {};
  let offset = 0;
  for (const { layer, shapes } of weightShapes(layers, [d, 2, 1])) {
    const arrays: Float32Array[] = [];
    for (const shape of shapes) {
      const count = numel(shape);
      const size = count * 4;
      if (offset + size > blob.length) {
        throw new Error(`${layer.name}: weight blob truncated`);
      }
      const arr = new Float32Array(count);
      new Uint8Array(arr.buffer).set(blob.subarray(offset, offset + size));
      arrays.push(arr);
      offset += size;
    }
    weights[layer.name] = arrays;
  }
  if (offset !== blob.length) {
    throw new Error(`${blob.length - offset} trailing bytes after weights`);
  }
  const names = (header.param_names as unknown[]).map(String);
  const outUnits = shapeAfter(layers, [d, 2, 1]);
  if (outUnits !== names.length) {
    throw new Error(`network emits ${outUnits} values for ${names.length} parameters`);
  }
  return {
    category: String(header.category),
    architecture: String(header.architecture),
    d,
    paramNames: names,
    paramLo: (header.param_lo as unknown[]).map(Number),
    paramHi: (header.param_hi as unknown[]).map(Number),
    uRange: asNumberPair(header.u_range, "u_range"),
    fRange: asNumberPair(header.f_range, "f_range"),
    history: (header.history ?? null) as HistoryInfo | null,
    layers,
    weights,
  };
}
