/**
 * Backend selection for CPU-only training.
 *
 * The wasm backend (XNNPACK) is an order of magnitude faster than the
 * plain JS backend for the conv and matmul work that dominates a training
 * step, but its 4.x build ships without the conv filter gradient kernel.
 * We register a JS implementation of that one kernel (reference TF
 * semantics: NHWC, stride/pad from the op attrs, zero padding outside the
 * input) and run everything else on wasm. If the wasm runtime is
 * unavailable the default backend stays in place; results are identical,
 * just slower.
 */
import * as tf from "@tensorflow/tfjs";

interface WasmLikeBackend {
  readSync(dataId: unknown): Float32Array;
  makeOutput(shape: number[], dtype: string, memoryOffset?: number, values?: Float32Array): unknown;
}

function conv2dBackpropFilterKernel(args: {
  inputs: Record<string, { dataId: unknown; shape: number[] }>;
  backend: unknown;
  attrs: unknown;
}): unknown {
  const { x, dy } = args.inputs;
  const backend = args.backend as WasmLikeBackend;
  const attrs = args.attrs as {
    strides: [number, number] | number;
    pad: "valid" | "same" | number;
    dataFormat: "NHWC" | "NCHW";
    dimRoundingMode?: "floor" | "round" | "ceil";
    filterShape: [number, number, number, number];
  };
  if (attrs.dataFormat !== "NHWC") {
    throw new Error("conv filter gradient fallback supports NHWC only");
  }
  const info = tf.backend_util.computeConv2DInfo(
    x.shape as [number, number, number, number],
    attrs.filterShape,
    attrs.strides,
    1,
    attrs.pad,
    attrs.dimRoundingMode,
    false,
    "channelsLast",
  );
  const { batchSize, inHeight, inWidth, inChannels, outHeight, outWidth, outChannels } = info;
  const { strideHeight, strideWidth, filterHeight, filterWidth } = info;
  const topPad = info.padInfo.top;
  const leftPad = info.padInfo.left;
  const xVals = backend.readSync(x.dataId);
  const dyVals = backend.readSync(dy.dataId);
  // accumulate in float64: the sum runs over batch x positions, long enough
  // for float32 rounding to drift visibly from the reference kernels
  const dW = new Float64Array(filterHeight * filterWidth * inChannels * outChannels);

  const xRowStride = inWidth * inChannels;
  const xBatchStride = inHeight * xRowStride;
  const dyRowStride = outWidth * outChannels;
  const dyBatchStride = outHeight * dyRowStride;
  for (let wR = 0; wR < filterHeight; ++wR) {
    const yRMin = Math.max(0, Math.ceil((topPad - wR) / strideHeight));
    const yRMax = Math.min(outHeight, (inHeight + topPad - wR) / strideHeight);
    for (let wC = 0; wC < filterWidth; ++wC) {
      const yCMin = Math.max(0, Math.ceil((leftPad - wC) / strideWidth));
      const yCMax = Math.min(outWidth, (inWidth + leftPad - wC) / strideWidth);
      const wBase = (wR * filterWidth + wC) * inChannels * outChannels;
      for (let b = 0; b < batchSize; ++b) {
        for (let yR = yRMin; yR < yRMax; ++yR) {
          const xR = wR + yR * strideHeight - topPad;
          const xRow = b * xBatchStride + xR * xRowStride;
          const dyRow = b * dyBatchStride + yR * dyRowStride;
          for (let yC = yCMin; yC < yCMax; ++yC) {
            const xC = wC + yC * strideWidth - leftPad;
            const xOff = xRow + xC * inChannels;
            const dyOff = dyRow + yC * outChannels;
            for (let d1 = 0; d1 < inChannels; ++d1) {
              const xv = xVals[xOff + d1];
              const wOff = wBase + d1 * outChannels;
              for (let d2 = 0; d2 < outChannels; ++d2) {
                dW[wOff + d2] += xv * dyVals[dyOff + d2];
              }
            }
          }
        }
      }
    }
  }
  return backend.makeOutput(info.filterShape, "float32", undefined, Float32Array.from(dW));
}

let initPromise: Promise<string> | undefined;

/**
 * Pick the fastest available backend and make it training-complete.
 * Idempotent; returns the active backend name. BWLAB_THREADS caps the
 * wasm thread pool when set.
 */
export function initBackend(): Promise<string> {
  if (!initPromise) {
    initPromise = (async () => {
      tf.enableProdMode();
      try {
        // eslint-disable-next-line @typescript-eslint/no-var-requires
        const wasm = require("@tensorflow/tfjs-backend-wasm");
        const threads = Number(process.env.BWLAB_THREADS);
        if (Number.isFinite(threads) && threads >= 1) {
          wasm.setThreadsCount(Math.trunc(threads));
        }
        if (!tf.getKernel("Conv2DBackpropFilter", "wasm")) {
          tf.registerKernel({
            kernelName: "Conv2DBackpropFilter",
            backendName: "wasm",
            kernelFunc: conv2dBackpropFilterKernel as never,
          });
        }
        if (!(await tf.setBackend("wasm"))) {
          throw new Error("wasm backend rejected");
        }
        await tf.ready();
      } catch {
        await tf.ready();
      }
      return tf.getBackend();
    })();
  }
  return initPromise;
}
