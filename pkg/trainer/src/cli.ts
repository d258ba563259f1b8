#!/usr/bin/env node
/**
 * Command line entry points: train, evaluate, predict.
 *
 * train fits a category network on a dataset directory and writes the
 * weights container, a per-parameter metrics table, and a per-epoch loss
 * log. evaluate recomputes the metrics table from saved weights. predict
 * runs saved weights on one curve CSV and prints the denormalized
 * parameter values as JSON.
 */
import * as fs from "fs";
import * as path from "path";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { initBackend } from "./backend";
import { CATEGORY_NAMES, Category } from "./dataset";
import { readWeights } from "./format";
import { modelFromWeights, predictParams } from "./model";
import {
  DEFAULT_BATCH_SIZE,
  DEFAULT_EPOCHS,
  DEFAULT_LEARNING_RATE,
  evaluateOnDataset,
  exportWeights,
  trainOnDataset,
  writeMetricsCsv,
  writeTrainLog,
} from "./train";

const CURVE_HEADER = "step,u_m,f_mps2";

interface Curve {
  u: number[];
  f: number[];
}

/** Read a simulated or measured curve CSV (leading row is the rest point). */
export function readCurveCsv(file: string): Curve {
  const lines = fs.readFileSync(file, "utf-8").trim().split(/\r?\n/);
  if (lines[0] !== CURVE_HEADER) {
    throw new Error(`unexpected curve header: ${JSON.stringify(lines[0])}`);
  }
  const u: number[] = [];
  const f: number[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length !== 3) {
      throw new Error(`malformed curve row: ${JSON.stringify(line)}`);
    }
    u.push(Number(cells[1]));
    f.push(Number(cells[2]));
  }
  return { u, f };
}

function asCategory(value: string): Category {
  if (!(value in CATEGORY_NAMES)) {
    throw new Error(`unknown category ${JSON.stringify(value)}`);
  }
  return value as Category;
}

async function runTrain(argv: {
  dataset: string;
  category: string;
  out: string;
  metrics?: string;
  log?: string;
  epochs?: number;
  batchSize: number;
  seed: number;
  learningRate: number;
}): Promise<void> {
  const category = asCategory(argv.category);
  const opts = {
    category,
    epochs: argv.epochs ?? DEFAULT_EPOCHS[category],
    batchSize: argv.batchSize,
    seed: argv.seed,
    learningRate: argv.learningRate,
  };
  const outDir = path.dirname(path.resolve(argv.out));
  const metricsPath = argv.metrics ?? path.join(outDir, "metrics.csv");
  const logPath = argv.log ?? path.join(outDir, "train_log.csv");
  fs.mkdirSync(outDir, { recursive: true });

  console.log(`backend: ${await initBackend()}`);
  const result = await trainOnDataset(argv.dataset, opts);
  exportWeights(argv.out, result, category);
  writeTrainLog(logPath, opts, result.log);
  const metrics = evaluateOnDataset(result.model, argv.dataset, category);
  writeMetricsCsv(metricsPath, metrics);

  const summary = {
    category,
    epochs: opts.epochs,
    batch_size: opts.batchSize,
    seed: opts.seed,
    learning_rate: opts.learningRate,
    final_loss: result.log[result.log.length - 1].loss,
    r: Object.fromEntries(metrics.map((m) => [m.param, m.r])),
    files: { weights: argv.out, metrics: metricsPath, log: logPath },
  };
  console.log(JSON.stringify(summary, null, 2));
}

async function runEvaluate(argv: { weights: string; dataset: string; metrics?: string }): Promise<void> {
  await initBackend();
  const wf = readWeights(argv.weights);
  const category = asCategory(wf.category);
  const model = modelFromWeights(wf);
  const metrics = evaluateOnDataset(model, argv.dataset, category);
  if (argv.metrics) {
    writeMetricsCsv(argv.metrics, metrics);
  }
  console.log(
    JSON.stringify(
      {
        category,
        metrics: metrics.map((m) => ({ param: m.param, r: m.r, mse_train: m.mseTrain, mse_test: m.mseTest })),
        files: argv.metrics ? { metrics: argv.metrics } : {},
      },
      null,
      2,
    ),
  );
}

async function runPredict(argv: { weights: string; curve: string }): Promise<void> {
  await initBackend();
  const wf = readWeights(argv.weights);
  const curve = readCurveCsv(argv.curve);
  if (curve.u.length - 1 !== wf.d) {
    throw new Error(`curve has ${curve.u.length - 1} steps but the network expects ${wf.d}`);
  }
  const model = modelFromWeights(wf);
  // row 0 is the rest point; the network sees the d points that follow
  const params = predictParams(wf, model, curve.u.slice(1), curve.f.slice(1));
  console.log(JSON.stringify({ category: wf.category, params }, null, 2));
}

export function main(args: string[]): Promise<unknown> {
  return yargs(args)
    .scriptName("cnn-trainer")
    .command(
      "train",
      "train a category network on a dataset directory",
      (y) =>
        y
          .option("dataset", { type: "string", demandOption: true, describe: "dataset directory (manifest.json + records.bin)" })
          .option("category", { type: "string", demandOption: true, choices: Object.keys(CATEGORY_NAMES), describe: "parameter category to predict" })
          .option("out", { type: "string", demandOption: true, describe: "output weights file (.bwnn)" })
          .option("metrics", { type: "string", describe: "metrics CSV path (default: metrics.csv next to the weights)" })
          .option("log", { type: "string", describe: "training log CSV path (default: train_log.csv next to the weights)" })
          .option("epochs", { type: "number", describe: "training epochs (default depends on category)" })
          .option("batch-size", { type: "number", default: DEFAULT_BATCH_SIZE })
          .option("seed", { type: "number", default: 0 })
          .option("learning-rate", { type: "number", default: DEFAULT_LEARNING_RATE }),
      (argv) => runTrain(argv as never),
    )
    .command(
      "evaluate",
      "recompute the metrics table from saved weights",
      (y) =>
        y
          .option("weights", { type: "string", demandOption: true })
          .option("dataset", { type: "string", demandOption: true })
          .option("metrics", { type: "string", describe: "also write the table to this CSV path" }),
      (argv) => runEvaluate(argv as never),
    )
    .command(
      "predict",
      "predict parameters from one curve CSV",
      (y) =>
        y
          .option("weights", { type: "string", demandOption: true })
          .option("curve", { type: "string", demandOption: true, describe: `curve CSV with header ${CURVE_HEADER}` }),
      (argv) => runPredict(argv as never),
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(err ? `error: ${err.message}` : msg);
      process.exit(err ? 1 : 2);
    })
    .parseAsync();
}

if (require.main === module) {
  main(hideBin(process.argv)).catch((err) => {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  });
}
