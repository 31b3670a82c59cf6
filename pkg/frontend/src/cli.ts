#!/usr/bin/env node
/** nnharness: train and inspect the inception classifier against the gfconv service. */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { GfcError } from "./errors.js";
import { loadConfig, type ExperimentConfig } from "./harness/config.js";
import { fetchMnist, writeSyntheticDataset } from "./harness/data.js";
import { assertGradients } from "./harness/gradcheck.js";
import { writeCurvesPng, type Curve } from "./harness/plot.js";
import { connectService } from "./harness/service.js";
import { evaluateTrend, parseRunCsv } from "./harness/trend.js";
import { runComparison, runExperiment } from "./harness/train.js";

const COLORS: [number, number, number][] = [
  [31, 119, 180],
  [255, 127, 14],
  [44, 160, 44],
  [214, 39, 40],
];

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .scriptName("nnharness")
    .command("run", "train on the configured dataset and log RunRecords", (y) =>
      y.option("config", { type: "string", describe: "JSON config file" })
        .option("seed", { type: "number", default: 1 })
        .option("iterations", { type: "number" })
        .option("eval-interval", { type: "number" })
        .option("data-dir", { type: "string" })
        .option("out-dir", { type: "string", default: "runs" })
        .option("service-url", { type: "string" })
        .option("variant-only", {
          type: "boolean", default: false,
          describe: "skip the baseline counterpart run",
        })
        .option("curl-check-every", { type: "number", default: 1000 }))
    .command("synth", "write a synthetic IDX dataset for smoke runs", (y) =>
      y.option("data-dir", { type: "string", demandOption: true })
        .option("train", { type: "number", default: 2000 })
        .option("test", { type: "number", default: 400 })
        .option("seed", { type: "number", default: 1 }))
    .command("fetch", "download the MNIST IDX files (pinned checksums)", (y) =>
      y.option("data-dir", { type: "string", demandOption: true }))
    .command("gradcheck", "finite-difference check through the projection layer", (y) =>
      y.option("mixer", {
        choices: ["identity", "diagonal", "full"] as const, default: "identity" as const,
      })
        .option("corrupt", { type: "boolean", default: false })
        .option("service-url", { type: "string" }))
    .command("plot", "render run CSVs into a PNG", (y) =>
      y.option("csv", { type: "string", array: true, demandOption: true })
        .option("out", { type: "string", demandOption: true }))
    .command("trend", "evaluate the multi-seed convergence trend", (y) =>
      y.option("baseline", { type: "string", array: true, demandOption: true })
        .option("gid", { type: "string", array: true, demandOption: true })
        .option("threshold", { type: "number", default: 0.97 }))
    .demandCommand(1)
    .strict()
    .help()
    .parse();

  const command = String(argv._[0]);

  if (command === "synth") {
    writeSyntheticDataset(argv["data-dir"] as string, argv.train as number,
                          argv.test as number, argv.seed as number);
    console.log(`synthetic dataset written to ${argv["data-dir"]}`);
    return 0;
  }

  if (command === "fetch") {
    const files = await fetchMnist(argv["data-dir"] as string);
    for (const f of files) console.log(f);
    return 0;
  }

  if (command === "plot") {
    const csvs = argv.csv as string[];
    const curves: Curve[] = csvs.map((path, i) => {
      const records = parseRunCsv(path);
      return {
        label: path,
        xs: records.map((r) => r.iteration),
        ys: records.map((r) => r.smoothed),
        color: COLORS[i % COLORS.length],
      };
    });
    writeCurvesPng(argv.out as string, curves, { yMin: 0, yMax: 1 });
    console.log(`wrote ${argv.out}`);
    return 0;
  }

  if (command === "trend") {
    const report = evaluateTrend(argv.baseline as string[], argv.gid as string[],
                                 argv.threshold as number);
    console.log(JSON.stringify(report, null, 2));
    return report.passed ? 0 : 1;
  }

  if (command === "gradcheck") {
    const service = await connectService((argv["service-url"] as string) ?? null);
    try {
      const report = await assertGradients(service.client, {
        mixer: argv.mixer as "identity" | "diagonal" | "full",
        corrupt: argv.corrupt as boolean,
      });
      console.log(
        `gradient check passed: ${report.checkedInputs} inputs ` +
        `(max rel ${report.maxRelInput.toExponential(2)}), ` +
        `${report.checkedWeights} weights ` +
        `(max rel ${report.maxRelWeights.toExponential(2)})`,
      );
      return 0;
    } finally {
      await service.stop();
    }
  }

  if (command === "run") {
    const overrides: Partial<ExperimentConfig> = { seed: argv.seed as number };
    if (argv.iterations) overrides.iterations = argv.iterations as number;
    if (argv["eval-interval"]) overrides.evalInterval = argv["eval-interval"] as number;
    if (argv["data-dir"]) overrides.dataDir = argv["data-dir"] as string;
    if (argv["service-url"]) overrides.serviceUrl = argv["service-url"] as string;
    const cfg = loadConfig(argv.config as string | undefined, overrides);
    const service = await connectService(cfg.serviceUrl);
    const outDir = argv["out-dir"] as string;
    try {
      const opts = {
        log: (line: string) => console.log(line),
        curlCheckEvery: argv["curl-check-every"] as number,
      };
      if (argv["variant-only"]) {
        const result = await runExperiment(cfg, service.client, {
          ...opts, csvPath: `${outDir}/${cfg.gidEnabled ? "gid" : "baseline"}-seed${cfg.seed}.csv`,
        });
        console.log(`final smoothed accuracy ${result.finalSmoothed.toFixed(4)}`);
      } else {
        const { baseline, variant } = await runComparison(cfg, service.client, outDir, opts);
        console.log(
          `final smoothed: baseline ${baseline.finalSmoothed.toFixed(4)}, ` +
          `gid ${variant.finalSmoothed.toFixed(4)}`,
        );
      }
      return 0;
    } finally {
      await service.stop();
    }
  }

  console.error(`unknown command ${command}`);
  return 1;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    if (err instanceof GfcError) {
      console.error(`error [${err.code}]: ${err.message}`);
    } else {
      console.error(`error: ${err?.stack ?? err}`);
    }
    process.exit(1);
  },
);
