/** Training loop with the projection spliced between tf segments.
 *
 * The loss gradient flows backward in three kinds of hops: tf.grads pulls
 * it through the head and each inception segment, and the service's layer
 * adjoint pulls it through every projection boundary (also yielding the
 * mixer weight gradients). Adam updates tf weights and mixer weights alike
 * through one named-gradient map.
 */

import { appendFileSync, mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import * as tf from "@tensorflow/tfjs";

import { GfcClient } from "../client.js";
import { DivergenceError } from "../errors.js";
import type { ExperimentConfig } from "./config.js";
import { BatchSampler, loadSplit, type Dataset } from "./data.js";
import type { BoundaryForward } from "./gid.js";
import { InceptionModel, lossFromLogits } from "./model.js";
import { writeCurvesPng, type Curve } from "./plot.js";
import { Rng } from "./rng.js";

export interface RunRecord {
  iteration: number;
  valAccuracy: number;
  smoothed: number;
  wallTime: number;
}

export interface RunResult {
  records: RunRecord[];
  finalSmoothed: number;
  model: InceptionModel;
}

export function recordsToCsv(records: RunRecord[]): string {
  const lines = ["iteration,val_accuracy,smoothed,wall_time"];
  for (const r of records) {
    lines.push(
      `${r.iteration},${r.valAccuracy.toFixed(6)},${r.smoothed.toFixed(6)},` +
      `${r.wallTime.toFixed(3)}`,
    );
  }
  return lines.join("\n") + "\n";
}

export class Trainer {
  readonly model: InceptionModel;
  private readonly optimizer: tf.Optimizer;

  constructor(readonly cfg: ExperimentConfig, readonly client: GfcClient) {
    this.model = new InceptionModel(cfg, client, new Rng(cfg.seed));
    this.optimizer = tf.train.adam(cfg.learningRate);
  }

  dispose(): void {
    for (const v of this.model.allVariables()) v.dispose();
    this.optimizer.dispose();
  }

  /** One optimizer step; returns the scalar loss. */
  async step(images: Float32Array, labels: Int32Array): Promise<number> {
    const cfg = this.cfg;
    const model = this.model;
    const trash: tf.Tensor[] = [];
    const keep = (t: tf.Tensor) => {
      trash.push(t);
      return t;
    };
    const x = keep(tf.tensor4d(images, [labels.length, cfg.imageSide, cfg.imageSide, 1]));
    const labelsT = keep(tf.tensor1d(labels, "int32")) as tf.Tensor1D;

    // forward, retaining segment inputs/outputs and boundary intermediates
    const segInputs: tf.Tensor4D[] = [];
    const boundaryFwd: (BoundaryForward | null)[] = [];
    let cur = x as tf.Tensor4D;
    for (let i = 0; i < model.segments.length; i++) {
      segInputs.push(cur);
      const h = keep(model.segments[i].apply(cur, model.segments[i].vars)) as tf.Tensor4D;
      const b = model.boundaries[i];
      if (b) {
        const fwd = await b.forward(h);
        keep(fwd.out);
        for (const t of fwd.inters) if (t !== h) keep(t);
        boundaryFwd.push(fwd);
        cur = fwd.out;
      } else {
        boundaryFwd.push(null);
        cur = h;
      }
    }

    const named: tf.NamedTensorMap = {};
    // head: value and gradients in one pass
    const headFn = (xin: tf.Tensor, kernel: tf.Tensor, bias: tf.Tensor) =>
      lossFromLogits(model.headLogits(xin as tf.Tensor4D, kernel, bias),
                     labelsT, cfg.classes) as tf.Scalar;
    const { value, grads } = tf.valueAndGrads(headFn)(
      [cur, model.head.kernel, model.head.bias]);
    keep(value);
    const loss = (value.dataSync() as Float32Array)[0];
    if (!Number.isFinite(loss)) {
      for (const t of new Set(trash)) t.dispose();
      grads.forEach((g) => g.dispose());
      throw new DivergenceError(`loss became ${loss}; aborting the run`);
    }
    let dCur = keep(grads[0]) as tf.Tensor4D;
    named[model.head.kernel.name] = keep(grads[1]);
    named[model.head.bias.name] = keep(grads[2]);

    for (let i = model.segments.length - 1; i >= 0; i--) {
      const b = model.boundaries[i];
      if (b) {
        const adj = await b.adjoint(dCur, boundaryFwd[i]!.inters);
        dCur = keep(adj.gradInput) as tf.Tensor4D;
        adj.weightGrads.forEach((wg, k) => {
          const v = b.weightVars[k];
          if (wg && v) named[v.name] = keep(wg);
        });
      }
      const seg = model.segments[i];
      const segFn = (...args: tf.Tensor[]) =>
        seg.apply(args[0] as tf.Tensor4D, args.slice(1));
      const gs = tf.grads(segFn)([segInputs[i], ...seg.vars], dCur);
      dCur = keep(gs[0]) as tf.Tensor4D;
      seg.vars.forEach((v, j) => {
        named[v.name] = keep(gs[j + 1]);
      });
    }

    this.optimizer.applyGradients(named);
    for (const t of new Set(trash)) t.dispose();
    return loss;
  }

  /** Top-1 accuracy over a dataset, evaluated in chunks. */
  async evaluate(ds: Dataset, chunk = 250): Promise<number> {
    const cfg = this.cfg;
    const px = ds.side * ds.side;
    let correct = 0;
    for (let start = 0; start < ds.count; start += chunk) {
      const end = Math.min(start + chunk, ds.count);
      const images = new Float32Array((end - start) * px);
      for (let i = 0; i < (end - start) * px; i++) {
        images[i] = ds.images[start * px + i] / 255;
      }
      const x = tf.tensor4d(images, [end - start, cfg.imageSide, cfg.imageSide, 1]);
      const logits = await this.model.logits(x);
      const pred = logits.argMax(1).dataSync();
      for (let i = 0; i < end - start; i++) {
        if (pred[i] === ds.labels[start + i]) correct++;
      }
      x.dispose();
      logits.dispose();
    }
    return correct / ds.count;
  }

  /** Max curl just inside the boundary outputs, via the service diagnostic. */
  async spotCheckCurl(images: Float32Array, count: number): Promise<number> {
    const cfg = this.cfg;
    if (!cfg.gidEnabled || cfg.gidAblationIdentity) return 0;
    const x = tf.tensor4d(images, [count, cfg.imageSide, cfg.imageSide, 1]);
    let cur = x as tf.Tensor4D;
    let worst = 0;
    const trash: tf.Tensor[] = [cur];
    for (let i = 0; i < this.model.segments.length; i++) {
      const h = this.model.segments[i].apply(cur, this.model.segments[i].vars);
      trash.push(h);
      const b = this.model.boundaries[i];
      if (!b) {
        cur = h;
        continue;
      }
      const fwd = await b.forward(h);
      trash.push(fwd.out, ...fwd.inters.filter((t) => t !== h));
      cur = fwd.out;
      const [bn, hh, ww, cc] = cur.shape;
      const nchw = tf.transpose(cur, [0, 3, 1, 2]);
      trash.push(nchw);
      const data = nchw.dataSync() as Float32Array;
      for (let pair = 0; pair < Math.floor(cc / 2); pair++) {
        const plane = hh * ww;
        const u = data.subarray((2 * pair) * plane, (2 * pair + 1) * plane);
        const v = data.subarray((2 * pair + 1) * plane, (2 * pair + 2) * plane);
        const curl = await this.client.curl([
          { dtype: "f32", batch: 1, channels: 1, shape: [hh, ww], data: new Float32Array(u) },
          { dtype: "f32", batch: 1, channels: 1, shape: [hh, ww], data: new Float32Array(v) },
        ]);
        const cdat = curl[0].data;
        for (let r = 0; r < hh - 1; r++) {
          for (let s = 0; s < ww - 1; s++) {
            worst = Math.max(worst, Math.abs(cdat[r * ww + s]));
          }
        }
        if (bn > 1) break; // one batch item is enough for a spot check
      }
    }
    for (const t of new Set(trash)) t.dispose();
    return worst;
  }
}

export interface RunOptions {
  log?: (line: string) => void;
  csvPath?: string;
  curlCheckEvery?: number;
}

export async function runExperiment(cfg: ExperimentConfig, client: GfcClient,
                                    opts: RunOptions = {}): Promise<RunResult> {
  const log = opts.log ?? (() => {});
  const split = loadSplit(cfg.dataDir, cfg.validationSize);
  const trainer = new Trainer(cfg, client);
  const sampler = new BatchSampler(split.train, cfg.batchSize, new Rng(cfg.seed ^ 0x9e3779b9));
  const records: RunRecord[] = [];
  let smoothed: number | null = null;
  const started = Date.now();
  if (opts.csvPath) {
    mkdirSync(dirname(opts.csvPath), { recursive: true });
    writeFileSync(opts.csvPath, "iteration,val_accuracy,smoothed,wall_time\n");
  }
  for (let it = 1; it <= cfg.iterations; it++) {
    const batch = sampler.next();
    const loss = await trainer.step(batch.images, batch.labels);
    if (opts.curlCheckEvery && it % opts.curlCheckEvery === 0) {
      const worst = await trainer.spotCheckCurl(batch.images, batch.labels.length);
      log(`iter ${it} curl spot check ${worst.toExponential(2)}`);
    }
    if (it % cfg.evalInterval === 0 || it === cfg.iterations) {
      const acc = await trainer.evaluate(split.validation);
      smoothed = smoothed === null
        ? acc
        : cfg.emaFactor * smoothed + (1 - cfg.emaFactor) * acc;
      const rec: RunRecord = {
        iteration: it,
        valAccuracy: acc,
        smoothed,
        wallTime: (Date.now() - started) / 1000,
      };
      records.push(rec);
      if (opts.csvPath) {
        appendFileSync(
          opts.csvPath,
          `${rec.iteration},${rec.valAccuracy.toFixed(6)},` +
          `${rec.smoothed.toFixed(6)},${rec.wallTime.toFixed(3)}\n`,
        );
      }
      log(`iter ${it} loss ${loss.toFixed(4)} val ${acc.toFixed(4)} ` +
          `smoothed ${smoothed.toFixed(4)}`);
    }
  }
  return { records, finalSmoothed: smoothed ?? 0, model: trainer.model };
}

/** Train the configured variant and its counterpart, plot both curves. */
export async function runComparison(cfg: ExperimentConfig, client: GfcClient,
                                    outDir: string, opts: RunOptions = {}):
    Promise<{ baseline: RunResult; variant: RunResult }> {
  mkdirSync(outDir, { recursive: true });
  const baseCfg = { ...cfg, gidEnabled: false };
  const log = opts.log ?? (() => {});
  log("training baseline...");
  const baseline = await runExperiment(baseCfg, client, {
    ...opts, csvPath: `${outDir}/baseline-seed${cfg.seed}.csv`,
  });
  log("training projection variant...");
  const variant = await runExperiment({ ...cfg, gidEnabled: true }, client, {
    ...opts, csvPath: `${outDir}/gid-seed${cfg.seed}.csv`,
  });
  const curves: Curve[] = [
    {
      label: "baseline",
      xs: baseline.records.map((r) => r.iteration),
      ys: baseline.records.map((r) => r.smoothed),
      color: [31, 119, 180],
    },
    {
      label: "gid",
      xs: variant.records.map((r) => r.iteration),
      ys: variant.records.map((r) => r.smoothed),
      color: [255, 127, 14],
    },
  ];
  writeCurvesPng(`${outDir}/comparison-seed${cfg.seed}.png`, curves, { yMin: 0, yMax: 1 });
  return { baseline, variant };
}
