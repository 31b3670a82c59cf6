/** Small two-module inception classifier with optional conservative
 * projection after each module.
 *
 * Each module runs four parallel branches (1x1; 1x1 -> 3x3; 1x1 -> 5x5;
 * 3x3 maxpool -> 1x1), every conv with a ReLU, and concatenates them to
 * 4x the branch width. A stride-2 pool feeds each later module and the
 * head (global average pool into a dense layer). The network is built as
 * segments separated by boundary layers so the projection, which runs in
 * the service outside the tf graph, splices into both passes: GDI2 places
 * one projection on the concatenated module output, GDI3 one per branch
 * block via channel subsets.
 */

import * as tf from "@tensorflow/tfjs";

import type { GfcClient } from "../client.js";
import type { ExperimentConfig } from "./config.js";
import { GidBoundary } from "./gid.js";
import { Rng } from "./rng.js";

export interface Segment {
  vars: tf.Variable[];
  /** Pure function of the input and explicit weight tensors (same order as vars). */
  apply(x: tf.Tensor4D, ws: tf.Tensor[]): tf.Tensor4D;
}

let modelCounter = 0;

export class InceptionModel {
  readonly segments: Segment[] = [];
  readonly boundaries: (GidBoundary | null)[] = [];
  readonly head: { kernel: tf.Variable; bias: tf.Variable };
  private readonly scope: string;

  constructor(readonly cfg: ExperimentConfig, client: GfcClient, rng: Rng) {
    // tf registers trainable variables globally by name, so every model
    // instance gets its own prefix
    this.scope = `net${modelCounter++}`;
    let inChannels = 1;
    for (let m = 0; m < cfg.inceptionModules; m++) {
      const c = cfg.channelsPerBranch[m];
      this.segments.push(this.buildModuleSegment(m, inChannels, c, rng));
      const outChannels = 4 * c;
      if (cfg.gidEnabled) {
        const subsets: (number[] | null)[] =
          cfg.gidVariant === "GDI3"
            ? branchSubsets(c)
            : [cfg.channelSubset];
        this.boundaries.push(
          new GidBoundary(client, outChannels, cfg.mixer, cfg.gidAblationIdentity,
                          subsets, `${this.scope}/gid${m}`, rng),
        );
      } else {
        this.boundaries.push(null);
      }
      inChannels = outChannels;
    }
    this.head = {
      kernel: tf.variable(glorot(rng, [inChannels, cfg.classes]), true,
                          `${this.scope}/head/kernel`),
      bias: tf.variable(tf.zeros([cfg.classes]), true, `${this.scope}/head/bias`),
    };
  }

  private buildModuleSegment(m: number, cin: number, c: number, rng: Rng): Segment {
    const mk = (k: number, ci: number, co: number, name: string) => [
      tf.variable(glorot(rng, [k, k, ci, co]), true, `${this.scope}/m${m}/${name}/kernel`),
      tf.variable(tf.zeros([co]), true, `${this.scope}/m${m}/${name}/bias`),
    ];
    const vars = [
      ...mk(1, cin, c, "b1"),
      ...mk(1, cin, c, "b3a"), ...mk(3, c, c, "b3b"),
      ...mk(1, cin, c, "b5a"), ...mk(5, c, c, "b5b"),
      ...mk(1, cin, c, "bp"),
    ] as tf.Variable[];
    const downsample = m > 0;

    const apply = (x: tf.Tensor4D, ws: tf.Tensor[]): tf.Tensor4D =>
      tf.tidy(() => {
        const inp = downsample ? (tf.maxPool(x, 2, 2, "same") as tf.Tensor4D) : x;
        const cv = (t: tf.Tensor4D, i: number) =>
          tf.relu(tf.add(tf.conv2d(t, ws[2 * i] as tf.Tensor4D, 1, "same"),
                         ws[2 * i + 1])) as tf.Tensor4D;
        const y1 = cv(inp, 0);
        const y3 = cv(cv(inp, 1), 2);
        const y5 = cv(cv(inp, 3), 4);
        const yp = cv(tf.maxPool(inp, 3, 1, "same") as tf.Tensor4D, 5);
        return tf.concat([y1, y3, y5, yp], 3) as tf.Tensor4D;
      });
    return { vars, apply };
  }

  /** Head as a pure function of explicit weights; returns per-class scores. */
  headLogits(x: tf.Tensor4D, kernel: tf.Tensor, bias: tf.Tensor): tf.Tensor2D {
    return tf.tidy(() => {
      const pooled = tf.maxPool(x, 2, 2, "same");
      const gap = tf.mean(pooled, [1, 2]) as tf.Tensor2D;
      return tf.add(tf.matMul(gap, kernel as tf.Tensor2D), bias) as tf.Tensor2D;
    });
  }

  allVariables(): tf.Variable[] {
    const vars = this.segments.flatMap((s) => s.vars);
    for (const b of this.boundaries) {
      if (b) for (const w of b.weightVars) if (w) vars.push(w);
    }
    vars.push(this.head.kernel, this.head.bias);
    return vars;
  }

  paramCount(): number {
    return this.allVariables().reduce((a, v) => a + v.size, 0);
  }

  mixerParamCount(): number {
    return this.boundaries.reduce((a, b) => a + (b ? b.paramCount() : 0), 0);
  }

  /** Inference path; boundary intermediates are disposed. */
  async logits(x: tf.Tensor4D): Promise<tf.Tensor2D> {
    let cur = x;
    const trash: tf.Tensor[] = [];
    for (let i = 0; i < this.segments.length; i++) {
      const h = this.segments[i].apply(cur, this.segments[i].vars);
      if (cur !== x) trash.push(cur);
      const b = this.boundaries[i];
      if (b) {
        const { out, inters } = await b.forward(h);
        trash.push(h, ...inters.filter((t) => t !== h));
        cur = out;
      } else {
        cur = h;
      }
    }
    const out = this.headLogits(cur, this.head.kernel, this.head.bias);
    if (cur !== x) trash.push(cur);
    for (const t of new Set(trash)) t.dispose();
    return out;
  }
}

export function branchSubsets(channelsPerBranch: number): number[][] {
  return [0, 1, 2, 3].map((b) =>
    Array.from({ length: channelsPerBranch }, (_, i) => b * channelsPerBranch + i));
}

function glorot(rng: Rng, shape: number[]): tf.Tensor {
  const fanIn = shape.slice(0, -1).reduce((a, b) => a * b, 1);
  const fanOut = shape[shape.length - 1];
  const limit = Math.sqrt(6 / (fanIn + fanOut));
  const data = new Float32Array(shape.reduce((a, b) => a * b, 1));
  for (let i = 0; i < data.length; i++) data[i] = rng.uniform(-limit, limit);
  return tf.tensor(data, shape);
}

export function lossFromLogits(logits: tf.Tensor2D, labels: tf.Tensor1D,
                               classes: number): tf.Tensor {
  return tf.tidy(() =>
    tf.losses.softmaxCrossEntropy(tf.oneHot(labels, classes), logits));
}
