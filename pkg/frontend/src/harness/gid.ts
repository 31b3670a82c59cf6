/** Conservative-projection boundary between model segments.
 *
 * The projection itself runs in the gfconv service; this class converts
 * NHWC activations to the service's (batch, channels, H, W) layout, sends
 * the current mixer weights with each call, and turns the adjoint reply
 * back into tensors for the surrounding tf graph.
 *
 * A boundary applies one projection per channel subset: the post-concat
 * placement uses a single subset covering everything, the per-branch
 * placement one subset per branch block. With the ablation switch the
 * integration is replaced by the bare channel mix, reducing the network
 * to the baseline plus a linear per-feature scale.
 */

import * as tf from "@tensorflow/tfjs";

import { field, GfcClient, type FieldData, type LayerSpecInput } from "../client.js";
import type { MixerChoice } from "./config.js";
import { Rng } from "./rng.js";

function toNchw(t: tf.Tensor4D): FieldData {
  const [b, h, w, c] = t.shape;
  const data = tf.tidy(() => tf.transpose(t, [0, 3, 1, 2])).dataSync() as Float32Array;
  return field(new Float32Array(data), b, c, [h, w]);
}

function toNhwc(f: FieldData): tf.Tensor4D {
  const [h, w] = f.shape;
  const data = f.data instanceof Float32Array ? f.data : new Float32Array(f.data);
  return tf.tidy(() =>
    tf.transpose(tf.tensor4d(data, [f.batch, f.channels, h, w]), [0, 2, 3, 1]),
  ) as tf.Tensor4D;
}

export interface BoundaryForward {
  out: tf.Tensor4D;
  /** Input seen by each projection call; needed for weight gradients. */
  inters: tf.Tensor4D[];
}

export class GidBoundary {
  readonly weightVars: (tf.Variable | null)[];
  readonly subsets: (number[] | null)[];

  constructor(
    private readonly client: GfcClient,
    readonly channels: number,
    readonly mixerKind: MixerChoice,
    readonly ablationIdentity: boolean,
    subsets: (number[] | null)[],
    readonly name: string,
    rng: Rng,
  ) {
    this.subsets = subsets.length ? subsets : [null];
    if (ablationIdentity && mixerKind === "full" && this.subsets.some((s) => s !== null)) {
      throw new Error("full-mixer ablation supports only the all-channels subset");
    }
    this.weightVars = this.subsets.map((subset, k) => {
      const n = subset ? subset.length : channels;
      if (mixerKind === "diagonal") {
        return tf.variable(tf.ones([n]), true, `${name}/mixer${k}`);
      }
      if (mixerKind === "full") {
        const init = new Float32Array(n * n);
        for (let i = 0; i < n; i++) {
          for (let j = 0; j < n; j++) {
            init[i * n + j] = (i === j ? 1 : 0) + 0.01 * rng.normal();
          }
        }
        return tf.variable(tf.tensor2d(init, [n, n]), true, `${name}/mixer${k}`);
      }
      return null;
    });
  }

  paramCount(): number {
    return this.weightVars.reduce((a, v) => a + (v ? v.size : 0), 0);
  }

  private specFor(k: number): LayerSpecInput {
    let mixer: LayerSpecInput["mixer"] = { kind: "identity" };
    const w = this.weightVars[k];
    if (this.mixerKind === "diagonal" && w) {
      mixer = { kind: "diagonal", weights: Array.from(w.dataSync()) };
    } else if (this.mixerKind === "full" && w) {
      const flat = Array.from(w.dataSync());
      const n = w.shape[0] as number;
      const rows: number[][] = [];
      for (let i = 0; i < n; i++) rows.push(flat.slice(i * n, (i + 1) * n));
      mixer = { kind: "full", weights: rows };
    }
    return {
      kind: "GID",
      mixer,
      constant: "mean",
      precision: "single",
      channelSubset: this.subsets[k] ?? undefined,
    };
  }

  /** The mixer without the projection (ablation mode), as a tf op. */
  private mixOnly(x: tf.Tensor4D, k: number): tf.Tensor4D {
    const w = this.weightVars[k];
    if (!w) return x;
    return tf.tidy(() => {
      if (this.mixerKind === "diagonal") {
        const subset = this.subsets[k];
        let scale: tf.Tensor;
        if (subset) {
          const full = new Float32Array(this.channels).fill(1);
          const indices = tf.tensor1d(subset, "int32");
          scale = tf.tensor1d(full).add(
            tf.scatterND(indices.reshape([-1, 1]), tf.sub(w, 1), [this.channels]));
        } else {
          scale = w;
        }
        return tf.mul(x, tf.reshape(scale, [1, 1, 1, -1])) as tf.Tensor4D;
      }
      const [b, h, wd, c] = x.shape;
      const flat = tf.reshape(x, [b * h * wd, c]);
      return tf.reshape(tf.matMul(flat, w as tf.Tensor2D, false, true),
                        [b, h, wd, c]) as tf.Tensor4D;
    });
  }

  async forward(x: tf.Tensor4D): Promise<BoundaryForward> {
    const inters: tf.Tensor4D[] = [];
    let cur = x;
    for (let k = 0; k < this.subsets.length; k++) {
      inters.push(cur);
      if (this.ablationIdentity) {
        cur = this.mixOnly(cur, k);
      } else {
        cur = toNhwc(await this.client.layerForward(toNchw(cur), this.specFor(k)));
      }
    }
    return { out: cur, inters };
  }

  /** Pulls the cotangent back through every projection, collecting weight grads. */
  async adjoint(gradOut: tf.Tensor4D, inters: tf.Tensor4D[]):
      Promise<{ gradInput: tf.Tensor4D; weightGrads: (tf.Tensor | null)[] }> {
    let g = gradOut;
    const weightGrads: (tf.Tensor | null)[] = new Array(this.subsets.length).fill(null);
    for (let k = this.subsets.length - 1; k >= 0; k--) {
      if (this.ablationIdentity) {
        const w = this.weightVars[k];
        if (!w) continue;
        const gFixed = g;
        const grads = tf.grads((xx: tf.Tensor, ww: tf.Tensor) =>
          tf.sum(tf.mul(this.mixWith(xx as tf.Tensor4D, ww, k), gFixed)),
        )([inters[k], w]);
        g = grads[0] as tf.Tensor4D;
        weightGrads[k] = grads[1];
      } else {
        const res = await this.client.layerAdjoint(
          toNchw(g), this.specFor(k), toNchw(inters[k]));
        g = toNhwc(res.gradInput);
        const w = this.weightVars[k];
        if (res.weightGrad && w) {
          weightGrads[k] = tf.tensor(new Float32Array(res.weightGrad.data),
                                     w.shape as number[]);
        }
      }
    }
    return { gradInput: g, weightGrads };
  }

  /** mixOnly with the weights passed explicitly, so tf.grads can reach them. */
  private mixWith(x: tf.Tensor4D, w: tf.Tensor, k: number): tf.Tensor4D {
    if (this.mixerKind === "diagonal") {
      const subset = this.subsets[k];
      if (subset) {
        const indices = tf.tensor1d(subset, "int32").reshape([-1, 1]);
        const scale = tf.add(tf.ones([this.channels]),
                             tf.scatterND(indices, tf.sub(w, 1), [this.channels]));
        return tf.mul(x, tf.reshape(scale, [1, 1, 1, -1])) as tf.Tensor4D;
      }
      return tf.mul(x, tf.reshape(w, [1, 1, 1, -1])) as tf.Tensor4D;
    }
    const [b, h, wd, c] = x.shape;
    const flat = tf.reshape(x, [b * h * wd, c]);
    return tf.reshape(tf.matMul(flat, w as tf.Tensor2D, false, true),
                      [b, h, wd, c]) as tf.Tensor4D;
  }
}
