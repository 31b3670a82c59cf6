/** Finite-difference check of the projection layer's analytic gradients.
 *
 * Uses a tiny 6x6 four-channel instance in f32. The layer is linear in
 * both its input and its mixer weights, so a central difference with a
 * large step is exact up to f32 rounding; the analytic side comes from the
 * service adjoint. A deliberately corrupted mode negates the analytic
 * gradients so the harness can prove the check has teeth.
 */

import { GfcClient, field, type FieldData, type LayerSpecInput } from "../client.js";
import { GradientCheckError } from "../errors.js";
import { Rng } from "./rng.js";

export interface GradCheckOptions {
  mixer?: "identity" | "diagonal" | "full";
  corrupt?: boolean;
  tolerance?: number;
  side?: number;
  channels?: number;
  seed?: number;
}

export interface GradCheckReport {
  passed: boolean;
  maxRelInput: number;
  maxRelWeights: number;
  checkedInputs: number;
  checkedWeights: number;
  firstFailure: string | null;
}

export async function gradientCheck(client: GfcClient,
                                    opts: GradCheckOptions = {}): Promise<GradCheckReport> {
  const side = opts.side ?? 6;
  const channels = opts.channels ?? 4;
  const tolerance = opts.tolerance ?? 1e-4;
  const rng = new Rng(opts.seed ?? 7);
  const n = side * side * channels;

  const x = new Float32Array(n);
  const g = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    x[i] = Math.fround(rng.normal());
    g[i] = Math.fround(rng.normal());
  }
  let weights: number[] | number[][] | undefined;
  const mixerKind = opts.mixer ?? "identity";
  if (mixerKind === "diagonal") {
    weights = Array.from({ length: channels }, () => 1 + 0.2 * rng.normal());
  } else if (mixerKind === "full") {
    weights = Array.from({ length: channels }, (_, i) =>
      Array.from({ length: channels }, (_, j) => (i === j ? 1 : 0) + 0.1 * rng.normal()));
  }
  const spec = (w = weights): LayerSpecInput => ({
    kind: "GID",
    mixer: mixerKind === "identity" ? { kind: "identity" } : { kind: mixerKind, weights: w },
    constant: "mean",
    precision: "single",
  });
  const asField = (arr: Float32Array): FieldData =>
    field(arr, 1, channels, [side, side]);

  const objective = async (xs: Float32Array, w = weights): Promise<number> => {
    const y = await client.layerForward(asField(xs), spec(w));
    let total = 0;
    for (let i = 0; i < n; i++) total += y.data[i] * g[i];
    return total;
  };

  const adj = await client.layerAdjoint(asField(g), spec(), asField(x));
  const sign = opts.corrupt ? -1 : 1;
  const analyticInput = adj.gradInput.data;
  const h = 0.5; // layer is linear, so any step is exact up to rounding

  let maxRelInput = 0;
  let firstFailure: string | null = null;
  const scaleProbe = Math.max(...Array.from(analyticInput, Math.abs), 1e-6);
  for (let i = 0; i < n; i++) {
    const xp = new Float32Array(x);
    const xm = new Float32Array(x);
    xp[i] += h;
    xm[i] -= h;
    const fd = ((await objective(xp)) - (await objective(xm))) / (2 * h);
    const rel = Math.abs(sign * analyticInput[i] - fd) / scaleProbe;
    if (rel > maxRelInput) maxRelInput = rel;
    if (rel > tolerance && firstFailure === null) {
      firstFailure = `input[${i}]`;
    }
  }

  let maxRelWeights = 0;
  let checkedWeights = 0;
  if (mixerKind !== "identity" && adj.weightGrad) {
    const wg = adj.weightGrad.data;
    const flatW: number[] =
      mixerKind === "diagonal" ? [...(weights as number[])] : (weights as number[][]).flat();
    const wScale = Math.max(...Array.from(wg, Math.abs), 1e-6);
    for (let i = 0; i < flatW.length; i++) {
      const bump = (delta: number) => {
        const w2 = [...flatW];
        w2[i] += delta;
        return mixerKind === "diagonal"
          ? w2
          : Array.from({ length: channels }, (_, r) =>
              w2.slice(r * channels, (r + 1) * channels));
      };
      const fd = ((await objective(x, bump(h))) - (await objective(x, bump(-h)))) / (2 * h);
      const rel = Math.abs(sign * wg[i] - fd) / wScale;
      if (rel > maxRelWeights) maxRelWeights = rel;
      if (rel > tolerance && firstFailure === null) {
        firstFailure = `weight[${i}]`;
      }
      checkedWeights++;
    }
  }

  const passed = firstFailure === null;
  return {
    passed,
    maxRelInput,
    maxRelWeights,
    checkedInputs: n,
    checkedWeights,
    firstFailure,
  };
}

export async function assertGradients(client: GfcClient,
                                      opts: GradCheckOptions = {}): Promise<GradCheckReport> {
  const report = await gradientCheck(client, opts);
  if (!report.passed) {
    throw new GradientCheckError(
      `gradient check failed at ${report.firstFailure} ` +
      `(input rel ${report.maxRelInput.toExponential(2)}, ` +
      `weight rel ${report.maxRelWeights.toExponential(2)})`,
    );
  }
  return report;
}
