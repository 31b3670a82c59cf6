/** Multi-seed trend evaluation over run CSVs: does the projection variant
 * reach the accuracy threshold in fewer iterations for most seeds, and is
 * its mean final smoothed accuracy at least the baseline's?
 */

import { readFileSync } from "node:fs";

import type { RunRecord } from "./train.js";

export function parseRunCsv(path: string): RunRecord[] {
  const lines = readFileSync(path, "utf-8").trim().split("\n");
  const records: RunRecord[] = [];
  for (const line of lines.slice(1)) {
    const [it, acc, smoothed, wall] = line.split(",");
    records.push({
      iteration: Number(it),
      valAccuracy: Number(acc),
      smoothed: Number(smoothed),
      wallTime: Number(wall),
    });
  }
  return records;
}

export function iterationsToThreshold(records: RunRecord[], threshold: number):
    number | null {
  for (const r of records) {
    if (r.valAccuracy >= threshold) return r.iteration;
  }
  return null;
}

export function finalSmoothed(records: RunRecord[]): number {
  return records.length ? records[records.length - 1].smoothed : 0;
}

export interface TrendReport {
  seeds: number;
  variantFasterCount: number;
  variantFasterMajority: boolean;
  meanFinalBaseline: number;
  meanFinalVariant: number;
  meanFinalAtLeastBaseline: boolean;
  passed: boolean;
  perSeed: {
    baselineIterations: number | null;
    variantIterations: number | null;
    baselineFinal: number;
    variantFinal: number;
  }[];
}

export function evaluateTrend(baselineCsvs: string[], variantCsvs: string[],
                              threshold = 0.97): TrendReport {
  if (baselineCsvs.length !== variantCsvs.length || baselineCsvs.length === 0) {
    throw new Error("need one baseline CSV per variant CSV, at least one pair");
  }
  const perSeed = baselineCsvs.map((basePath, i) => {
    const base = parseRunCsv(basePath);
    const vari = parseRunCsv(variantCsvs[i]);
    return {
      baselineIterations: iterationsToThreshold(base, threshold),
      variantIterations: iterationsToThreshold(vari, threshold),
      baselineFinal: finalSmoothed(base),
      variantFinal: finalSmoothed(vari),
    };
  });
  let faster = 0;
  for (const s of perSeed) {
    const b = s.baselineIterations ?? Number.POSITIVE_INFINITY;
    const v = s.variantIterations ?? Number.POSITIVE_INFINITY;
    if (v < b) faster++;
  }
  const meanFinalBaseline =
    perSeed.reduce((a, s) => a + s.baselineFinal, 0) / perSeed.length;
  const meanFinalVariant =
    perSeed.reduce((a, s) => a + s.variantFinal, 0) / perSeed.length;
  const variantFasterMajority = faster * 2 > perSeed.length;
  const meanFinalAtLeastBaseline = meanFinalVariant >= meanFinalBaseline;
  return {
    seeds: perSeed.length,
    variantFasterCount: faster,
    variantFasterMajority,
    meanFinalBaseline,
    meanFinalVariant,
    meanFinalAtLeastBaseline,
    passed: variantFasterMajority && meanFinalAtLeastBaseline,
    perSeed,
  };
}
