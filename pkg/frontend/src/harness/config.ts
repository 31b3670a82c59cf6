/** Experiment configuration; the defaults reproduce the reference setup:
 * two inception modules (16 then 32 channels per branch), Adam at 1e-4,
 * batches of 50, with the conservative-projection layer optional.
 */

import { readFileSync } from "node:fs";

export type GidVariant = "GDI2" | "GDI3";
export type MixerChoice = "identity" | "diagonal" | "full";

export interface ExperimentConfig {
  inceptionModules: number;
  channelsPerBranch: number[];
  optimizer: "adam";
  learningRate: number;
  batchSize: number;
  gidEnabled: boolean;
  gidVariant: GidVariant;
  mixer: MixerChoice;
  /** Replace the integration with identity, keeping only the mixer. */
  gidAblationIdentity: boolean;
  /** Channel indices the projection touches; null means all. */
  channelSubset: number[] | null;
  iterations: number;
  evalInterval: number;
  emaFactor: number;
  validationSize: number;
  seed: number;
  dataDir: string;
  serviceUrl: string | null;
  imageSide: number;
  classes: number;
}

export const DEFAULT_CONFIG: ExperimentConfig = {
  inceptionModules: 2,
  channelsPerBranch: [16, 32],
  optimizer: "adam",
  learningRate: 1e-4,
  batchSize: 50,
  gidEnabled: true,
  gidVariant: "GDI2",
  mixer: "diagonal",
  gidAblationIdentity: false,
  channelSubset: null,
  iterations: 20000,
  evalInterval: 100,
  emaFactor: 0.98,
  validationSize: 5000,
  seed: 1,
  dataDir: "data/mnist",
  serviceUrl: null,
  imageSide: 28,
  classes: 10,
};

export function loadConfig(path?: string, overrides: Partial<ExperimentConfig> = {}):
    ExperimentConfig {
  const fromFile = path ? JSON.parse(readFileSync(path, "utf-8")) : {};
  const cfg: ExperimentConfig = { ...DEFAULT_CONFIG, ...fromFile, ...overrides };
  validateConfig(cfg);
  return cfg;
}

export function validateConfig(cfg: ExperimentConfig): void {
  if (cfg.inceptionModules !== cfg.channelsPerBranch.length) {
    throw new Error("channelsPerBranch needs one entry per inception module");
  }
  if (cfg.gidVariant !== "GDI2" && cfg.gidVariant !== "GDI3") {
    throw new Error(`unknown placement variant ${cfg.gidVariant}`);
  }
  if (cfg.batchSize < 1 || cfg.iterations < 1) {
    throw new Error("batchSize and iterations must be positive");
  }
  if (cfg.emaFactor <= 0 || cfg.emaFactor >= 1) {
    throw new Error("emaFactor must sit in (0, 1)");
  }
  for (const c of cfg.channelsPerBranch) {
    if (c % 2 !== 0) {
      throw new Error("branch channel counts must be even so channels pair as (u, v)");
    }
  }
}
