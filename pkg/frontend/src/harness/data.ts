/** Dataset loading, validation split, batching, and synthetic fixtures. */

import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { gunzipSync } from "node:zlib";

import { ChecksumError, DatasetMissingError } from "../errors.js";
import { MNIST_FILES, MNIST_MIRROR, md5Hex, readIdx, writeIdx } from "./idx.js";
import { Rng } from "./rng.js";

export interface Dataset {
  images: Uint8Array; // n * 28 * 28, row-major
  labels: Uint8Array; // n
  count: number;
  side: number;
}

export interface SplitDataset {
  train: Dataset;
  validation: Dataset;
  test?: Dataset;
}

function slice(ds: Dataset, start: number, end: number): Dataset {
  const px = ds.side * ds.side;
  return {
    images: ds.images.subarray(start * px, end * px),
    labels: ds.labels.subarray(start, end),
    count: end - start,
    side: ds.side,
  };
}

export function loadIdxPair(imagesPath: string, labelsPath: string): Dataset {
  if (!existsSync(imagesPath) || !existsSync(labelsPath)) {
    throw new DatasetMissingError(
      `dataset files missing (${imagesPath}); run the fetch or synth step first`,
    );
  }
  const images = readIdx(imagesPath);
  const labels = readIdx(labelsPath);
  if (images.dims.length !== 3 || labels.dims.length !== 1) {
    throw new DatasetMissingError("unexpected IDX ranks for an image/label pair");
  }
  if (images.dims[0] !== labels.dims[0]) {
    throw new DatasetMissingError("image and label counts disagree");
  }
  return {
    images: images.data,
    labels: labels.data,
    count: images.dims[0],
    side: images.dims[1],
  };
}

/** Last `validationSize` training items are held out, test set untouched. */
export function loadSplit(dataDir: string, validationSize: number): SplitDataset {
  const full = loadIdxPair(
    join(dataDir, "train-images-idx3-ubyte"),
    join(dataDir, "train-labels-idx1-ubyte"),
  );
  const cut = Math.max(full.count - validationSize, 1);
  const out: SplitDataset = {
    train: slice(full, 0, cut),
    validation: slice(full, cut, full.count),
  };
  const testImages = join(dataDir, "t10k-images-idx3-ubyte");
  const testLabels = join(dataDir, "t10k-labels-idx1-ubyte");
  if (existsSync(testImages) && existsSync(testLabels)) {
    out.test = loadIdxPair(testImages, testLabels);
  }
  return out;
}

export class BatchSampler {
  private order: Int32Array;
  private cursor = 0;

  constructor(
    private readonly ds: Dataset,
    private readonly batchSize: number,
    private readonly rng: Rng,
  ) {
    this.order = rng.shuffled(ds.count);
  }

  /** Images normalized to [0, 1], labels as ints. */
  next(): { images: Float32Array; labels: Int32Array } {
    const px = this.ds.side * this.ds.side;
    const images = new Float32Array(this.batchSize * px);
    const labels = new Int32Array(this.batchSize);
    for (let b = 0; b < this.batchSize; b++) {
      if (this.cursor >= this.order.length) {
        this.order = this.rng.shuffled(this.ds.count);
        this.cursor = 0;
      }
      const idx = this.order[this.cursor++];
      labels[b] = this.ds.labels[idx];
      const src = idx * px;
      for (let i = 0; i < px; i++) images[b * px + i] = this.ds.images[src + i] / 255;
    }
    return { images, labels };
  }
}

// -- MNIST fetch --------------------------------------------------------------

export async function fetchMnist(dataDir: string): Promise<string[]> {
  mkdirSync(dataDir, { recursive: true });
  const written: string[] = [];
  for (const file of MNIST_FILES) {
    const target = join(dataDir, file.name);
    if (existsSync(target)) {
      written.push(target);
      continue;
    }
    const url = `${MNIST_MIRROR}/${file.gz}`;
    let res: Response;
    try {
      res = await fetch(url);
    } catch (err) {
      throw new DatasetMissingError(`download failed for ${url}: ${err}`);
    }
    if (!res.ok) {
      throw new DatasetMissingError(`download failed for ${url}: HTTP ${res.status}`);
    }
    const gz = Buffer.from(await res.arrayBuffer());
    const digest = md5Hex(gz);
    if (digest !== file.md5) {
      throw new ChecksumError(`${file.gz}: md5 ${digest}, pinned ${file.md5}`);
    }
    writeFileSync(target, gunzipSync(gz));
    written.push(target);
  }
  return written;
}

// -- synthetic 10-class fixture ------------------------------------------------

/** Stroke endpoints (x1, y1, x2, y2) in a unit square, per class. */
const GLYPHS: number[][][] = [
  [[0.3, 0.2, 0.7, 0.2], [0.7, 0.2, 0.7, 0.8], [0.7, 0.8, 0.3, 0.8], [0.3, 0.8, 0.3, 0.2]],
  [[0.5, 0.15, 0.5, 0.85]],
  [[0.3, 0.25, 0.7, 0.25], [0.7, 0.25, 0.3, 0.75], [0.3, 0.75, 0.7, 0.75]],
  [[0.3, 0.2, 0.7, 0.3], [0.7, 0.3, 0.4, 0.5], [0.4, 0.5, 0.7, 0.7], [0.7, 0.7, 0.3, 0.8]],
  [[0.35, 0.2, 0.35, 0.5], [0.35, 0.5, 0.7, 0.5], [0.65, 0.2, 0.65, 0.85]],
  [[0.7, 0.2, 0.3, 0.2], [0.3, 0.2, 0.3, 0.5], [0.3, 0.5, 0.7, 0.6], [0.7, 0.6, 0.3, 0.8]],
  [[0.65, 0.2, 0.35, 0.4], [0.35, 0.4, 0.35, 0.75], [0.35, 0.75, 0.65, 0.75], [0.65, 0.75, 0.65, 0.5], [0.65, 0.5, 0.35, 0.5]],
  [[0.3, 0.2, 0.7, 0.2], [0.7, 0.2, 0.4, 0.85]],
  [[0.5, 0.3, 0.3, 0.5], [0.3, 0.5, 0.5, 0.7], [0.5, 0.7, 0.7, 0.5], [0.7, 0.5, 0.5, 0.3], [0.5, 0.2, 0.5, 0.8]],
  [[0.65, 0.45, 0.35, 0.45], [0.35, 0.45, 0.35, 0.25], [0.35, 0.25, 0.65, 0.25], [0.65, 0.25, 0.65, 0.8]],
];

function drawStroke(img: Float32Array, side: number, x1: number, y1: number,
                    x2: number, y2: number): void {
  const steps = side * 2;
  for (let s = 0; s <= steps; s++) {
    const t = s / steps;
    const x = (x1 + (x2 - x1) * t) * side;
    const y = (y1 + (y2 - y1) * t) * side;
    for (let dy = -1; dy <= 1; dy++) {
      for (let dx = -1; dx <= 1; dx++) {
        const xi = Math.round(x + dx * 0.5);
        const yi = Math.round(y + dy * 0.5);
        if (xi >= 0 && xi < side && yi >= 0 && yi < side) {
          const w = Math.max(0, 1 - Math.hypot(xi - x, yi - y));
          const at = yi * side + xi;
          img[at] = Math.max(img[at], w);
        }
      }
    }
  }
}

/** Procedural digit-like dataset with per-sample jitter and noise. */
export function makeSynthetic(count: number, seed: number, side = 28): Dataset {
  const rng = new Rng(seed);
  const px = side * side;
  const images = new Uint8Array(count * px);
  const labels = new Uint8Array(count);
  const canvas = new Float32Array(px);
  for (let n = 0; n < count; n++) {
    const cls = n % 10;
    labels[n] = cls;
    canvas.fill(0);
    const ox = rng.uniform(-0.1, 0.1);
    const oy = rng.uniform(-0.1, 0.1);
    const scale = rng.uniform(0.85, 1.1);
    for (const [x1, y1, x2, y2] of GLYPHS[cls]) {
      drawStroke(
        canvas, side,
        0.5 + (x1 - 0.5) * scale + ox, 0.5 + (y1 - 0.5) * scale + oy,
        0.5 + (x2 - 0.5) * scale + ox, 0.5 + (y2 - 0.5) * scale + oy,
      );
    }
    for (let i = 0; i < px; i++) {
      const noisy = canvas[i] * rng.uniform(0.75, 1.0) + Math.abs(rng.normal()) * 0.06;
      images[n * px + i] = Math.max(0, Math.min(255, Math.round(noisy * 255)));
    }
  }
  return { images, labels, count, side };
}

/** Write a synthetic dataset in the exact IDX layout the loader ingests. */
export function writeSyntheticDataset(dataDir: string, trainCount: number,
                                      testCount: number, seed: number): void {
  mkdirSync(dataDir, { recursive: true });
  const train = makeSynthetic(trainCount, seed);
  const test = makeSynthetic(testCount, seed + 1);
  writeIdx(join(dataDir, "train-images-idx3-ubyte"),
           { dims: [train.count, train.side, train.side], data: train.images });
  writeIdx(join(dataDir, "train-labels-idx1-ubyte"),
           { dims: [train.count], data: train.labels });
  writeIdx(join(dataDir, "t10k-images-idx3-ubyte"),
           { dims: [test.count, test.side, test.side], data: test.images });
  writeIdx(join(dataDir, "t10k-labels-idx1-ubyte"),
           { dims: [test.count], data: test.labels });
}
