/** Minimal line-plot renderer with a self-contained PNG encoder.
 *
 * Truecolor 8-bit PNG, filter 0 rows, one zlib-deflated IDAT chunk; enough
 * for convergence curves without pulling in a canvas dependency.
 */

import { writeFileSync } from "node:fs";
import { deflateSync } from "node:zlib";

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Buffer): number {
  let c = 0xffffffff;
  for (const byte of buf) c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Buffer): Buffer {
  const head = Buffer.concat([Buffer.from(type, "ascii"), data]);
  const out = Buffer.alloc(head.length + 8);
  out.writeUInt32BE(data.length, 0);
  head.copy(out, 4);
  out.writeUInt32BE(crc32(head), head.length + 4);
  return out;
}

export class Raster {
  readonly pixels: Uint8Array; // RGB

  constructor(readonly width: number, readonly height: number) {
    this.pixels = new Uint8Array(width * height * 3).fill(255);
  }

  set(x: number, y: number, rgb: [number, number, number]): void {
    if (x < 0 || x >= this.width || y < 0 || y >= this.height) return;
    const at = (y * this.width + x) * 3;
    this.pixels[at] = rgb[0];
    this.pixels[at + 1] = rgb[1];
    this.pixels[at + 2] = rgb[2];
  }

  line(x1: number, y1: number, x2: number, y2: number,
       rgb: [number, number, number], thick = 1): void {
    const steps = Math.max(Math.abs(x2 - x1), Math.abs(y2 - y1), 1) * 2;
    for (let s = 0; s <= steps; s++) {
      const t = s / steps;
      const x = Math.round(x1 + (x2 - x1) * t);
      const y = Math.round(y1 + (y2 - y1) * t);
      for (let dy = 0; dy < thick; dy++) {
        for (let dx = 0; dx < thick; dx++) this.set(x + dx, y + dy, rgb);
      }
    }
  }

  toPng(): Buffer {
    const stride = this.width * 3;
    const raw = Buffer.alloc((stride + 1) * this.height);
    for (let y = 0; y < this.height; y++) {
      raw[y * (stride + 1)] = 0; // filter type 0
      Buffer.from(this.pixels.buffer, y * stride, stride).copy(raw, y * (stride + 1) + 1);
    }
    const ihdr = Buffer.alloc(13);
    ihdr.writeUInt32BE(this.width, 0);
    ihdr.writeUInt32BE(this.height, 4);
    ihdr.writeUInt8(8, 8); // bit depth
    ihdr.writeUInt8(2, 9); // truecolor
    return Buffer.concat([
      Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
      chunk("IHDR", ihdr),
      chunk("IDAT", deflateSync(raw)),
      chunk("IEND", Buffer.alloc(0)),
    ]);
  }
}

export interface Curve {
  label: string;
  xs: number[];
  ys: number[];
  color: [number, number, number];
}

export function renderCurves(curves: Curve[], opts: { width?: number; height?: number;
                             yMin?: number; yMax?: number } = {}): Raster {
  const width = opts.width ?? 640;
  const height = opts.height ?? 400;
  const margin = 40;
  const r = new Raster(width, height);
  const xsAll = curves.flatMap((c) => c.xs);
  const ysAll = curves.flatMap((c) => c.ys);
  const xMax = Math.max(...xsAll, 1);
  const yMin = opts.yMin ?? Math.min(...ysAll, 0);
  const yMax = opts.yMax ?? Math.max(...ysAll, 1);
  const px = (x: number) => margin + ((width - 2 * margin) * x) / xMax;
  const py = (y: number) =>
    height - margin - ((height - 2 * margin) * (y - yMin)) / Math.max(yMax - yMin, 1e-9);

  const axis: [number, number, number] = [90, 90, 90];
  r.line(margin, height - margin, width - margin, height - margin, axis);
  r.line(margin, margin, margin, height - margin, axis);
  for (let g = 1; g <= 4; g++) {
    const y = Math.round(margin + ((height - 2 * margin) * g) / 5);
    r.line(margin, y, width - margin, y, [225, 225, 225]);
  }
  curves.forEach((curve, ci) => {
    for (let i = 1; i < curve.xs.length; i++) {
      r.line(
        Math.round(px(curve.xs[i - 1])), Math.round(py(curve.ys[i - 1])),
        Math.round(px(curve.xs[i])), Math.round(py(curve.ys[i])),
        curve.color, 2,
      );
    }
    // legend swatch
    const ly = margin / 2 + ci * 10;
    r.line(width - margin - 60, ly, width - margin - 40, ly, curve.color, 3);
  });
  return r;
}

export function writeCurvesPng(path: string, curves: Curve[],
                               opts: Parameters<typeof renderCurves>[1] = {}): void {
  writeFileSync(path, renderCurves(curves, opts).toPng());
}
