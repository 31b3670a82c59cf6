/** GFT container codec, byte-compatible with the service's file format.
 *
 * Layout (little-endian): magic "GFT1", dtype byte (0 = f64, 1 = f32),
 * ndim byte, ndim x u64 dims, row-major IEEE-754 payload. ndim 2 is a
 * single-channel 2D grid, ndim 3 is (C, H, W), ndim 4 is (C, D, H, W).
 */

import { GfcError, LayoutError } from "./errors.js";

export type Dtype = "f64" | "f32";

export interface GftArray {
  dtype: Dtype;
  dims: number[];
  data: Float64Array | Float32Array;
}

const MAGIC = Buffer.from("GFT1", "ascii");

export function product(dims: number[]): number {
  return dims.reduce((a, b) => a * b, 1);
}

export function encodeGft(arr: GftArray): Buffer {
  const { dtype, dims, data } = arr;
  if (dims.length < 2 || dims.length > 4) {
    throw new LayoutError(`GFT stores 2..4 dims, got ${dims.length}`);
  }
  if (data.length !== product(dims)) {
    throw new LayoutError(
      `payload holds ${data.length} values, dims [${dims}] require ${product(dims)}`,
    );
  }
  const itemSize = dtype === "f64" ? 8 : 4;
  const header = Buffer.alloc(6 + 8 * dims.length);
  MAGIC.copy(header, 0);
  header.writeUInt8(dtype === "f64" ? 0 : 1, 4);
  header.writeUInt8(dims.length, 5);
  dims.forEach((d, i) => header.writeBigUInt64LE(BigInt(d), 6 + 8 * i));
  const payload = Buffer.alloc(data.length * itemSize);
  if (dtype === "f64") {
    data.forEach((v, i) => payload.writeDoubleLE(v, i * 8));
  } else {
    data.forEach((v, i) => payload.writeFloatLE(Math.fround(v), i * 4));
  }
  return Buffer.concat([header, payload]);
}

export function decodeGft(blob: Buffer): GftArray {
  if (blob.length < 6 || !blob.subarray(0, 4).equals(MAGIC)) {
    throw new GfcError("bad-magic", `expected magic GFT1, got ${blob.subarray(0, 4)}`);
  }
  const dtypeCode = blob.readUInt8(4);
  if (dtypeCode !== 0 && dtypeCode !== 1) {
    throw new GfcError("unknown-dtype", `dtype code ${dtypeCode} not in {0, 1}`);
  }
  const ndim = blob.readUInt8(5);
  if (ndim < 2 || ndim > 4) {
    throw new GfcError("truncated-payload", `ndim ${ndim} outside 2..4`);
  }
  const dimsEnd = 6 + 8 * ndim;
  if (blob.length < dimsEnd) {
    throw new GfcError("truncated-payload", "dims cut short");
  }
  const dims: number[] = [];
  for (let i = 0; i < ndim; i++) {
    dims.push(Number(blob.readBigUInt64LE(6 + 8 * i)));
  }
  const itemSize = dtypeCode === 0 ? 8 : 4;
  const expected = product(dims) * itemSize;
  const payload = blob.subarray(dimsEnd);
  if (payload.length !== expected) {
    throw new GfcError(
      "truncated-payload",
      `payload holds ${payload.length} bytes, dims [${dims}] require ${expected}`,
    );
  }
  const count = product(dims);
  if (dtypeCode === 0) {
    const data = new Float64Array(count);
    for (let i = 0; i < count; i++) data[i] = payload.readDoubleLE(i * 8);
    return { dtype: "f64", dims, data };
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = payload.readFloatLE(i * 4);
  return { dtype: "f32", dims, data };
}
