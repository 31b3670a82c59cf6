/** IDX tensor files (the MNIST distribution format) plus checksum helpers.
 *
 * Header: two zero bytes, a dtype byte (0x08 = unsigned byte is all we
 * need), a rank byte, then rank big-endian u32 dims, then the payload.
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

import { GfcError } from "../errors.js";

export interface IdxArray {
  dims: number[];
  data: Uint8Array;
}

export function encodeIdx(arr: IdxArray): Buffer {
  const rank = arr.dims.length;
  const header = Buffer.alloc(4 + 4 * rank);
  header.writeUInt8(0, 0);
  header.writeUInt8(0, 1);
  header.writeUInt8(0x08, 2);
  header.writeUInt8(rank, 3);
  arr.dims.forEach((d, i) => header.writeUInt32BE(d, 4 + 4 * i));
  const size = arr.dims.reduce((a, b) => a * b, 1);
  if (arr.data.length !== size) {
    throw new GfcError("idx-format", `payload ${arr.data.length} != dims product ${size}`);
  }
  return Buffer.concat([header, Buffer.from(arr.data)]);
}

export function decodeIdx(blob: Buffer): IdxArray {
  if (blob.length < 4 || blob.readUInt8(0) !== 0 || blob.readUInt8(1) !== 0) {
    throw new GfcError("idx-format", "missing IDX zero prefix");
  }
  const dtype = blob.readUInt8(2);
  if (dtype !== 0x08) {
    throw new GfcError("idx-format", `unsupported IDX dtype 0x${dtype.toString(16)}`);
  }
  const rank = blob.readUInt8(3);
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) dims.push(blob.readUInt32BE(4 + 4 * i));
  const size = dims.reduce((a, b) => a * b, 1);
  const payload = blob.subarray(4 + 4 * rank);
  if (payload.length !== size) {
    throw new GfcError("idx-format", `payload ${payload.length} bytes, dims need ${size}`);
  }
  return { dims, data: new Uint8Array(payload) };
}

export function readIdx(path: string): IdxArray {
  return decodeIdx(readFileSync(path));
}

export function writeIdx(path: string, arr: IdxArray): void {
  writeFileSync(path, encodeIdx(arr));
}

export function md5Hex(data: Buffer | Uint8Array): string {
  return createHash("md5").update(data).digest("hex");
}

export function sha256Hex(data: Buffer | Uint8Array): string {
  return createHash("sha256").update(data).digest("hex");
}

/** Published MD5 checksums of the gzipped MNIST distribution files. */
export const MNIST_FILES = [
  {
    name: "train-images-idx3-ubyte",
    gz: "train-images-idx3-ubyte.gz",
    md5: "f68b3c2dcbeaaa9fbdd348bbdeb94873",
  },
  {
    name: "train-labels-idx1-ubyte",
    gz: "train-labels-idx1-ubyte.gz",
    md5: "d53e105ee54ea40749a09fcbcd1e9432",
  },
  {
    name: "t10k-images-idx3-ubyte",
    gz: "t10k-images-idx3-ubyte.gz",
    md5: "9fb629c4189551a2d022fa330f9573f3",
  },
  {
    name: "t10k-labels-idx1-ubyte",
    gz: "t10k-labels-idx1-ubyte.gz",
    md5: "ec29112dd5afa0611ce80d1b7f02629c",
  },
] as const;

export const MNIST_MIRROR = "https://ossci-datasets.s3.amazonaws.com/mnist";
