/** HTTP bindings for the gfconv service.
 *
 * Fields are contiguous row-major typed arrays with (batch, channels,
 * spatial...) geometry, f32 or f64. f32 payloads are accepted everywhere
 * and internally promoted: solve/adjoint default to double-precision
 * compute and return f64 unless a layer spec requests "single". This layer
 * does no mathematics of its own: every numeric result comes back from the
 * service, so only one implementation needs verification. Service error
 * codes surface as ServiceError with the original code string.
 */

import { LayoutError, ServiceError } from "./errors.js";
import { product, type Dtype } from "./gft.js";

export interface FieldData {
  dtype: Dtype;
  batch: number;
  channels: number;
  shape: number[];
  data: Float64Array | Float32Array;
}

export type MixerKind = "identity" | "diagonal" | "full";

export interface LayerSpecInput {
  kind: "LI" | "GI" | "GID";
  mixer?: { kind: MixerKind; weights?: number[] | number[][] };
  constant?: "corner" | "mean";
  pad?: number;
  precision?: "single" | "double";
  channelSubset?: number[];
}

export interface LayerAdjointOutput {
  gradInput: FieldData;
  weightGrad: { shape: number[]; data: Float64Array } | null;
}

export function field(
  data: Float64Array | Float32Array,
  batch: number,
  channels: number,
  shape: number[],
): FieldData {
  const dtype: Dtype = data instanceof Float64Array ? "f64" : "f32";
  const expected = batch * channels * product(shape);
  if (data.length !== expected) {
    throw new LayoutError(
      `array holds ${data.length} values, geometry ${batch}x${channels}x[${shape}] requires ${expected}`,
    );
  }
  if (data.byteOffset % data.BYTES_PER_ELEMENT !== 0) {
    throw new LayoutError("array view must be element-aligned and contiguous");
  }
  return { dtype, batch, channels, shape: [...shape], data };
}

function encodeField(f: FieldData): object {
  const buf = Buffer.from(f.data.buffer, f.data.byteOffset, f.data.byteLength);
  return {
    dtype: f.dtype,
    batch: f.batch,
    channels: f.channels,
    shape: f.shape,
    data_b64: buf.toString("base64"),
  };
}

function decodeField(body: any): FieldData {
  const raw = Buffer.from(body.data_b64, "base64");
  const data =
    body.dtype === "f64"
      ? new Float64Array(raw.buffer, raw.byteOffset, raw.length / 8)
      : new Float32Array(raw.buffer, raw.byteOffset, raw.length / 4);
  return {
    dtype: body.dtype,
    batch: body.batch,
    channels: body.channels,
    shape: body.shape,
    data,
  };
}

function wireSpec(spec: LayerSpecInput): object {
  return {
    kind: spec.kind,
    mixer: spec.mixer ?? { kind: "identity" },
    constant: spec.constant ?? "mean",
    pad: spec.pad ?? 4,
    precision: spec.precision ?? "double",
    channel_subset: spec.channelSubset ?? null,
  };
}

export class GfcClient {
  constructor(readonly baseUrl: string) {}

  private async post(path: string, body: object): Promise<any> {
    const payload = JSON.stringify(body);
    // The service is stateless, so retrying on transport-level failures is
    // safe; keep-alive connections the server idle-closed surface as socket
    // errors that undici will not retry for POST on its own.
    let lastErr: unknown;
    for (let attempt = 0; attempt < 3; attempt++) {
      let res: Response;
      try {
        res = await fetch(`${this.baseUrl}${path}`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: payload,
        });
      } catch (err) {
        lastErr = err;
        await new Promise((r) => setTimeout(r, 50 * (attempt + 1)));
        continue;
      }
      const parsed = await res.json();
      if (!res.ok) {
        const code = (parsed as any).code ?? "service-error";
        const detail = (parsed as any).detail ?? JSON.stringify(parsed);
        throw new ServiceError(code, detail, res.status);
      }
      return parsed;
    }
    throw lastErr;
  }

  async health(): Promise<boolean> {
    try {
      const res = await fetch(`${this.baseUrl}/health`);
      return res.ok;
    } catch {
      return false;
    }
  }

  async solve(
    f: FieldData,
    opts: { pad?: number; constant?: "corner" | "mean" } = {},
  ): Promise<FieldData> {
    const body = await this.post("/v1/solve", {
      field: encodeField(f),
      pad: opts.pad ?? 4,
      constant: opts.constant ?? "corner",
    });
    return decodeField(body.field);
  }

  async solveAdjoint(
    f: FieldData,
    opts: { pad?: number; constant?: "corner" | "mean" } = {},
  ): Promise<FieldData> {
    const body = await this.post("/v1/solve-adjoint", {
      field: encodeField(f),
      pad: opts.pad ?? 4,
      constant: opts.constant ?? "corner",
    });
    return decodeField(body.field);
  }

  async gradient(f: FieldData): Promise<FieldData[]> {
    const body = await this.post("/v1/gradient", { field: encodeField(f) });
    return body.components.map(decodeField);
  }

  async divergence(components: FieldData[]): Promise<FieldData> {
    const body = await this.post("/v1/divergence", {
      components: components.map(encodeField),
    });
    return decodeField(body.field);
  }

  async curl(components: FieldData[]): Promise<FieldData[]> {
    const body = await this.post("/v1/curl", {
      components: components.map(encodeField),
    });
    return body.components.map(decodeField);
  }

  async layerForward(x: FieldData, spec: LayerSpecInput): Promise<FieldData> {
    const body = await this.post("/v1/layers/forward", {
      x: encodeField(x),
      spec: wireSpec(spec),
    });
    return decodeField(body.field);
  }

  async layerAdjoint(
    gradOutput: FieldData,
    spec: LayerSpecInput,
    x?: FieldData,
  ): Promise<LayerAdjointOutput> {
    const body = await this.post("/v1/layers/adjoint", {
      grad_output: encodeField(gradOutput),
      spec: wireSpec(spec),
      x: x ? encodeField(x) : null,
    });
    let weightGrad: LayerAdjointOutput["weightGrad"] = null;
    if (body.weight_grad) {
      const raw = Buffer.from(body.weight_grad.data_b64, "base64");
      weightGrad = {
        shape: body.weight_grad.shape,
        data: new Float64Array(raw.buffer, raw.byteOffset, raw.length / 8),
      };
    }
    return { gradInput: decodeField(body.grad_input), weightGrad };
  }

  async project(
    f: FieldData,
    reportCurl = false,
  ): Promise<{ field: FieldData; curlBefore: number | null; curlAfter: number | null }> {
    const body = await this.post("/v1/project", {
      field: encodeField(f),
      report_curl: reportCurl,
    });
    return {
      field: decodeField(body.field),
      curlBefore: body.curl_before,
      curlAfter: body.curl_after,
    };
  }
}
