/** Error taxonomy mirroring the service's stable error codes. */

export class GfcError extends Error {
  readonly code: string;
  constructor(code: string, message: string) {
    super(message);
    this.code = code;
    this.name = new.target.name;
  }
}

export class LayoutError extends GfcError {
  constructor(message: string) {
    super("layout", message);
  }
}

export class DatasetMissingError extends GfcError {
  constructor(message: string) {
    super("dataset-missing", message);
  }
}

export class ChecksumError extends GfcError {
  constructor(message: string) {
    super("checksum-mismatch", message);
  }
}

export class DivergenceError extends GfcError {
  constructor(message: string) {
    super("divergence", message);
  }
}

export class GradientCheckError extends GfcError {
  constructor(message: string) {
    super("check-failed", message);
  }
}

/** Raised when the service reports a structured error (HTTP 422). */
export class ServiceError extends GfcError {
  readonly status: number;
  constructor(code: string, message: string, status: number) {
    super(code, message);
    this.status = status;
  }
}
