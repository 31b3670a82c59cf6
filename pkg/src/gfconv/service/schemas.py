"""Pydantic wire models: fields travel as base64 raw buffers plus geometry."""

from __future__ import annotations

import base64
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field as PField

from ..errors import ShapeMismatchError
from ..fields import Field
from ..layers import ChannelMixer, LayerSpec
from ..solver import CORNER_ZERO, MEAN_ZERO, SolverConfig

_DTYPES = {"f64": np.dtype("<f8"), "f32": np.dtype("<f4")}


class FieldPayload(BaseModel):
    """A dense field: row-major little-endian bytes plus explicit geometry."""

    dtype: Literal["f64", "f32"] = "f64"
    batch: int = 1
    channels: int = 1
    shape: list[int]
    data_b64: str

    @classmethod
    def from_field(cls, f: Field) -> "FieldPayload":
        dtype = "f64" if f.precision == "double" else "f32"
        raw = f.data.astype(_DTYPES[dtype], copy=False).tobytes()
        return cls(dtype=dtype, batch=f.batch, channels=f.channels,
                   shape=list(f.shape), data_b64=base64.b64encode(raw).decode("ascii"))

    def to_field(self) -> Field:
        raw = base64.b64decode(self.data_b64)
        dtype = _DTYPES[self.dtype]
        expected = self.batch * self.channels * int(np.prod(self.shape)) * dtype.itemsize
        if len(raw) != expected:
            raise ShapeMismatchError(
                f"payload holds {len(raw)} bytes, geometry requires {expected}"
            )
        arr = np.frombuffer(raw, dtype=dtype).reshape(
            (self.batch, self.channels) + tuple(self.shape)
        )
        return Field(arr.astype(dtype.newbyteorder("="), copy=True))


class SolveRequest(BaseModel):
    field: FieldPayload
    pad: int = 4
    constant: Literal["corner", "mean"] = "corner"
    precision: Literal["single", "double"] = "double"

    def config(self) -> SolverConfig:
        policy = CORNER_ZERO if self.constant == "corner" else MEAN_ZERO
        return SolverConfig(pad=self.pad, constant_policy=policy, precision=self.precision)


class FieldResponse(BaseModel):
    field: FieldPayload


class VectorPayload(BaseModel):
    components: list[FieldPayload]


class MixerModel(BaseModel):
    kind: Literal["identity", "diagonal", "full"] = "identity"
    weights: Optional[list] = None

    def to_mixer(self) -> ChannelMixer:
        w = None if self.kind == "identity" else np.asarray(self.weights, dtype=np.float64)
        return ChannelMixer(kind=self.kind, weights=w)


class LayerSpecModel(BaseModel):
    kind: Literal["LI", "GI", "GID"]
    mixer: MixerModel = MixerModel()
    constant: Literal["corner", "mean"] = "mean"
    pad: int = 4
    precision: Literal["single", "double"] = "double"
    channel_subset: Optional[list[int]] = None

    def to_spec(self) -> LayerSpec:
        policy = CORNER_ZERO if self.constant == "corner" else MEAN_ZERO
        cfg = SolverConfig(pad=self.pad, constant_policy=policy, precision=self.precision)
        subset = tuple(self.channel_subset) if self.channel_subset is not None else None
        return LayerSpec(kind=self.kind, mixer=self.mixer.to_mixer(),
                         solver_cfg=cfg, channel_subset=subset)


class LayerForwardRequest(BaseModel):
    x: FieldPayload
    spec: LayerSpecModel


class LayerAdjointRequest(BaseModel):
    grad_output: FieldPayload
    spec: LayerSpecModel
    x: Optional[FieldPayload] = None  # needed for mixer weight gradients


class WeightGradPayload(BaseModel):
    shape: list[int]
    data_b64: str

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "WeightGradPayload":
        raw = arr.astype(np.dtype("<f8"), copy=False).tobytes()
        return cls(shape=list(arr.shape), data_b64=base64.b64encode(raw).decode("ascii"))


class LayerAdjointResponse(BaseModel):
    grad_input: FieldPayload
    weight_grad: Optional[WeightGradPayload] = None


class ProjectRequest(BaseModel):
    field: FieldPayload
    report_curl: bool = False


class ProjectResponse(BaseModel):
    field: FieldPayload
    curl_before: Optional[float] = None
    curl_after: Optional[float] = None


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = PField(default="0.1.0")
