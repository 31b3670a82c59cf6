"""HTTP service exposing the solver, the differential operators and the layers.

One process keeps one warm kernel cache, so repeated requests at the same
grid size skip the kernel build.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..diffops import curl2d, curl3d, divergence, gradient, interior_max_curl
from ..errors import GfcError
from ..fields import Field, VectorField
from ..kernels import default_cache
from ..layers import GID, ChannelMixer, LayerSpec, layer_adjoint, layer_forward
from ..solver import laplacian_stencil, solve_laplacian, solve_laplacian_adjoint
from .schemas import (
    FieldPayload,
    FieldResponse,
    HealthResponse,
    LayerAdjointRequest,
    LayerAdjointResponse,
    LayerForwardRequest,
    ProjectRequest,
    ProjectResponse,
    SolveRequest,
    VectorPayload,
    WeightGradPayload,
)

app = FastAPI(title="gfconv", version="0.1.0")
_cache = default_cache()


@app.exception_handler(GfcError)
async def gfc_error_handler(request: Request, exc: GfcError):
    return JSONResponse(status_code=422, content={"code": exc.code, "detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse()


@app.post("/v1/solve", response_model=FieldResponse)
def solve(req: SolveRequest) -> FieldResponse:
    out = solve_laplacian(req.field.to_field(), req.config(), _cache)
    return FieldResponse(field=FieldPayload.from_field(out))


@app.post("/v1/solve-adjoint", response_model=FieldResponse)
def solve_adjoint(req: SolveRequest) -> FieldResponse:
    out = solve_laplacian_adjoint(req.field.to_field(), req.config(), _cache)
    return FieldResponse(field=FieldPayload.from_field(out))


@app.post("/v1/stencil", response_model=FieldResponse)
def stencil(req: FieldResponse) -> FieldResponse:
    out = laplacian_stencil(req.field.to_field())
    return FieldResponse(field=FieldPayload.from_field(out))


@app.post("/v1/gradient", response_model=VectorPayload)
def gradient_endpoint(req: FieldResponse) -> VectorPayload:
    V = gradient(req.field.to_field())
    return VectorPayload(components=[FieldPayload.from_field(c) for c in V.components])


@app.post("/v1/divergence", response_model=FieldResponse)
def divergence_endpoint(req: VectorPayload) -> FieldResponse:
    V = VectorField(tuple(c.to_field() for c in req.components))
    return FieldResponse(field=FieldPayload.from_field(divergence(V)))


@app.post("/v1/curl", response_model=VectorPayload)
def curl_endpoint(req: VectorPayload) -> VectorPayload:
    V = VectorField(tuple(c.to_field() for c in req.components))
    if V.dim == 2:
        return VectorPayload(components=[FieldPayload.from_field(curl2d(V))])
    C = curl3d(V)
    return VectorPayload(components=[FieldPayload.from_field(c) for c in C.components])


@app.post("/v1/layers/forward", response_model=FieldResponse)
def layers_forward(req: LayerForwardRequest) -> FieldResponse:
    out = layer_forward(req.x.to_field(), req.spec.to_spec(), _cache)
    return FieldResponse(field=FieldPayload.from_field(out))


@app.post("/v1/layers/adjoint", response_model=LayerAdjointResponse)
def layers_adjoint(req: LayerAdjointRequest) -> LayerAdjointResponse:
    x = req.x.to_field() if req.x is not None else None
    result = layer_adjoint(req.grad_output.to_field(), req.spec.to_spec(), x, _cache)
    wg = None
    if result.weight_grad is not None:
        wg = WeightGradPayload.from_array(result.weight_grad)
    return LayerAdjointResponse(grad_input=FieldPayload.from_field(result.input_grad),
                                weight_grad=wg)


def _paired(f: Field) -> list[VectorField]:
    dim = f.dim
    return [VectorField(tuple(Field(f.data[:, g * dim + k : g * dim + k + 1])
                              for k in range(dim)))
            for g in range(f.channels // dim)]


@app.post("/v1/project", response_model=ProjectResponse)
def project(req: ProjectRequest) -> ProjectResponse:
    field = req.field.to_field()
    spec = LayerSpec(kind=GID, mixer=ChannelMixer())
    out = layer_forward(field, spec, _cache)
    before = after = None
    if req.report_curl:
        before = max(interior_max_curl(v) for v in _paired(field))
        after = max(interior_max_curl(v) for v in _paired(out))
    return ProjectResponse(field=FieldPayload.from_field(out),
                           curl_before=before, curl_after=after)
