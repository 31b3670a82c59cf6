import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from gfconv import (
    CORNER_ZERO,
    GID,
    ChannelMixer,
    Field,
    LayerSpec,
    SolverConfig,
    divergence,
    gradient,
    layer_adjoint,
    layer_forward,
    solve_laplacian,
    solve_laplacian_adjoint,
)
from gfconv.service.app import app
from gfconv.service.schemas import FieldPayload

from .conftest import random_field


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def payload(f: Field) -> dict:
    return FieldPayload.from_field(f).model_dump()


def unpack(body: dict) -> Field:
    return FieldPayload(**body).to_field()


class TestHealth:
    def test_ok(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"


class TestSolveEndpoints:
    def test_solve_matches_library_bitwise(self, client, rng):
        L = random_field(rng, (9, 9), channels=2)
        r = client.post("/v1/solve", json={"field": payload(L), "pad": 3,
                                           "constant": "corner"})
        assert r.status_code == 200
        got = unpack(r.json()["field"])
        expected = solve_laplacian(L, SolverConfig(pad=3, constant_policy=CORNER_ZERO))
        assert got.data.tobytes() == expected.data.tobytes()

    def test_adjoint_matches_library(self, client, rng):
        G = random_field(rng, (8, 8))
        r = client.post("/v1/solve-adjoint", json={"field": payload(G), "constant": "mean"})
        from gfconv import MEAN_ZERO
        expected = solve_laplacian_adjoint(G, SolverConfig(constant_policy=MEAN_ZERO))
        assert unpack(r.json()["field"]).data.tobytes() == expected.data.tobytes()

    def test_f32_accepted(self, client, rng):
        L = Field(rng.standard_normal((1, 1, 8, 8)).astype(np.float32))
        r = client.post("/v1/solve", json={"field": payload(L)})
        assert r.status_code == 200

    def test_too_small_maps_to_422(self, client):
        tiny = Field(np.zeros((1, 1, 2, 2)))
        r = client.post("/v1/solve", json={"field": payload(tiny)})
        assert r.status_code == 422
        assert r.json()["code"] == "dimension-too-small"

    def test_payload_size_mismatch(self, client):
        bad = {"dtype": "f64", "batch": 1, "channels": 1, "shape": [8, 8],
               "data_b64": base64.b64encode(b"\x00" * 16).decode()}
        r = client.post("/v1/solve", json={"field": bad})
        assert r.status_code == 422
        assert r.json()["code"] == "shape-mismatch"


class TestDiffEndpoints:
    def test_gradient_divergence_round(self, client, rng):
        f = random_field(rng, (7, 7))
        r = client.post("/v1/gradient", json={"field": payload(f)})
        comps = [FieldPayload(**c).to_field() for c in r.json()["components"]]
        expected = gradient(f)
        for got, exp in zip(comps, expected.components):
            assert got.data.tobytes() == exp.data.tobytes()
        r2 = client.post("/v1/divergence",
                         json={"components": [payload(c) for c in comps]})
        assert unpack(r2.json()["field"]).data.tobytes() == \
            divergence(expected).data.tobytes()

    def test_curl_of_gradient_vanishes(self, client, rng):
        f = random_field(rng, (7, 7))
        comps = gradient(f).components
        r = client.post("/v1/curl", json={"components": [payload(c) for c in comps]})
        curl = FieldPayload(**r.json()["components"][0]).to_field()
        assert np.abs(curl.data).max() <= 1e-12


class TestLayerEndpoints:
    def test_forward_matches_library(self, client, rng):
        x = random_field(rng, (8, 8), channels=4)
        spec_body = {"kind": "GID", "mixer": {"kind": "identity"}, "constant": "mean"}
        r = client.post("/v1/layers/forward", json={"x": payload(x), "spec": spec_body})
        expected = layer_forward(x, LayerSpec(kind=GID))
        assert unpack(r.json()["field"]).data.tobytes() == expected.data.tobytes()

    def test_adjoint_with_weight_grad(self, client, rng):
        w = rng.standard_normal(4)
        x = random_field(rng, (8, 8), channels=4)
        spec = LayerSpec(kind=GID, mixer=ChannelMixer(kind="diagonal", weights=w))
        g = Field(rng.standard_normal(layer_forward(x, spec).data.shape))
        spec_body = {"kind": "GID", "mixer": {"kind": "diagonal", "weights": w.tolist()}}
        r = client.post("/v1/layers/adjoint",
                        json={"grad_output": payload(g), "spec": spec_body,
                              "x": payload(x)})
        body = r.json()
        expected = layer_adjoint(g, spec, x)
        assert unpack(body["grad_input"]).data.tobytes() == \
            expected.input_grad.data.tobytes()
        wg = np.frombuffer(base64.b64decode(body["weight_grad"]["data_b64"]),
                           dtype="<f8")
        assert np.allclose(wg, expected.weight_grad, rtol=0, atol=0)

    def test_indivisible_channels_422(self, client, rng):
        x = random_field(rng, (8, 8), channels=3)
        r = client.post("/v1/layers/forward",
                        json={"x": payload(x), "spec": {"kind": "GI"}})
        assert r.status_code == 422
        assert r.json()["code"] == "indivisible-channel-count"


class TestProjectEndpoint:
    def test_fixed_point_with_curl_report(self, client, rng):
        f = random_field(rng, (10, 10), ring_zero=True)
        comps = gradient(f).components
        paired = Field(np.concatenate([c.data for c in comps], axis=1))
        r = client.post("/v1/project", json={"field": payload(paired),
                                             "report_curl": True})
        body = r.json()
        out = unpack(body["field"])
        assert np.abs(out.data - paired.data).max() <= 1e-9
        assert body["curl_after"] <= 1e-9
