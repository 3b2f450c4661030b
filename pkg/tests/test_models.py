import math

import numpy as np
import pytest

from emschemes.errors import DomainViolation, UnknownModel
from emschemes.models import SdeModel, builtin_model, eval_coefficients, list_models


def test_list_models():
    names = set(list_models())
    assert {"arctan2d", "gbm1d", "bm_identity"} <= names


def test_unknown_model():
    with pytest.raises(UnknownModel):
        builtin_model("heston")


def test_arctan2d_coefficients_at_origin():
    model = builtin_model("arctan2d")
    f = eval_coefficients(model, np.zeros(2))
    assert np.allclose(f[:, 0], [0.0, 0.0], atol=1e-15)
    assert np.allclose(f[:, 1], [1.0, 1.0], atol=1e-15)
    assert np.allclose(f[:, 2], [1.0, -1.0], atol=1e-15)


def test_arctan2d_exact_solution_points():
    model = builtin_model("arctan2d")
    assert np.allclose(model.exact_solution(1.0, np.zeros(2)), [0.0, 0.0])
    out = model.exact_solution(1.0, np.array([1.0, 1.0]))
    assert np.allclose(out, [math.pi / 2.0, 0.0])


def test_arctan2d_range_bound():
    model = builtin_model("arctan2d")
    w = np.random.default_rng(0).normal(size=(500, 2)) * 10.0
    x = model.exact_solution(1.0, w)
    assert np.all(np.abs(x).sum(axis=1) <= 2.0 * math.pi + 1e-12)


def test_arctan2d_domain_violation():
    model = builtin_model("arctan2d")
    # alpha = (x1+x2)/2 = pi/2 puts a tan argument on its pole.
    bad = np.array([math.pi / 2.0, math.pi / 2.0])
    assert not model.domain_contains(bad)
    with pytest.raises(DomainViolation):
        eval_coefficients(model, bad)


def test_gbm_coefficients_and_solution():
    model = builtin_model("gbm1d", sigma=1.0, mu=0.0, x0=1.0)
    f = eval_coefficients(model, np.array([2.0]))
    assert f[0, 0] == 0.0
    assert f[0, 1] == 2.0
    assert np.isclose(model.exact_solution(1.0, np.array([1.0]))[0], math.exp(0.5))


def test_bm_identity_coefficients():
    model = builtin_model("bm_identity", d=3)
    f = eval_coefficients(model, np.zeros(3))
    assert np.array_equal(f[:, 0], np.zeros(3))
    assert np.array_equal(f[:, 1:], np.eye(3))
    assert np.array_equal(model.exact_solution(1.0, np.arange(3.0)), np.arange(3.0))


def _ito_coefficients(model, t, w, h=1e-5):
    """Drift/diffusion implied by the exact solution via finite differences."""
    d = w.size
    phi = lambda tt, ww: np.asarray(model.exact_solution(tt, ww), dtype=float)
    base = phi(t, w)
    dt_term = (phi(t + h, w) - phi(t - h, w)) / (2.0 * h)
    grad = np.empty((base.size, d))
    lap = np.zeros(base.size)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        up, lo = phi(t, w + e), phi(t, w - e)
        grad[:, j] = (up - lo) / (2.0 * h)
        lap += (up - 2.0 * base + lo) / h**2
    return dt_term + 0.5 * lap, grad


@pytest.mark.parametrize(
    "name,params",
    [("gbm1d", {"sigma": 0.7, "mu": 0.3, "x0": 1.5}), ("arctan2d", {})],
)
def test_drift_matches_ito_expansion(name, params):
    model = builtin_model(name, **params)
    rng = np.random.default_rng(1)
    for _ in range(20):
        w = rng.normal(size=model.d)
        t = float(rng.uniform(0.2, 1.5))
        x = np.asarray(model.exact_solution(t, w), dtype=float)
        if not model.domain_contains(x):
            continue
        drift, diffusion = _ito_coefficients(model, t, w)
        f = eval_coefficients(model, x)
        assert np.allclose(f[:, 0], drift, rtol=1e-3, atol=1e-6)
        assert np.allclose(f[:, 1:], diffusion, rtol=1e-3, atol=1e-6)


def test_eval_coefficients_batched_shape():
    model = builtin_model("arctan2d")
    x = np.zeros((7, 2))
    f = model.coefficients(x)
    assert f.shape == (7, 2, 3)


def test_custom_model_roundtrip():
    model = SdeModel(
        name="drift_only",
        p=1,
        d=1,
        x0=np.array([0.0]),
        coefficients=lambda x: np.stack(
            [np.ones_like(x), np.zeros_like(x)], axis=-1
        ),
        domain_contains=lambda x: np.full(np.shape(x)[:-1], True),
        exact_solution=None,
        derivatives=None,
    )
    f = eval_coefficients(model, np.array([0.3]))
    assert f[0, 0] == 1.0 and f[0, 1] == 0.0
