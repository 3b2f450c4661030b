"""SDE models: coefficient fields, domains, and closed-form solutions.

A model's ``coefficients`` map is vectorized: it takes states of shape
(..., p) and returns (..., p, d+1) with column 0 multiplying dt and columns
1..d multiplying the Brownian increments.  Models are immutable and safe to
share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainViolation, UnknownModel

_TAN_GUARD = 1e-9


@dataclass(frozen=True, eq=False)
class SdeModel:
    name: str
    p: int
    d: int
    x0: np.ndarray
    coefficients: Callable[[np.ndarray], np.ndarray]
    domain_contains: Callable[[np.ndarray], np.ndarray]
    exact_solution: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    # Exact coefficient derivatives, used by the 1D limit simulator.
    derivatives: Optional[Callable[[np.ndarray], np.ndarray]] = None


def eval_coefficients(model: SdeModel, x) -> np.ndarray:
    """Coefficient matrix f(x), guarding the model domain."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != model.p:
        raise ValueError(f"state must have {model.p} coordinates")
    if not np.all(model.domain_contains(x)):
        raise DomainViolation(f"state outside domain of model {model.name!r}")
    return model.coefficients(x)


def _arctan2d_halves(x: np.ndarray):
    alpha = 0.5 * (x[..., 0] + x[..., 1])
    beta = 0.5 * (x[..., 0] - x[..., 1])
    return alpha, beta


def _arctan2d_coefficients(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    alpha, beta = _arctan2d_halves(x)
    ta = np.tan(alpha)
    tb = np.tan(beta)
    ca = 1.0 / (1.0 + ta * ta)
    cb = 1.0 / (1.0 + tb * tb)
    out = np.empty(x.shape[:-1] + (2, 3))
    out[..., 0, 0] = -(ta * ca * ca + tb * cb * cb)
    out[..., 1, 0] = -(ta * ca * ca - tb * cb * cb)
    out[..., 0, 1] = ca
    out[..., 1, 1] = ca
    out[..., 0, 2] = cb
    out[..., 1, 2] = -cb
    return out


def _arctan2d_domain(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    alpha, beta = _arctan2d_halves(x)
    ok = np.isfinite(alpha) & np.isfinite(beta)
    for angle in (alpha, beta):
        rem = np.remainder(angle - 0.5 * np.pi, np.pi)
        dist = np.minimum(rem, np.pi - rem)
        ok = ok & (dist > _TAN_GUARD)
    return ok


def _arctan2d_exact(t: float, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    a1 = np.arctan(w[..., 0])
    a2 = np.arctan(w[..., 1])
    return np.stack([a1 + a2, a1 - a2], axis=-1)


def _make_arctan2d() -> SdeModel:
    return SdeModel(
        name="arctan2d",
        p=2,
        d=2,
        x0=np.zeros(2),
        coefficients=_arctan2d_coefficients,
        domain_contains=_arctan2d_domain,
        exact_solution=_arctan2d_exact,
    )


def _make_gbm1d(sigma: float = 1.0, mu: float = 0.0, x0: float = 1.0) -> SdeModel:
    sigma = float(sigma)
    mu = float(mu)
    start = float(x0)

    def coefficients(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + (1, 2))
        out[..., 0, 0] = mu * x[..., 0]
        out[..., 0, 1] = sigma * x[..., 0]
        return out

    def derivatives(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + (1, 2))
        out[..., 0, 0] = mu
        out[..., 0, 1] = sigma
        return out

    def exact(t, w):
        w = np.asarray(w, dtype=float)
        val = start * np.exp(sigma * w[..., 0] + (mu - 0.5 * sigma * sigma) * t)
        return val[..., None]

    def domain(x):
        return np.isfinite(np.asarray(x, dtype=float)).all(axis=-1)

    return SdeModel(
        name="gbm1d",
        p=1,
        d=1,
        x0=np.array([start]),
        coefficients=coefficients,
        domain_contains=domain,
        exact_solution=exact,
        derivatives=derivatives,
    )


def _make_bm_identity(d: int = 1) -> SdeModel:
    d = int(d)
    eye = np.eye(d)

    def coefficients(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (d, d + 1))
        out[..., :, 1:] = eye
        return out

    def derivatives(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (d, d + 1))

    def exact(t, w):
        return np.asarray(w, dtype=float).copy()

    def domain(x):
        return np.isfinite(np.asarray(x, dtype=float)).all(axis=-1)

    return SdeModel(
        name="bm_identity",
        p=d,
        d=d,
        x0=np.zeros(d),
        coefficients=coefficients,
        domain_contains=domain,
        exact_solution=exact,
        derivatives=derivatives if d == 1 else None,
    )


_BUILTINS = {
    "arctan2d": (_make_arctan2d, {}),
    "gbm1d": (_make_gbm1d, {"sigma": 1.0, "mu": 0.0, "x0": 1.0}),
    "bm_identity": (_make_bm_identity, {"d": 1}),
}


def builtin_model(name: str, **params) -> SdeModel:
    try:
        factory, schema = _BUILTINS[name]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; see list_models()") from None
    unknown = set(params) - set(schema)
    if unknown:
        raise UnknownModel(f"model {name!r} does not take parameters {sorted(unknown)}")
    return factory(**params)


def list_models():
    """Mapping name -> default parameter dict."""
    return {name: dict(schema) for name, (_, schema) in _BUILTINS.items()}
