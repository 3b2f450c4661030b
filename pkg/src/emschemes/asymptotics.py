"""Closed-form asymptotic quantities and the 1D limit-error simulator.

The limit law of the rescaled pathwise error depends on the discretisation
scheme only through a single adapted process; the constants here compare
that process across schemes (reduction ratio, efficiency bound) and the
simulator draws from the explicit one-dimensional limit representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MismatchedG, OutOfRange
from .rng import RngStream, StreamBatch


@dataclass(frozen=True)
class AsymptoticConstants:
    d: int
    a: float            # (1 + 2/d)^(1 + d/2), max admissible scaled step
    r: float            # reduction ratio of the moving-sphere scheme
    lower_bound: float  # d/(d+2), efficiency bound
    gaussian_ratio: float  # d/(d+1)


def constants(d: int) -> AsymptoticConstants:
    """All scheme-comparison constants for driving dimension d.

    Powers like (d+2)^(d+2) overflow float64 near d ~ 140, so everything
    is evaluated in log space.
    """
    if d < 1:
        raise OutOfRange("d must be >= 1")
    d = int(d)
    log_a = (1.0 + d / 2.0) * math.log1p(2.0 / d)
    log_r = (
        (d + 2) * math.log(d + 2)
        - (d / 2.0) * math.log(d)
        - ((d + 4) / 2.0) * math.log(d + 4)
    )
    return AsymptoticConstants(
        d=d,
        a=math.exp(log_a),
        r=math.exp(log_r),
        lower_bound=d / (d + 2.0),
        gaussian_ratio=d / (d + 1.0),
    )


def a_constant(d: int) -> float:
    return constants(d).a


def reduction_ratio(d: int) -> float:
    return constants(d).r


def psi(v: float, d: int) -> float:
    """Shrinking squared-radius profile d*v*log(a/v) on (0, a]."""
    a = a_constant(d)
    if not (0.0 < v <= a):
        raise OutOfRange(f"v must lie in (0, {a}]")
    return d * v * math.log(a / v)


def reduction_table(d_max: int = 30):
    """Rows (d, r(d), d/(d+2)) for d = 1..d_max."""
    rows = []
    for d in range(1, d_max + 1):
        c = constants(d)
        rows.append((d, c.r, c.lower_bound))
    return rows


def _same_g(g_a, g_b) -> bool:
    if g_a is g_b:
        return True
    try:
        return bool(g_a == g_b)
    except Exception:
        return False


def predicted_error_ratio(spec_a, spec_b, d: int) -> float:
    """Predicted mean-squared-error ratio of scheme a relative to scheme b.

    Asymptotically the error variance scales like the fourth-moment
    multiplier divided by the resolution, so the ratio is
    (HG)_a * n_b / ((HG)_b * n_a).
    """
    from .schemes import theoretical_g_h

    if not _same_g(spec_a.g_process, spec_b.g_process):
        raise MismatchedG("schemes must share the same step-intensity process")
    hg_a = theoretical_g_h(spec_a, d)[1]
    hg_b = theoretical_g_h(spec_b, d)[1]
    return (hg_a * spec_b.n) / (hg_b * spec_a.n)


def _coefficient_derivatives(model, x: np.ndarray) -> np.ndarray:
    """f'(x) for a one-dimensional model, exact if the model carries it."""
    if model.derivatives is not None:
        return model.derivatives(x)
    delta = 1e-6 * np.maximum(1.0, np.abs(x))
    up = model.coefficients(x + delta)
    lo = model.coefficients(x - delta)
    return (up - lo) / (2.0 * delta[..., None])


def simulate_limit_errors_1d(
    model,
    h_multiplier: float,
    t: float,
    seed: int,
    substeps: int,
    draws: int,
    stream_offset: int = 0,
    chunk: int = 20_000,
) -> np.ndarray:
    """Vectorized draws of the limit error at time t for a 1D-state model.

    Simulates the driving path on a grid, forms the first-variation process
    from its closed-form exponential, and integrates against an independent
    Brownian family scaled by sqrt(h_multiplier / 6).
    """
    if model.p != 1:
        raise OutOfRange("limit simulator covers one-dimensional state only")
    d = model.d
    h = t / substeps
    sqh = math.sqrt(h)
    out = np.empty(draws)
    for lo in range(0, draws, chunk):
        hi = min(lo + chunk, draws)
        batch = StreamBatch(seed, np.arange(lo, hi, dtype=np.uint64) + stream_offset)
        b = hi - lo
        dw = batch.normals(d * substeps).reshape(b, substeps, d) * sqh
        w = np.cumsum(dw, axis=1)
        # X at left endpoints of each subinterval.
        x = np.empty((b, substeps))
        if model.exact_solution is not None:
            x[:, 0] = model.exact_solution(0.0, np.zeros((b, d)))[..., 0]
            for k in range(1, substeps):
                x[:, k] = model.exact_solution(k * h, w[:, k - 1, :])[..., 0]
        else:
            cur = np.full((b, 1), float(model.x0[0]))
            x[:, 0] = cur[:, 0]
            for k in range(1, substeps):
                f = model.coefficients(cur)  # (b, 1, d+1)
                cur = cur + f[:, :, 0] * h + np.einsum(
                    "bpj,bj->bp", f[:, :, 1:], dw[:, k - 1, :]
                )
                x[:, k] = cur[:, 0]
        xs = x[..., None]  # (b, substeps, 1) state axis
        f = model.coefficients(xs)[:, :, 0, :]       # (b, substeps, d+1)
        fp = _coefficient_derivatives(model, xs)[:, :, 0, :]
        # log of the first-variation process at left endpoints.
        dlogy = fp[:, :, 0] * h + np.einsum("bkj,bkj->bk", fp[:, :, 1:], dw)
        dlogy -= 0.5 * np.sum(fp[:, :, 1:] ** 2, axis=2) * h
        logy_left = np.concatenate(
            [np.zeros((b, 1)), np.cumsum(dlogy, axis=1)[:, :-1]], axis=1
        )
        y_term = np.exp(np.sum(dlogy, axis=1))
        yinv = np.exp(-logy_left)
        # Integrand per driving pair (l, j): Y^{-1} f_j'(X) f_l(X).
        xi = batch.normals(d * d * substeps).reshape(b, substeps, d, d)
        coef = (
            yinv[:, :, None, None]
            * fp[:, :, None, 1:]      # j index last
            * f[:, :, 1:, None]       # l index third
        )
        scale = math.sqrt(h_multiplier / 6.0) * sqh
        out[lo:hi] = -y_term * scale * np.einsum("bklj,bklj->b", coef, xi)
    return out


def simulate_limit_error_1d(
    model, h_multiplier: float, t: float, rng: RngStream, substeps: int
) -> float:
    """One draw of the limit error; see :func:`simulate_limit_errors_1d`."""
    val = simulate_limit_errors_1d(
        model, h_multiplier, t, rng.seed, substeps, 1, stream_offset=rng.stream_id
    )
    return float(val[0])
