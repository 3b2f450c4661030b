"""Partition increment generators for the five discretisation schemes.

A scheme emits pairs (dt, dw) of step durations and driving-noise
increments.  Kinds:

- ``equidistant``: dt = 1/n, Gaussian increments;
- ``adaptive_gaussian``: dt = 1/(n G), Gaussian increments;
- ``time_change``: dt follows a deterministic clock g(m/n), Gaussian;
- ``sphere_hitting``: exit times of a fixed sphere of squared radius
  d/(n G); the increment is uniform on that sphere;
- ``moving_sphere``: exit times of a sphere whose squared radius shrinks
  along d*v*log(a/v); both dt and dw have closed-form samplers and are
  bounded (dt <= a/(nG), |dw|^2 <= d*a/(e*nG)).

Near the horizon every scheme finishes with equidistant Gaussian steps of
size <= 1/n that land exactly on the target time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .asymptotics import a_constant, reduction_ratio
from .errors import InvalidG, ValidationError
from .rng import RngStream, StreamBatch
from .samplers import moving_sphere_batch, simulate_sphere_exit, sphere_directions

KINDS = ("equidistant", "adaptive_gaussian", "time_change", "sphere_hitting", "moving_sphere")

# Internal seed for the cached exit-time pool; part of the algorithm, not
# of the user-facing seeding.
_POOL_SEED = 0x42D5_EEDB
_POOL_SUBSTEP = 1e-3
_POOL_SIZE = 100_000


class ConstantG:
    """Constant step-intensity process; comparable by value."""

    def __init__(self, value: float = 1.0):
        self.value = float(value)

    def __call__(self, t, x):
        return np.broadcast_to(self.value, np.shape(t)).copy() if np.ndim(t) else self.value

    def __eq__(self, other):
        return isinstance(other, ConstantG) and other.value == self.value

    def __hash__(self):
        return hash(("ConstantG", self.value))

    def __repr__(self):
        return f"ConstantG({self.value})"


@dataclass(frozen=True)
class SchemeSpec:
    kind: str
    n: int
    g_process: Callable = field(default_factory=ConstantG)
    time_change_fn: Optional[Callable[[float], float]] = None
    bessel_substep: float = _POOL_SUBSTEP
    bessel_pool: int = _POOL_SIZE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown scheme kind {self.kind!r}")
        if self.n < 1:
            raise ValidationError("n must be a positive integer")
        if (self.time_change_fn is not None) != (self.kind == "time_change"):
            raise ValidationError("time_change_fn is required exactly for kind 'time_change'")
        if self.time_change_fn is not None:
            _validate_time_change(self.time_change_fn)


def _validate_time_change(g: Callable[[float], float]) -> None:
    if abs(g(0.0)) > 1e-12:
        raise ValidationError("time change must satisfy g(0) = 0")
    # Monotonicity probed on a fixed grid; a full proof is the caller's job.
    probes = np.linspace(0.0, 4.0, 1024)
    vals = np.array([g(u) for u in probes])
    if not np.all(np.diff(vals) > 0):
        raise ValidationError("time change must be strictly increasing")


@dataclass(frozen=True)
class SchemeStep:
    dt: float
    dw: np.ndarray
    finishing: bool = False


@dataclass
class SchemeState:
    """Per-path cursor: current time, current state, step index."""

    t: float
    x: np.ndarray
    m: int
    d: int


@lru_cache(maxsize=8)
def bessel_exit_pool(d: int, substep: float = _POOL_SUBSTEP, size: int = _POOL_SIZE) -> np.ndarray:
    """Cached iid exit times of the unit sphere for d-dim Brownian motion.

    Bridge-corrected so the O(sqrt(substep)) grid bias drops to O(substep);
    scheme steps bootstrap from this pool instead of paying a fine-grid
    simulation per step.
    """
    ids = np.arange(size, dtype=np.uint64)
    times, _ = simulate_sphere_exit(_POOL_SEED, ids, d, substep, 1.0, correction=True)
    return times


def evaluate_g(spec: SchemeSpec, t, x) -> np.ndarray:
    """G along the path; positive finite values enforced."""
    val = np.asarray(spec.g_process(t, x), dtype=float)
    val = np.broadcast_to(val, np.shape(t)).astype(float) if np.ndim(t) else val
    if not np.all(np.isfinite(val)) or np.any(val <= 0.0):
        raise InvalidG("g_process must return positive finite values")
    return val


def gaussian_increments(batch: StreamBatch, idx, d: int, dt: np.ndarray) -> np.ndarray:
    return np.sqrt(dt)[:, None] * batch.normals(d, idx)


def sphere_hitting_draw(spec: SchemeSpec, batch: StreamBatch, idx, d: int, g: np.ndarray):
    """(dt, dw) for the fixed-sphere scheme via the bootstrap pool."""
    pool = bessel_exit_pool(d, spec.bessel_substep, spec.bessel_pool)
    u = batch.uniforms(1, idx)[:, 0]
    pick = np.minimum((u * pool.shape[0]).astype(np.int64), pool.shape[0] - 1)
    radius2 = d / (spec.n * g)
    dt = radius2 * pool[pick]
    dw = np.sqrt(radius2)[:, None] * sphere_directions(batch, d, idx)
    return dt, dw


def moving_sphere_draw(spec: SchemeSpec, batch: StreamBatch, idx, d: int, g: np.ndarray):
    """(dt, dw) for the moving-sphere scheme, both bounded by construction."""
    z, tau_scaled, dirs = moving_sphere_batch(batch, d, idx)
    gp = 1.0 / (spec.n * g)
    dt = tau_scaled * gp
    radius = np.sqrt(a_constant(d) * d * z * np.exp(-z) * gp)
    dw = radius[:, None] * dirs
    return dt, dw


def next_step(spec: SchemeSpec, state: SchemeState, rng: RngStream) -> SchemeStep:
    """One non-finishing step of the scheme at the current cursor."""
    d = state.d
    batch = rng.batch
    g = np.atleast_1d(evaluate_g(spec, state.t, state.x)).astype(float)
    if spec.kind == "equidistant":
        dt = np.array([1.0 / spec.n])
        dw = gaussian_increments(batch, None, d, dt)
    elif spec.kind == "adaptive_gaussian":
        dt = 1.0 / (spec.n * g)
        dw = gaussian_increments(batch, None, d, dt)
    elif spec.kind == "time_change":
        g_fn = spec.time_change_fn
        dt = np.array([g_fn((state.m + 1) / spec.n) - g_fn(state.m / spec.n)])
        dw = gaussian_increments(batch, None, d, dt)
    elif spec.kind == "sphere_hitting":
        dt, dw = sphere_hitting_draw(spec, batch, None, d, g)
    else:
        dt, dw = moving_sphere_draw(spec, batch, None, d, g)
    return SchemeStep(dt=float(dt[0]), dw=dw[0], finishing=False)


def finishing_count(spec: SchemeSpec, remaining: float) -> int:
    """Number of equidistant closing steps so that each is <= 1/n."""
    if remaining <= 0.0:
        return 0
    return max(1, int(math.ceil(remaining * spec.n - 1e-9)))


def finish_to_horizon(spec: SchemeSpec, state: SchemeState, horizon: float, rng: RngStream):
    """Equidistant Gaussian steps from the cursor landing exactly on the horizon."""
    remaining = horizon - state.t
    k = finishing_count(spec, remaining)
    if k == 0:
        return []
    steps = []
    t_cur = state.t
    for j in range(k):
        target = horizon if j == k - 1 else state.t + (j + 1) * remaining / k
        dt = target - t_cur
        dw = math.sqrt(dt) * rng.normals(state.d)
        steps.append(SchemeStep(dt=dt, dw=dw, finishing=True))
        t_cur = target
    return steps


def theoretical_g_h(spec: SchemeSpec, d: int):
    """(G multiplier, H*G) pair of scheme constants.

    The H*G product is what the limit error law sees; Gaussian kinds give 3,
    the fixed sphere 3d/(d+2) and the moving sphere 3*r(d).  For
    ``time_change`` the instantaneous G varies as 1/g'; the multiplier
    reported here refers to the supplied g_process.
    """
    if spec.kind == "sphere_hitting":
        hg = 3.0 * d / (d + 2.0)
    elif spec.kind == "moving_sphere":
        hg = 3.0 * reduction_ratio(d)
    else:
        hg = 3.0
    return (1.0, hg)


def with_g(spec: SchemeSpec, value: float) -> SchemeSpec:
    return replace(spec, g_process=ConstantG(value))
