"""Distribution samplers used by the discretisation schemes.

Scalar entry points take an :class:`RngStream`; the batch variants operate
on a :class:`StreamBatch` and are what the Monte Carlo engine calls.  A
scalar draw and the corresponding batch draw of size one consume the stream
identically, except for the stopped Brownian simulation where the scalar
version works in chunks (documented below).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asymptotics import a_constant
from .errors import BudgetExceeded
from .rng import RngStream, StreamBatch

_NORM_EPS = 1e-12
_MAX_SUBSTEPS = 10**6


@dataclass(frozen=True)
class MovingSphereDraw:
    z: float              # Gamma(1 + d/2, 2/d) variate
    tau_scaled: float     # a(d) * exp(-z), scaled step duration in (0, a]
    direction: np.ndarray  # unit vector in R^d


def sample_normal_vector(rng: RngStream, d: int) -> np.ndarray:
    if d < 1:
        raise ValueError("d must be >= 1")
    return rng.normals(d)


def sample_exponential(rng: RngStream) -> float:
    return rng.exponential()


def normal_matrix(batch: StreamBatch, d: int, idx=None) -> np.ndarray:
    return batch.normals(d, idx)


def sphere_directions(batch: StreamBatch, d: int, idx=None) -> np.ndarray:
    """(m, d) unit vectors; resamples the near-zero normal vectors."""
    n = batch.normals(d, idx)
    norm = np.sqrt(np.sum(n * n, axis=1))
    while True:
        bad = np.flatnonzero(norm < _NORM_EPS)
        if bad.size == 0:
            break
        redraw_idx = bad if idx is None else np.asarray(idx)[bad]
        n[bad] = batch.normals(d, redraw_idx)
        norm[bad] = np.sqrt(np.sum(n[bad] * n[bad], axis=1))
    return n / norm[:, None]


def sample_sphere_direction(rng: RngStream, d: int) -> np.ndarray:
    return sphere_directions(rng.batch, d)[0]


def moving_sphere_batch(batch: StreamBatch, d: int, idx=None):
    """(z, tau_scaled, directions) arrays for the moving-sphere step law.

    z = (|N|^2 + 2E)/d follows Gamma(1 + d/2, 2/d); the direction reuses
    the same normal vector N, which is independent of |N|.
    """
    n = batch.normals(d, idx)
    norm2 = np.sum(n * n, axis=1)
    while True:
        bad = np.flatnonzero(norm2 < _NORM_EPS**2)
        if bad.size == 0:
            break
        redraw_idx = bad if idx is None else np.asarray(idx)[bad]
        n[bad] = batch.normals(d, redraw_idx)
        norm2[bad] = np.sum(n[bad] * n[bad], axis=1)
    e = batch.exponentials(idx)
    z = (norm2 + 2.0 * e) / d
    tau_scaled = a_constant(d) * np.exp(-z)
    directions = n / np.sqrt(norm2)[:, None]
    return z, tau_scaled, directions


def sample_moving_sphere(rng: RngStream, d: int) -> MovingSphereDraw:
    z, tau, dirs = moving_sphere_batch(rng.batch, d)
    return MovingSphereDraw(z=float(z[0]), tau_scaled=float(tau[0]), direction=dirs[0])


def simulate_sphere_exit(
    seed: int,
    stream_ids,
    d: int,
    substep: float,
    level2: float,
    correction: bool = False,
    collect_coords: bool = False,
    max_substeps: int = _MAX_SUBSTEPS,
):
    """First time a d-dim Brownian path satisfies |W|^2 >= level2, batched.

    Grid monitoring exits late by O(sqrt(substep)); with ``correction`` a
    Brownian-bridge crossing check plus a half-step shift brings the bias
    down to O(substep).  Returns (times, coords) where coords is None unless
    requested; collected coordinates keep the raw (overshot) endpoint.
    """
    batch = StreamBatch(seed, stream_ids)
    b = batch.size
    h = float(substep)
    sqh = np.sqrt(h)
    level = np.sqrt(level2)
    times = np.zeros(b)
    coords = np.zeros((b, d)) if collect_coords else None
    w = np.zeros((b, d))
    alive = np.arange(b)
    it = 0
    while alive.size:
        it += 1
        if it > max_substeps:
            raise BudgetExceeded(
                f"no sphere exit within {max_substeps} substeps; check the stream"
            )
        z = batch.normals(d, alive) * sqh
        w_new = w + z
        r2_new = np.sum(w_new * w_new, axis=1)
        crossed = r2_new >= level2
        if correction:
            u = batch.uniforms(1, alive)[:, 0]
            if d == 1:
                w0 = w[:, 0]
                w1 = w_new[:, 0]
                p = np.exp(-2.0 * (level - w0) * (level - w1) / h)
                p += np.exp(-2.0 * (level + w0) * (level + w1) / h)
            else:
                r_old = np.sqrt(np.sum(w * w, axis=1))
                r_new = np.sqrt(r2_new)
                p = np.exp(-2.0 * (level - r_old) * (level - r_new) / h)
            exit_now = crossed | (u < np.minimum(p, 1.0))
            t_exit = (it - 0.5) * h
        else:
            exit_now = crossed
            t_exit = it * h
        if np.any(exit_now):
            gone = alive[exit_now]
            times[gone] = t_exit
            if collect_coords:
                coords[gone] = w_new[exit_now]
        keep = ~exit_now
        w = w_new[keep]
        alive = alive[keep]
    return times, coords


def sample_bessel_hitting_times(
    seed: int,
    d: int,
    substep: float,
    size: int,
    correction: bool = False,
    stream_offset: int = 0,
) -> np.ndarray:
    """iid draws of the level-1 hitting time of a d-dim Bessel process from 0."""
    ids = np.arange(size, dtype=np.uint64) + np.uint64(stream_offset)
    times, _ = simulate_sphere_exit(seed, ids, d, substep, 1.0, correction=correction)
    return times


def sample_bessel_hitting_time(
    rng: RngStream, d: int, substep: float, correction: bool = False
) -> float:
    """Single draw via chunked grid simulation on the caller's stream.

    Consumes the stream in chunks of 1024 substeps, so its draw layout
    differs from the batch sampler; both are deterministic per stream.
    Here ``correction`` applies the half-step shift only (no bridge check).
    """
    chunk = 1024
    h = float(substep)
    sqh = np.sqrt(h)
    w = np.zeros(d)
    done_steps = 0
    while done_steps < _MAX_SUBSTEPS:
        z = rng.normals(d * chunk).reshape(chunk, d) * sqh
        path = w + np.cumsum(z, axis=0)
        r2 = np.sum(path * path, axis=1)
        hits = np.flatnonzero(r2 >= 1.0)
        if hits.size:
            i = int(hits[0])
            t = (done_steps + i + 1) * h
            return t - 0.5 * h if correction else t
        w = path[-1]
        done_steps += chunk
    raise BudgetExceeded(
        f"no sphere exit within {_MAX_SUBSTEPS} substeps; check the stream"
    )
