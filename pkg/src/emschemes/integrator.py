"""Euler-Maruyama recursion over a scheme's partition, batched across paths.

Every path owns a counter-based stream keyed by (seed, stream_id), so the
result of a path is a pure function of the model, scheme, horizon and its
key: batches can be split across workers in any way without changing any
number.  The scalar entry points run a batch of size one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import a_constant
from .errors import MissingExactSolution
from .rng import RngStream, StreamBatch
from .schemes import (
    SchemeSpec,
    evaluate_g,
    finishing_count,
    gaussian_increments,
    moving_sphere_draw,
    sphere_hitting_draw,
)

_EPS = 1e-12


@dataclass(frozen=True)
class PathResult:
    x_terminal: np.ndarray
    w_terminal: np.ndarray
    step_count: int
    finishing_steps: int
    z_diag: np.ndarray
    exited_domain: bool


@dataclass
class BatchPathResult:
    x_terminal: np.ndarray      # (B, p)
    w_terminal: np.ndarray      # (B, d)
    step_count: np.ndarray      # (B,)
    finishing_steps: np.ndarray  # (B,)
    z_diag: np.ndarray          # (B, d)
    exited_domain: np.ndarray   # (B,) bool

    def row(self, i: int) -> PathResult:
        return PathResult(
            x_terminal=self.x_terminal[i].copy(),
            w_terminal=self.w_terminal[i].copy(),
            step_count=int(self.step_count[i]),
            finishing_steps=int(self.finishing_steps[i]),
            z_diag=self.z_diag[i].copy(),
            exited_domain=bool(self.exited_domain[i]),
        )


_MAIN, _FINISH, _DONE = 0, 1, 2


def euler_maruyama_batch(model, spec: SchemeSpec, t: float, batch: StreamBatch) -> BatchPathResult:
    """Run one path per stream in the batch up to the horizon t."""
    b = batch.size
    p, d, n = model.p, model.d, spec.n
    sqn = math.sqrt(n)
    x = np.tile(np.asarray(model.x0, dtype=float), (b, 1))
    w = np.zeros((b, d))
    z = np.zeros((b, d))
    t_cur = np.zeros(b)
    m = np.zeros(b, dtype=np.int64)
    steps = np.zeros(b, dtype=np.int64)
    fins = np.zeros(b, dtype=np.int64)
    exited = np.zeros(b, dtype=bool)
    phase = np.full(b, _MAIN, dtype=np.int8)
    fin_dt = np.zeros(b)
    fin_left = np.zeros(b, dtype=np.int64)

    def apply_step(idx, dt, dw, finishing):
        f = model.coefficients(x[idx])  # (A, p, d+1)
        x_new = x[idx] + f[:, :, 0] * dt[:, None] + np.einsum("apj,aj->ap", f[:, :, 1:], dw)
        x[idx] = x_new
        w[idx] += dw
        z[idx] += sqn * (dw * dw - dt[:, None]) / 2.0
        steps[idx] += 1
        if finishing:
            fins[idx] += 1
        inside = np.asarray(model.domain_contains(x_new), dtype=bool)
        out = ~inside
        if np.any(out):
            gone = idx[out]
            exited[gone] = True
            phase[gone] = _DONE

    def enter_finishing(idx):
        remaining = t - t_cur[idx]
        ks = np.array([finishing_count(spec, float(r)) for r in remaining], dtype=np.int64)
        zero = ks == 0
        if np.any(zero):
            phase[idx[zero]] = _DONE
            t_cur[idx[zero]] = t
        pos = ~zero
        if np.any(pos):
            sel = idx[pos]
            fin_dt[sel] = remaining[pos] / ks[pos]
            fin_left[sel] = ks[pos]
            phase[sel] = _FINISH

    while True:
        main_idx = np.flatnonzero((phase == _MAIN) & ~exited)
        if main_idx.size:
            tc = t_cur[main_idx]
            at_end = (t - tc) <= _EPS
            if np.any(at_end):
                done = main_idx[at_end]
                phase[done] = _DONE
                t_cur[done] = t
                main_idx = main_idx[~at_end]
            if main_idx.size:
                tc = t_cur[main_idx]
                if spec.kind in ("equidistant", "adaptive_gaussian", "time_change"):
                    if spec.kind == "equidistant":
                        nominal = (m[main_idx] + 1) / n
                    elif spec.kind == "time_change":
                        g_fn = spec.time_change_fn
                        args = (m[main_idx] + 1) / n
                        try:
                            nominal = np.asarray(g_fn(args), dtype=float)
                            if nominal.shape != args.shape:
                                raise TypeError
                        except Exception:
                            nominal = np.array([g_fn(float(u)) for u in args])
                    else:
                        g = np.atleast_1d(evaluate_g(spec, tc, x[main_idx]))
                        nominal = tc + 1.0 / (n * g)
                    full = nominal <= t + _EPS
                    target = np.where(full, nominal, t)
                    dt = target - tc
                    dw = gaussian_increments(batch, main_idx, d, dt)
                    apply_step(main_idx, dt, dw, finishing=False)
                    truncated = main_idx[~full]
                    if truncated.size:
                        fins[truncated] += 1
                    t_cur[main_idx] = target
                    m[main_idx] += 1
                    landed = main_idx[(t - target) <= _EPS]
                    sel = landed[phase[landed] != _DONE]
                    phase[sel] = _DONE
                    t_cur[sel] = t
                elif spec.kind == "moving_sphere":
                    g = np.atleast_1d(evaluate_g(spec, tc, x[main_idx]))
                    gp = 1.0 / (n * g)
                    go = (t - tc) >= a_constant(d) * gp - _EPS
                    to_finish = main_idx[~go]
                    stepping = main_idx[go]
                    if stepping.size:
                        dt, dw = moving_sphere_draw(spec, batch, stepping, d, g[go])
                        apply_step(stepping, dt, dw, finishing=False)
                        t_cur[stepping] += dt
                        m[stepping] += 1
                    if to_finish.size:
                        enter_finishing(to_finish)
                else:  # sphere_hitting
                    g = np.atleast_1d(evaluate_g(spec, tc, x[main_idx]))
                    dt, dw = sphere_hitting_draw(spec, batch, main_idx, d, g)
                    accept = tc + dt <= t + _EPS
                    stepping = main_idx[accept]
                    if stepping.size:
                        apply_step(stepping, dt[accept], dw[accept], finishing=False)
                        t_cur[stepping] += dt[accept]
                        m[stepping] += 1
                    # Overshooting draws are discarded; the path closes with
                    # equidistant Gaussian steps instead.
                    rejected = main_idx[~accept]
                    if rejected.size:
                        enter_finishing(rejected)
        fin_idx = np.flatnonzero((phase == _FINISH) & ~exited)
        if fin_idx.size:
            last = fin_left[fin_idx] == 1
            dt = np.where(last, t - t_cur[fin_idx], fin_dt[fin_idx])
            dw = gaussian_increments(batch, fin_idx, d, dt)
            apply_step(fin_idx, dt, dw, finishing=True)
            t_cur[fin_idx] += dt
            fin_left[fin_idx] -= 1
            m[fin_idx] += 1
            closing = fin_idx[(fin_left[fin_idx] == 0) & (phase[fin_idx] == _FINISH)]
            phase[closing] = _DONE
            t_cur[closing] = t
        if not np.any((phase != _DONE) & ~exited):
            break
    return BatchPathResult(
        x_terminal=x,
        w_terminal=w,
        step_count=steps,
        finishing_steps=fins,
        z_diag=z,
        exited_domain=exited,
    )


def euler_maruyama_path(model, spec: SchemeSpec, t: float, rng: RngStream) -> PathResult:
    return euler_maruyama_batch(model, spec, t, rng.batch).row(0)


def coupled_errors_batch(model, spec: SchemeSpec, t: float, batch: StreamBatch):
    """(errors, batch result) with the same Brownian path feeding both sides."""
    if model.exact_solution is None:
        raise MissingExactSolution(f"model {model.name!r} has no exact solution")
    res = euler_maruyama_batch(model, spec, t, batch)
    exact = model.exact_solution(t, res.w_terminal)
    return res.x_terminal - exact, res


def coupled_error(model, spec: SchemeSpec, t: float, rng: RngStream) -> np.ndarray:
    errors, _ = coupled_errors_batch(model, spec, t, rng.batch)
    return errors[0]


def step_count_ratio(model, spec: SchemeSpec, t: float, rng: RngStream, replications: int) -> float:
    """Mean of step_count / n over replications on consecutive streams."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    ids = np.arange(replications, dtype=np.uint64) + np.uint64(rng.stream_id)
    batch = StreamBatch(rng.seed, ids)
    res = euler_maruyama_batch(model, spec, t, batch)
    return float(np.mean(res.step_count)) / spec.n
