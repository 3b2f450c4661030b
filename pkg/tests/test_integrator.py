import numpy as np
import pytest

from emschemes.errors import MissingExactSolution
from emschemes.integrator import (
    coupled_error,
    coupled_errors_batch,
    euler_maruyama_batch,
    euler_maruyama_path,
    step_count_ratio,
)
from emschemes.models import SdeModel, builtin_model
from emschemes.rng import RngStream, StreamBatch
from emschemes.schemes import ConstantG, SchemeSpec

ALL_KINDS = [
    SchemeSpec(kind="equidistant", n=16),
    SchemeSpec(kind="adaptive_gaussian", n=16),
    SchemeSpec(kind="time_change", n=16, time_change_fn=lambda u: u),
    SchemeSpec(kind="sphere_hitting", n=16),
    SchemeSpec(kind="moving_sphere", n=16),
]


@pytest.mark.parametrize("spec", ALL_KINDS, ids=lambda s: s.kind)
def test_bm_identity_coupling_is_exact(spec):
    model = builtin_model("bm_identity", d=2)
    batch = StreamBatch(1, np.arange(200, dtype=np.uint64))
    errors, res = coupled_errors_batch(model, spec, 1.0, batch)
    assert np.array_equal(res.x_terminal, res.w_terminal)
    assert np.all(errors == 0.0)
    assert np.all(res.step_count >= 1)
    assert np.all(res.finishing_steps <= res.step_count)
    assert not np.any(res.exited_domain)


def test_single_euler_step_gbm():
    model = builtin_model("gbm1d", sigma=1.0, mu=0.0, x0=1.0)
    spec = SchemeSpec(kind="equidistant", n=1)
    res = euler_maruyama_path(model, spec, 1.0, RngStream(2, 0))
    assert res.step_count == 1
    assert np.isclose(res.x_terminal[0], 1.0 + res.w_terminal[0])


def test_path_matches_batch_row():
    model = builtin_model("gbm1d")
    spec = SchemeSpec(kind="moving_sphere", n=8)
    single = euler_maruyama_path(model, spec, 1.0, RngStream(3, 5))
    batch = euler_maruyama_batch(
        model, spec, 1.0, StreamBatch(3, np.arange(3, 8, dtype=np.uint64))
    )
    row = batch.row(2)  # stream_id 5
    assert np.array_equal(single.x_terminal, row.x_terminal)
    assert np.array_equal(single.w_terminal, row.w_terminal)
    assert single.step_count == row.step_count
    assert np.array_equal(single.z_diag, row.z_diag)


def test_reproducible_across_calls():
    model = builtin_model("arctan2d")
    spec = SchemeSpec(kind="moving_sphere", n=20)
    a = euler_maruyama_path(model, spec, 1.0, RngStream(4, 9))
    b = euler_maruyama_path(model, spec, 1.0, RngStream(4, 9))
    assert np.array_equal(a.x_terminal, b.x_terminal)
    assert a.step_count == b.step_count


def test_missing_exact_solution():
    model = SdeModel(
        name="no_exact",
        p=1,
        d=1,
        x0=np.zeros(1),
        coefficients=lambda x: np.stack(
            [np.zeros_like(x), np.ones_like(x)], axis=-1
        ),
        domain_contains=lambda x: np.isfinite(x).all(axis=-1),
        exact_solution=None,
    )
    with pytest.raises(MissingExactSolution):
        coupled_error(model, SchemeSpec(kind="equidistant", n=4), 1.0, RngStream(5, 0))


def test_domain_exit_flags_path():
    # Deterministic drift 1, no noise, domain x < 0.5: exits mid-horizon.
    model = SdeModel(
        name="escaper",
        p=1,
        d=1,
        x0=np.zeros(1),
        coefficients=lambda x: np.stack(
            [np.ones_like(x), np.zeros_like(x)], axis=-1
        ),
        domain_contains=lambda x: x[..., 0] < 0.5,
        exact_solution=lambda t, w: np.full(np.shape(w), np.nan),
    )
    res = euler_maruyama_path(
        model, SchemeSpec(kind="equidistant", n=10), 1.0, RngStream(6, 0)
    )
    assert res.exited_domain
    assert res.step_count < 10


def test_step_count_ratio_deterministic_kinds():
    model = builtin_model("bm_identity", d=1)
    assert step_count_ratio(
        model, SchemeSpec(kind="equidistant", n=100), 1.0, RngStream(7), 10
    ) == 1.0
    ratio = step_count_ratio(
        model,
        SchemeSpec(kind="adaptive_gaussian", n=100, g_process=ConstantG(2.0)),
        1.0,
        RngStream(7),
        10,
    )
    assert abs(ratio - 2.0) < 0.02


def test_step_count_ratio_moving_sphere():
    model = builtin_model("bm_identity", d=1)
    spec = SchemeSpec(kind="moving_sphere", n=100)
    ratio = step_count_ratio(model, spec, 1.0, RngStream(8), 10_000)
    assert abs(ratio - 1.0) < 0.02 + 0.05  # law + finishing overhead budget


def test_z_diag_statistics():
    model = builtin_model("bm_identity", d=1)
    spec = SchemeSpec(kind="equidistant", n=200)
    batch = StreamBatch(9, np.arange(20_000, dtype=np.uint64))
    res = euler_maruyama_batch(model, spec, 1.0, batch)
    z = res.z_diag[:, 0]
    assert abs(z.mean()) < 0.02
    assert abs(z.var() - 0.5) < 0.05


def test_strong_convergence_rate():
    model = builtin_model("gbm1d", sigma=1.0, mu=0.0, x0=1.0)
    m2 = {}
    for n in (250, 1000):
        batch = StreamBatch(10, np.arange(20_000, dtype=np.uint64))
        errors, _ = coupled_errors_batch(
            model, SchemeSpec(kind="equidistant", n=n), 1.0, batch
        )
        m2[n] = float(np.mean(errors[:, 0] ** 2))
    drop = m2[250] / m2[1000]
    assert abs(drop - 4.0) < 1.2  # order-1/2 strong rate, 30% tolerance


def test_replications_validation():
    model = builtin_model("bm_identity", d=1)
    with pytest.raises(ValueError):
        step_count_ratio(model, SchemeSpec(kind="equidistant", n=4), 1.0, RngStream(1), 0)
