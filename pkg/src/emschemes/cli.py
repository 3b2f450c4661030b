"""Command-line entry point.

Verbs: run (CSV moment report), table (side-by-side moments), figure
(reduction-ratio CSV), verify (self checks), list-models.  Experiments are
described by a flat key=value config; see :func:`parse_config`.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import asymptotics, experiments, models
from .errors import EmschemesError, ParseError, ValidationError
from .rng import RngStream
from .samplers import moving_sphere_batch
from .rng import StreamBatch
from .schemes import KINDS, ConstantG, SchemeSpec

_CONFIG_KEYS = {
    "model", "schemes", "g", "paths", "horizon", "seed", "substep", "out",
    "workers",
}


@dataclass
class CliCommand:
    verb: str
    config_path: Optional[str] = None
    overrides: tuple = ()
    out: Optional[str] = None
    d_max: int = 30


def parse_config(text: str, overrides=()) -> experiments.ExperimentConfig:
    """Flat key = value config with '#' comments.

    Keys: model, model.params.<name>, schemes (comma list of kinds),
    n.<kind>, g, paths, horizon, seed, substep, workers, out.
    """
    data = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key or not val:
            raise ParseError(f"line {lineno}: empty key or value")
        data[key] = val
    for item in overrides:
        if "=" not in item:
            raise ParseError(f"override {item!r}: expected 'key=value'")
        key, val = (s.strip() for s in item.split("=", 1))
        data[key] = val
    for key in data:
        base = key.split(".")[0]
        if key in _CONFIG_KEYS or key.startswith("model.params.") or key.startswith("n."):
            continue
        raise ValidationError(f"unknown config key {key!r}")

    if "model" not in data:
        raise ValidationError("config key 'model' is missing")
    model_name = data["model"]
    params = {}
    for key, val in data.items():
        if key.startswith("model.params."):
            name = key[len("model.params."):]
            try:
                params[name] = float(val)
            except ValueError:
                raise ValidationError(f"config key {key!r} must be numeric") from None

    def _get(key, cast, default):
        if key not in data:
            return default
        try:
            return cast(data[key])
        except ValueError:
            raise ValidationError(f"config key {key!r} must be {cast.__name__}") from None

    g_value = _get("g", float, 1.0)
    paths = _get("paths", int, 100_000)
    horizon = _get("horizon", float, 1.0)
    seed = _get("seed", int, 42)
    substep = _get("substep", float, 1e-4)
    workers = _get("workers", int, None)
    if paths < 2:
        raise ValidationError("config key 'paths' must be >= 2")
    if horizon <= 0:
        raise ValidationError("config key 'horizon' must be > 0")

    schemes = []
    if "schemes" in data:
        for kind in (s.strip() for s in data["schemes"].split(",")):
            if kind not in KINDS:
                raise ValidationError(f"config key 'schemes': unknown kind {kind!r}")
            n_key = f"n.{kind}"
            if n_key not in data:
                raise ValidationError(f"config key {n_key!r} is missing")
            try:
                n = int(data[n_key])
            except ValueError:
                raise ValidationError(f"config key {n_key!r} must be int") from None
            schemes.append(SchemeSpec(kind=kind, n=n, g_process=ConstantG(g_value)))

    return experiments.ExperimentConfig(
        model=model_name,
        model_params=params,
        schemes=schemes,
        horizon=horizon,
        paths=paths,
        seed=seed,
        substep=substep,
        out=data.get("out"),
        workers=workers,
    )


def _load_config(cmd: CliCommand) -> experiments.ExperimentConfig:
    if not cmd.config_path:
        raise ValidationError(f"verb {cmd.verb!r} requires a config file (-c)")
    with open(cmd.config_path, "r", encoding="utf-8") as fh:
        text = fh.read()
    cfg = parse_config(text, cmd.overrides)
    if not cfg.schemes:
        raise ValidationError("config key 'schemes' is missing")
    return cfg


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _figure_csv(d_max: int) -> str:
    lines = ["d,r,lower_bound"]
    for d, r, lb in asymptotics.reduction_table(d_max):
        lines.append(f"{d},{r!r},{lb!r}")
    return "\n".join(lines) + "\n"


def _run(cmd: CliCommand) -> int:
    cfg = _load_config(cmd)
    reports = experiments.run_monte_carlo(cfg)
    _emit(experiments.moment_csv(reports), cmd.out or cfg.out)
    return 0


def _table(cmd: CliCommand) -> int:
    cfg = _load_config(cmd)
    runs = experiments._mc_run(cfg)
    width = max(len(k) for k in runs) + 10
    for key, run in runs.items():
        for rep in run.reports:
            label = f"{key} (coord {rep.coordinate})"
            print(
                f"{label:<{width}} mean={rep.mean:+.3e}  m2={rep.m2:.3e}  "
                f"m3={rep.m3:+.3e}  m4={rep.m4:.3e}"
            )
        print(
            f"{key:<{width}} mean steps/path = {run.mean_steps:.1f} "
            f"(finishing {run.mean_finishing:.2f})"
        )
    if cmd.out or cfg.out:
        _emit(experiments.moment_csv({k: r.reports for k, r in runs.items()}),
              cmd.out or cfg.out)
    return 0


def _verify(cmd: CliCommand) -> int:
    checks = []

    def check(name, ok, detail=""):
        checks.append(ok)
        status = "pass" if ok else "FAIL"
        print(f"{status}  {name}" + (f"  ({detail})" if detail else ""))

    ok = True
    for d in range(1, 101):
        c = asymptotics.constants(d)
        ok = ok and c.lower_bound < c.r < c.gaussian_ratio
    check("reduction ratio bracketing d=1..100", ok)

    for d in (1, 2):
        batch = StreamBatch(20_260_824 + d, np.arange(200_000, dtype=np.uint64))
        z, tau, dirs = moving_sphere_batch(batch, d)
        a = asymptotics.a_constant(d)
        mean_dt = float(np.mean(tau))
        dw4 = float(np.mean((np.sqrt(a * d * z * np.exp(-z)) * dirs[:, 0]) ** 4))
        bounded = bool(np.all(tau <= a) and np.all(a * d * z * np.exp(-z) <= d * a / np.e + 1e-12))
        check(
            f"moving-sphere mean step (d={d})",
            abs(mean_dt - 1.0) < 0.02,
            f"{mean_dt:.4f}",
        )
        target = 3.0 * asymptotics.reduction_ratio(d)
        check(
            f"moving-sphere fourth moment (d={d})",
            abs(dw4 / target - 1.0) < 0.03,
            f"{dw4:.4f} vs {target:.4f}",
        )
        check(f"moving-sphere bounds (d={d})", bounded)

    est, bound = experiments.verify_sphere_optimality(
        2, 1.0, 20_000, 2e-4, RngStream(20_260_824)
    )
    check("sphere exit fourth-moment identity (d=2)",
          abs(est / bound - 1.0) < 0.03, f"{est:.4f} vs {bound:.4f}")
    est1, _ = experiments.verify_sphere_optimality(
        1, 1.0, 2_000, 2e-4, RngStream(20_260_824)
    )
    check("sphere exit fourth moment (d=1)", abs(est1 - 1.0) < 1e-12, f"{est1!r}")

    a1 = asymptotics.a_constant(1)
    check("shrinking profile vanishes at its endpoint",
          asymptotics.psi(a1, 1) == 0.0)
    vmax = a1 / np.e
    check("shrinking profile maximum",
          abs(asymptotics.psi(vmax, 1) - 1 * a1 / np.e) < 1e-12)

    return 0 if all(checks) else 1


def _list_models(cmd: CliCommand) -> int:
    for name, schema in models.list_models().items():
        if schema:
            params = ", ".join(f"{k}={v}" for k, v in schema.items())
            print(f"{name}  (params: {params})")
        else:
            print(name)
    return 0


def dispatch(cmd: CliCommand) -> int:
    try:
        if cmd.verb == "run":
            return _run(cmd)
        if cmd.verb == "table":
            return _table(cmd)
        if cmd.verb == "figure":
            _emit(_figure_csv(cmd.d_max), cmd.out)
            return 0
        if cmd.verb == "verify":
            return _verify(cmd)
        if cmd.verb == "list-models":
            return _list_models(cmd)
        raise ValidationError(f"unknown verb {cmd.verb!r}")
    except EmschemesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="emschemes",
        description="SDE path simulation with random-partition schemes",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("run", "table"):
        p = sub.add_parser(verb)
        p.add_argument("-c", "--config", required=True, help="config file path")
        p.add_argument("-k", "--set", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")
        p.add_argument("-o", "--out", default=None, help="output file")
    p = sub.add_parser("figure")
    p.add_argument("-o", "--out", default=None)
    p.add_argument("--d-max", type=int, default=30)
    sub.add_parser("verify")
    sub.add_parser("list-models")
    args = parser.parse_args(argv)
    cmd = CliCommand(
        verb=args.verb,
        config_path=getattr(args, "config", None),
        overrides=tuple(getattr(args, "set", ())),
        out=getattr(args, "out", None),
        d_max=getattr(args, "d_max", 30),
    )
    return dispatch(cmd)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
