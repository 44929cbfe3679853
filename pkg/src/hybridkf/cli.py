"""Command-line benchmark driver.

Subcommands:
  run      execute a scenario described by a flat key=value config file
  table2   tracking Case 1 sampling-period sweep (ARMSE_p and CPU table)
  illcond  ill-conditioning sweep (tracking or cstr Case 2)
  stiff    Van der Pol stiffness sweep
  selftest quick property/oracle checks

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import EstimationError, InvalidInput
from .harness import (
    RunRecord,
    emit_csv,
    load_config,
    preset_illcond,
    preset_stiff,
    preset_table2,
    run_scenario,
    with_monte_carlo,
)


def _print_table(records: list[RunRecord], sweep_field: str) -> None:
    filters = []
    for r in records:
        if r.filter_name not in filters:
            filters.append(r.filter_name)
    points = []
    for r in records:
        key = getattr(r, sweep_field)
        if key not in points:
            points.append(key)
    col = max(len(f) for f in filters) + 2
    header = f"{sweep_field:>12} | " + " | ".join(f"{f:>{col}}" for f in filters)
    print(header)
    print("-" * len(header))
    by_key = {(getattr(r, sweep_field), r.filter_name): r for r in records}
    for p in points:
        cells = []
        for f in filters:
            r = by_key.get((p, f))
            if r is None:
                cells.append(f"{'--':>{col}}")
            elif r.failed:
                cells.append(f"{'fails':>{col}}")
            else:
                cells.append(f"{r.armse:>{col}.1f}")
        print(f"{p:>12.6g} | " + " | ".join(cells))
    print()
    print("average CPU per run (ms):")
    for p in points:
        cells = []
        for f in filters:
            r = by_key.get((p, f))
            cells.append(f"{r.cpu_ms:>{col}.1f}" if r else f"{'--':>{col}}")
        print(f"{p:>12.6g} | " + " | ".join(cells))


def _run_and_report(cfg, args) -> int:
    if args.mc is not None:
        cfg = with_monte_carlo(cfg, args.mc)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    records = run_scenario(cfg, threads=args.threads)
    sweep_field = "delta"
    if cfg.example == "vdp":
        sweep_field = "lam"
    elif cfg.ill_deltas:
        sweep_field = "delta_ill"
    _print_table(records, sweep_field)
    if args.out:
        emit_csv(records, args.out)
        print(f"wrote {args.out}")
    return 0


def _selftest() -> int:
    import numpy as np

    from .cubature import build_cubature, measurement_update
    from .belief import GaussianBelief, Representation
    from .linalg import spectral_from_dense, svd_post_arrays
    from .models import make_coordinated_turn
    from .nirk import integrate_interval

    ok = True

    def check(name: str, passed: bool) -> None:
        nonlocal ok
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        pre = rng.standard_normal((4, 9))
        w, s = svd_post_arrays(pre)
        gram = pre @ pre.T
        worst = max(worst, np.max(np.abs((w * s**2) @ w.T - gram)) / np.linalg.norm(gram))
    check("pre-array Gram reconstruction <= 1e-12", worst <= 1e-12)

    res = integrate_interval(
        lambda t, x: x, lambda t, x: np.eye(1), 0.0, 1.0, np.array([1.0]), 1e-6
    )
    check(
        "exp(1) integration within tolerance",
        abs(res.x_end[0] - np.e) <= 1e-6 * (np.e + 1),
    )

    model = make_coordinated_turn()
    x = model.initial_mean
    fd = np.zeros((7, 7))
    for i in range(7):
        h = 1e-6 * (1 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fd[:, i] = (model.drift(0, xp) - model.drift(0, xm)) / (2 * h)
    check(
        "tracking Jacobian matches finite differences",
        np.max(np.abs(fd - model.jacobian(0, x))) <= 1e-5 * (1 + np.max(np.abs(fd))),
    )

    # affine measurement: cubature equals the exact Kalman update
    h_mat = rng.standard_normal((3, 7))
    p0 = np.eye(7)
    belief = GaussianBelief.from_dense(x, p0)
    lin_model = model.__class__(
        name="lin",
        state_dim=7,
        noise_dim=7,
        meas_dim=3,
        drift=model.drift,
        jacobian=model.jacobian,
        diffusion=model.diffusion,
        process_cov=model.process_cov,
        measurement=lambda k, s: h_mat @ s,
        meas_cov=np.eye(3),
        initial_mean=x,
        initial_cov=p0,
        angle_mask=np.zeros(3, dtype=bool),
    )
    z = h_mat @ x + rng.standard_normal(3)
    upd = measurement_update(belief, z, lin_model, 1, Representation.SPECTRAL)
    gain = p0 @ h_mat.T @ np.linalg.inv(h_mat @ p0 @ h_mat.T + np.eye(3))
    x_ref = x + gain @ (z - h_mat @ x)
    check(
        "cubature update matches Kalman on affine map",
        np.max(np.abs(upd.mean - x_ref)) <= 1e-10 * (1 + np.max(np.abs(x_ref))),
    )

    ws = build_cubature(belief, lin_model, 1)
    r_f = spectral_from_dense(np.eye(3))
    b_pre = np.hstack([ws.centered_z, r_f.square_root()])
    check(
        "residual pre-array Gram identity",
        np.max(
            np.abs(b_pre @ b_pre.T - (ws.centered_z @ ws.centered_z.T + np.eye(3)))
        )
        <= 1e-12 * np.linalg.norm(b_pre @ b_pre.T),
    )
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridkf", description="continuous-discrete filtering benchmarks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write results CSV to this path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--mc", type=int, default=None, help="Monte Carlo size override")

    p_run = sub.add_parser("run", help="run a scenario from a config file")
    p_run.add_argument("--config", required=True)
    common(p_run)

    p_t2 = sub.add_parser("table2", help="tracking sampling-period sweep")
    common(p_t2)

    p_ill = sub.add_parser("illcond", help="ill-conditioning sweep")
    p_ill.add_argument("--example", choices=("tracking", "cstr"), default="tracking")
    p_ill.add_argument("--delta-min", type=float, default=1e-13)
    common(p_ill)

    p_stiff = sub.add_parser("stiff", help="Van der Pol stiffness sweep")
    common(p_stiff)

    sub.add_parser("selftest", help="quick property/oracle checks")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if args.command == "selftest":
            return _selftest()
        if args.command == "run":
            cfg = load_config(args.config)
        elif args.command == "table2":
            cfg = preset_table2()
        elif args.command == "illcond":
            cfg = preset_illcond(example=args.example, delta_min=args.delta_min)
        else:
            cfg = preset_stiff()
        return _run_and_report(cfg, args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (EstimationError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
