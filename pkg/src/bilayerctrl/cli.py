"""Command-line front end.

Verbs: ``kernels`` (solve and export the transformation kernels),
``simulate`` (closed-loop run with trace and decay report), ``verify``
(invariant suite), ``report`` (summarize an existing trace CSV).

Exit codes: 0 success, 1 validation error, 2 solver failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .config import ExperimentConfig, PRESETS, load_config, parse_config, render_config
from .errors import SolverError, ValidationError, VerificationError
from .kernels import export_kernels_csv, kernel_residuals
from .lyapunov import certify_decay, fit_decay_envelope
from .pipeline import build_pipeline, published_labeling, run_closed_loop
from .sim import write_snapshot_csv, write_trace_csv
from .verify import run_verification, verification_text

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_VERIFICATION = 3


def _load(args) -> ExperimentConfig:
    preset = args.preset
    if args.config is None and preset is None:
        preset = "paper-sec4"
    if args.config is not None:
        cfg = load_config(args.config, preset=preset)
    else:
        cfg = parse_config("", preset=preset)
    if getattr(args, "no_control", False):
        cfg = replace(cfg, controller=False)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _ensure_out(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def _residual_text(report) -> str:
    lines = [
        "kernel residual report",
        f"  interior max       : {report.interior_max!r}",
        f"  at (component,x,xi): {report.interior_argmax}",
        f"  diagonal datum     : {report.bc_sylvester_max!r}",
        f"  diagonal zeros     : {report.bc_commutator_imposed_max!r}",
        f"  outflow diagonal   : {report.bc_commutator_free_max!r}",
        f"  bottom edge datum  : {report.bc_bottom_max!r}",
        f"  Delta upper norm   : {report.delta_upper_norm!r}",
    ]
    return "\n".join(lines) + "\n"


def cmd_kernels(args) -> int:
    cfg = _load(args)
    out = _ensure_out(cfg)
    pipe = build_pipeline(cfg, with_lyapunov=False)
    export_kernels_csv(pipe.kernels, os.path.join(out, "kernels.csv"))
    report = kernel_residuals(pipe.kernels, pipe.system, pipe.kernel_grid)
    with open(os.path.join(out, "kernel_residuals.txt"), "w", encoding="utf-8") as fh:
        fh.write(_residual_text(report))
        fh.write(f"  picard iterations  : {pipe.kernels.iterations}\n")
    print(f"kernels: N={cfg.kernel_n}, {pipe.kernels.iterations} iterations, "
          f"interior residual {report.interior_max:.3e}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _ensure_out(cfg)
    pipe = build_pipeline(cfg)
    trace = run_closed_loop(pipe)
    norm_order, norm_labels, ctrl_order, ctrl_labels = published_labeling(pipe.basis)
    write_trace_csv(trace, os.path.join(out, "trace.csv"),
                    norm_labels=norm_labels, control_labels=ctrl_labels,
                    norm_order=norm_order, control_order=ctrl_order)
    with open(os.path.join(out, "effective_config.ini"), "w", encoding="utf-8") as fh:
        fh.write(render_config(cfg))
    report = certify_decay(pipe.lyap, trace, pipe.kernels, pipe.system)
    with open(os.path.join(out, "decay_report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_text())
    if cfg.snapshots > 0:
        ks = np.linspace(0, trace.times.size - 1, cfg.snapshots).astype(int)
        for idx, k in enumerate(ks):
            write_snapshot_csv(trace, int(k), os.path.join(out, f"snapshot_{idx:04d}.csv"))
    ratio = trace.total_norm[-1] / trace.total_norm[0] if trace.total_norm[0] > 0 else 0.0
    print(f"simulate: T={cfg.t_final}, final/initial norm {ratio:.3e}, "
          f"decay certificate {'passed' if report.passed else 'FAILED'}")
    if not report.passed and cfg.controller:
        raise VerificationError("decay certificate failed on the closed-loop run")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    checks = run_verification(cfg, inject_fault=args.inject_fault)
    text = verification_text(checks)
    print(text, end="")
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "verify_report.txt"), "w", encoding="utf-8") as fh:
            fh.write(text)
    if not all(c.ok for c in checks):
        raise VerificationError("invariant suite failed")
    return EXIT_OK


def cmd_report(args) -> int:
    path = args.trace
    if not os.path.exists(path):
        raise ValidationError(f"trace file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1,
                      converters={len(header) - 1: lambda s: float(s) if s else np.nan})
    if data.ndim == 1:
        data = data[None, :]
    cols = {name: data[:, k] for k, name in enumerate(header)}
    t = cols["t"]
    lines = [f"trace: {path}", f"  samples: {t.size}, time span {t[0]:g} .. {t[-1]:g}"]
    total = cols.get("total_norm")
    if total is not None and total[0] > 0:
        lines.append(f"  total norm: initial {total[0]:.6g}, final {total[-1]:.6g} "
                     f"(ratio {total[-1] / total[0]:.3e})")
    for name in header:
        if name.endswith("_norm") and name != "total_norm":
            env = fit_decay_envelope(t, cols[name])
            lines.append(f"  {name}: peak {np.max(cols[name]):.6g}, fitted rate {env.rate:.4g}")
        if name.endswith("_ctrl"):
            series = np.abs(cols[name])
            peak = float(series.max())
            lines.append(f"  {name}: peak |.| {peak:.6g}")
    print("\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bilayerctrl",
        description="backstepping boundary stabilization of the linearized "
                    "two-layer shallow-water model")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config file (ini-style)")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="built-in preset supplying defaults")
        p.add_argument("--out", help="output directory (overrides [output] dir)")

    p = sub.add_parser("kernels", help="solve the transformation kernels, export CSV")
    common(p)
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("simulate", help="closed-loop run, trace CSV and decay report")
    common(p)
    p.add_argument("--no-control", action="store_true", dest="no_control",
                   help="run with the boundary feedback switched off")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the invariant suite")
    common(p)
    p.add_argument("--inject-fault", action="store_true", dest="inject_fault",
                   help="perturb a solved kernel first (the suite must then fail)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="summarize an existing trace CSV")
    p.add_argument("--trace", required=True, help="path to a trace CSV")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
