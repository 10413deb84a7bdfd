#!/usr/bin/env python3
"""Run the default closed-loop stabilization experiment end to end.

Builds the two-layer pipeline (linearization, eigenbasis, kernel solve,
weighted-energy parameters), integrates the feedback loop, and writes the
trace CSV plus decay and residual reports.  An open-loop comparison run
shows the effect of the feedback.

Usage: python scripts/run_closed_loop.py [outdir] [--preset NAME]
"""

import argparse
import os
import sys

import numpy as np

from bilayerctrl.config import PRESETS
from bilayerctrl.kernels import kernel_residuals
from bilayerctrl.lyapunov import certify_decay
from bilayerctrl.pipeline import build_pipeline, published_labeling, run_closed_loop
from bilayerctrl.sim import write_trace_csv


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("outdir", nargs="?", default="out")
    parser.add_argument("--preset", default="paper-sec4", choices=sorted(PRESETS))
    args = parser.parse_args()
    os.makedirs(args.outdir, exist_ok=True)

    cfg = PRESETS[args.preset]
    print(f"building pipeline ({args.preset}): kernel N={cfg.kernel_n}, "
          f"sim Nx={cfg.nx}, T={cfg.t_final}")
    pipe = build_pipeline(cfg)
    res = kernel_residuals(pipe.kernels, pipe.system, pipe.kernel_grid)
    print(f"kernels: {pipe.kernels.iterations} sweeps, "
          f"interior residual {res.interior_max:.3e}")
    print(f"energy weights: nu={pipe.lyap.nu:.4f}, d={np.round(pipe.lyap.d, 4)}, "
          f"decay rate c={pipe.lyap.c:.3e}")

    trace = run_closed_loop(pipe)
    norm_order, norm_labels, ctrl_order, ctrl_labels = published_labeling(pipe.basis)
    write_trace_csv(trace, os.path.join(args.outdir, "trace.csv"),
                    norm_labels=norm_labels, control_labels=ctrl_labels,
                    norm_order=norm_order, control_order=ctrl_order)
    report = certify_decay(pipe.lyap, trace, pipe.kernels, pipe.system)
    with open(os.path.join(args.outdir, "decay_report.txt"), "w") as fh:
        fh.write(report.to_text())
    print(f"closed loop: |state| {trace.total_norm[0]:.4f} -> "
          f"{trace.total_norm[-1]:.3e}, certificate "
          f"{'passed' if report.passed else 'FAILED'}")

    open_loop = run_closed_loop(pipe, controller_on=False)
    write_trace_csv(open_loop, os.path.join(args.outdir, "trace_open_loop.csv"),
                    norm_labels=norm_labels, control_labels=ctrl_labels,
                    norm_order=norm_order, control_order=ctrl_order)
    print(f"open loop:   |state| {open_loop.total_norm[0]:.4f} -> "
          f"{open_loop.total_norm[-1]:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
