"""Command-line front end.

    cascade-sim write  [--config FILE] [--out DIR] [--param KEY=VALUE ...]
    cascade-sim read   ...
    cascade-sim memory ...
    cascade-sim sweep  ... [--threads N]

Exit codes: 0 success, 1 config error, 2 integration/runtime error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .dynamics import simulate
from .experiments import default_workers, point_params, run_sweep
from .integrator import IntegrationError
from .metrics import efficiency, process_fidelity
from .model import ProtocolKind, Trajectory, ValidationError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

TRACE_HEADER = ("t,re_a1,im_a1,re_b,im_b,re_a2,im_a2,n1,nb,n2,"
                "kappa1,kappa2,g,leaked_cum")
SWEEP_HEADER = "param,eta"
ETA_NAME = {ProtocolKind.WRITE: "eta_w", ProtocolKind.READ: "eta_r",
            ProtocolKind.MEMORY: "eta_mem"}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trace_csv(traj: Trajectory) -> str:
    cols = [traj.t, traj.alpha1.real, traj.alpha1.imag, traj.beta.real, traj.beta.imag,
            traj.alpha2.real, traj.alpha2.imag, traj.n1, traj.nb, traj.n2,
            traj.kappa1, traj.kappa2, traj.g, traj.leaked_cum]
    lines = [TRACE_HEADER]
    lines += [",".join(_fmt(c[i]) for c in cols) for i in range(len(traj))]
    return "\n".join(lines) + "\n"


def sweep_csv(values: np.ndarray, etas: np.ndarray) -> str:
    lines = [SWEEP_HEADER] + [f"{_fmt(v)},{_fmt(e)}" for v, e in zip(values, etas)]
    return "\n".join(lines) + "\n"


def summary_text(cfg: RunConfig, traj: Trajectory, sweep=None) -> str:
    rep = efficiency(traj)
    p = traj.params
    kind = traj.protocol
    lines = [f"protocol = {kind.value}",
             f"{ETA_NAME[kind]} = {rep.eta:.6f}",
             f"eta = {rep.eta:.17g}",
             f"process_fidelity = {process_fidelity(min(max(rep.eta, 0.0), 1.0)):.6f}",
             f"n1_final = {rep.n1:.17g}",
             f"nb_final = {rep.nb:.17g}",
             f"n2_final = {rep.n2:.17g}",
             f"leaked_total = {rep.leaked:.17g}"]
    label = "energy_balance_residual" if p.lossless else "energy_balance_residual_lossy"
    lines.append(f"{label} = {traj.energy_balance_residual():.3e}")
    lines += [f"t_final = {p.t_final:.17g}", f"t_mid = {p.t_mid:.17g}",
              f"gamma = {p.gamma:.17g}", f"q_factor = {p.q_factor:.17g}"]
    if kind is not ProtocolKind.MEMORY:
        lines.append(f"coupling = {p.coupling:.17g}")
    if traj.pulse is not None:
        u = traj.pulse
        lines += [f"g0 = {u.g0:.17g}", f"sigma = {u.sigma:.17g}",
                  f"t1 = {u.t1:.17g}", f"t2 = {u.t2:.17g}",
                  f"t_storage_pulses = {u.t_storage:.17g}",
                  f"t_storage_5tm = {5 * p.t_mid:.17g}"]
    lines += [f"rel_tol = {traj.integrator['rel_tol']:.3g}",
              f"abs_tol = {traj.integrator['abs_tol']:.3g}"]
    if sweep is not None:
        x, e = sweep.argmax
        lines += [f"sweep_parameter = {sweep.parameter}",
                  f"sweep_points = {len(sweep.values)}",
                  f"sweep_argmax = {x:.17g}",
                  f"sweep_max_eta = {e:.17g}"]
    return "\n".join(lines) + "\n"


def write_atomic(out_dir: Path, files: dict[str, str]) -> None:
    """Write every file to a temp name, then rename them all into place.

    On failure nothing new is left in ``out_dir``.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    temps: list[tuple[str, Path]] = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=out_dir)
            temps.append((name, Path(tmp)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for name, tmp in temps:
            os.replace(tmp, out_dir / name)
    finally:
        for _, tmp in temps:
            if tmp.exists():
                tmp.unlink()


def run(cfg: RunConfig, threads: int | None = None) -> dict[str, str]:
    """Execute a configured run and return the artifacts (name -> text)."""
    if cfg.sweep is not None:
        result = run_sweep(cfg.sweep, threads)
        x, _ = result.argmax
        p, pulse = point_params(cfg.sweep, x)
        traj = simulate(cfg.protocol, p, pulse, cfg.integrator)
        return {"trace.csv": trace_csv(traj),
                "sweep.csv": sweep_csv(result.values, result.etas),
                "summary.txt": summary_text(cfg, traj, result)}
    traj = simulate(cfg.protocol, cfg.params, cfg.pulse, cfg.integrator)
    return {"trace.csv": trace_csv(traj), "summary.txt": summary_text(cfg, traj)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade-sim",
        description="Optomechanical state transfer and quantum memory simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("write", "cavity 1 -> remote mechanical mode"),
                        ("read", "mechanical mode -> remote cavity 1"),
                        ("memory", "write, store and retrieve with pulsed coupling"),
                        ("sweep", "efficiency over a parameter grid")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=Path, help="run configuration file")
        sp.add_argument("--out", type=Path, help="output directory (default: [output] dir or ./out)")
        sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value; KEY or SECTION.KEY")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker processes for sweeps (env CASCADE_SIM_THREADS)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    protocol = None if args.command == "sweep" else args.command
    try:
        cfg = load_config(args.config, protocol, args.param, args.out)
        if args.command == "sweep" and cfg.sweep is None:
            raise ConfigError(["sweep needs a [sweep] section (parameter, min, max, points)"])
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    threads = args.threads if args.threads is not None else default_workers()
    try:
        files = run(cfg, threads)
    except (IntegrationError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        write_atomic(cfg.out_dir, files)
    except OSError as exc:
        print(f"cannot write output to {cfg.out_dir}: {exc}", file=sys.stderr)
        return EXIT_IO
    eta_line = next(l for l in files["summary.txt"].splitlines() if l.startswith("eta_"))
    print(f"{eta_line}  ->  {cfg.out_dir}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
