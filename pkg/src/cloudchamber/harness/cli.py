"""Command-line front end: ``cloudchamber <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import CloudChamberError, ConfigError
from ..stationary import (
    channel_probabilities,
    gamma_max,
    solve_scattering,
    solve_single_spin,
    unitarity_defect,
)
from . import config as cfgmod
from . import sweep as sweepmod
from . import tables
from .timeseries import write_series

EXIT_OK = 0
EXIT_MISMATCH = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4

log = logging.getLogger("cloudchamber")


def _cplx(z: complex) -> str:
    return f"{z.real:+.10f} {z.imag:+.10f}i"


def cmd_single_spin(args) -> int:
    coeffs = solve_single_spin(args.k0, args.beta, args.gamma, args.epsilon)
    print(f"k0 = {args.k0!r}  k1 = {_cplx(coeffs.k1)}")
    for name in ("R0", "T0", "R1", "T1"):
        print(f"{name} = {_cplx(getattr(coeffs, name))}")
    print(f"P_exc = {coeffs.excitation_probability:.12f}")
    print(f"P_gnd = {coeffs.ground_probability:.12f}")
    print(f"S = {coeffs.spin_entropy:.12f}")
    if coeffs.excited_open:
        print(f"gamma_max = {gamma_max(args.k0, args.beta, args.epsilon):.12f}")
    else:
        print("gamma_max = n/a (excited channel closed)")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = cfgmod.load(args.config)
    det = cfgmod.detector(cfg)
    k0 = args.k0 if args.k0 is not None else cfgmod.wavenumber(cfg)
    sol = solve_scattering(det, k0, method=cfgmod.solver_method(cfg))
    probs = channel_probabilities(sol)
    print(f"E = {sol.energy!r}")
    print(f"k0 = {k0!r}")
    print(f"detector = {det.fingerprint()} ({det.n_spins} spins)")
    print("P_w = " + " ".join(f"{p:.10f}" for p in probs.P_w))
    print(f"P_gnd = {probs.P_gnd:.10f}")
    print(f"P_OS = {probs.P_OS:.10f}")
    print(f"P_trk = {probs.P_trk:.10f}")
    print(f"entropy = {probs.spin_entropy:.10f} ({probs.entropy_kind})")
    print(f"unitarity_defect = {unitarity_defect(sol):.3e}")
    print(f"residual = {sol.residual:.3e}")
    print(f"condition = {sol.condition:.3e}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("channel,bits,weight,p\n")
            for c, p in enumerate(probs.p):
                bits = format(c, f"0{det.n_spins}b")
                fh.write(f"{c},{bits},{bits.count('1')},{float(p)!r}\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = cfgmod.load(args.config)
    spec = sweepmod.spec_from_config(cfg, seed=args.seed)
    log.info("sweep: %d runs", spec.n_runs)
    rows = sweepmod.run_sweep(spec, jobs=args.jobs, timing=args.timing)
    failed = 0

    def counted(it):
        nonlocal failed
        for row in it:
            failed += row["status"] != "ok"
            yield row

    if args.out:
        with open(args.out, "w", newline="") as fh:
            n = sweepmod.write_rows(counted(rows), fh)
    else:
        n = sweepmod.write_rows(counted(rows), sys.stdout)
    log.info("sweep: wrote %d rows, %d failed", n, failed)
    return EXIT_OK


def cmd_propagate(args) -> int:
    cfg = cfgmod.load(args.config)
    records = write_series(cfg, Path(args.out) if args.out else None)
    last = records[-1]
    print(f"t = {last['t']:.6g}  norm = {last['norm']:.12f}  energy = {last['energy']:.10g}")
    for key, value in last.items():
        if key.startswith("P_w"):
            print(f"{key} = {value:.10f}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    tol = tables.STRICT_TOL if args.strict else tables.DEFAULT_TOL
    cells = tables.reproduce(args.table, method=args.method, jobs=args.jobs)
    print(tables.format_report(cells, tol))
    if any(c.error for c in cells):
        return EXIT_SOLVER
    return EXIT_OK if all(c.ok(tol) for c in cells) else EXIT_MISMATCH


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cloudchamber",
        description="One-dimensional cloud-chamber model: spins 1/2 probed by a "
                    "scattered particle.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("single-spin", help="closed-form single-spin amplitudes")
    p.add_argument("--k0", type=cfgmod.number, required=True)
    p.add_argument("--beta", type=cfgmod.number, default=0.0)
    p.add_argument("--gamma", type=cfgmod.number, required=True)
    p.add_argument("--epsilon", type=cfgmod.number, default=0.0)
    p.set_defaults(func=cmd_single_spin)

    p = sub.add_parser("solve", help="stationary N-spin solve from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--k0", type=cfgmod.number)
    p.add_argument("--out", help="per-channel probabilities as CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="parameter sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--timing", action="store_true",
                   help="fill wall_ms (output is then no longer byte-reproducible)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("propagate", help="wave-packet evolution to a time series")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("reproduce", help="recompute the published tables")
    p.add_argument("table", choices=("table1", "table2"))
    p.add_argument("--strict", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--method", choices=("dense", "sparse"), default="dense")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CloudChamberError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
