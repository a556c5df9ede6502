"""
Parameter sweeps over the stationary solver.

The run set is the Cartesian product of the sweep axes (in the order they
appear in the config) times the replicate count, replicate varying fastest.
Rows are written in that order whatever the worker scheduling.

Random spin meshes use numpy's PCG64 generator seeded with
``[seed, replicate]``: N points are drawn uniformly on an interval shortened
by (N - 1) * min_gap, sorted, and pushed apart by the gap. Any row can thus
be rebuilt from its recorded seed and replicate alone.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from .. import __version__
from ..channelspace import DetectorConfig
from ..errors import CloudChamberError, ConfigError
from ..stationary import channel_probabilities, solve_scattering, unitarity_defect
from . import config as cfgmod

logger = logging.getLogger(__name__)

AXIS_NAMES = ("k0", "gamma", "beta", "epsilon", "n_spins", "spacing", "seed")

COLUMNS = ("n_spins", "k0", "beta", "gamma", "epsilon", "spacing_or_positions_hash",
           "P_gnd", "P_OS", "P_trk", "entropy", "unitarity_defect", "residual",
           "wall_ms", "status", "seed", "replicate")

ROW_UNITARITY_TOL = 1e-6


@dataclass(frozen=True)
class PositionMode:
    kind: str = "regular"
    interval: tuple = (0.0, 1.0)
    min_gap: float = 0.0

    def __post_init__(self):
        if self.kind not in ("regular", "random-uniform"):
            raise ConfigError(f"unknown position mode {self.kind!r}")
        if self.kind == "random-uniform":
            lo, hi = self.interval
            if not hi > lo or self.min_gap < 0:
                raise ConfigError("random-uniform needs interval [a, b], b > a, min_gap >= 0")


def random_positions(n_spins: int, interval, min_gap: float, seed: int,
                     replicate: int = 0) -> np.ndarray:
    lo, hi = interval
    free = (hi - lo) - (n_spins - 1) * min_gap
    if free <= 0:
        raise ConfigError(
            f"{n_spins} spins with min_gap {min_gap} do not fit in [{lo}, {hi}]"
        )
    rng = np.random.default_rng([int(seed), int(replicate)])
    u = np.sort(rng.uniform(0.0, free, n_spins))
    y = lo + u + min_gap * np.arange(n_spins)
    if n_spins > 1 and not np.all(np.diff(y) > 0):
        # coincident draws; only reachable with min_gap == 0
        raise ConfigError("random draw produced coincident positions; use min_gap > 0")
    return y


@dataclass(frozen=True)
class SweepSpec:
    detector: dict
    k0: float
    axes: tuple = ()
    positions: PositionMode = field(default_factory=PositionMode)
    replicates: int = 1
    seed: int = 0
    method: str = "dense"

    def __post_init__(self):
        for name, _ in self.axes:
            if name not in AXIS_NAMES:
                raise ConfigError(f"unknown sweep axis {name!r}; expected one of {AXIS_NAMES}")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")

    @property
    def n_runs(self) -> int:
        return math.prod(len(v) for _, v in self.axes) * self.replicates

    def runs(self) -> Iterator[dict]:
        names = [name for name, _ in self.axes]
        grids = [vals for _, vals in self.axes]
        for combo in itertools.product(*grids):
            point = dict(zip(names, combo))
            for rep in range(self.replicates):
                yield {**point, "replicate": rep}


def spec_from_config(cfg: dict, seed: Optional[int] = None) -> SweepSpec:
    sec = cfg.get("sweep") or {}
    det_sec = dict(cfg.get("detector") or {})
    if not det_sec:
        raise ConfigError("a sweep needs a [detector] section")
    energy = cfg.get("energy") or {}
    has_k0_axis = "k0" in (sec.get("axes") or {})
    k0 = cfgmod.wavenumber(cfg) if energy or not has_k0_axis else float("nan")
    axes = tuple((name, cfgmod.values(vals, name))
                 for name, vals in (sec.get("axes") or {}).items())
    pos = sec.get("positions") or {}
    mode = PositionMode(
        kind=pos.get("mode", "regular"),
        interval=tuple(cfgmod.number(v, "interval") for v in pos.get("interval", (0.0, 1.0))),
        min_gap=cfgmod.number(pos.get("min_gap", 0.0), "min_gap"),
    )
    return SweepSpec(
        detector=det_sec, k0=k0, axes=axes, positions=mode,
        replicates=int(sec.get("replicates", 1)),
        seed=int(seed if seed is not None else sec.get("seed", 0)),
        method=cfgmod.solver_method(cfg),
    )


def build_detector(spec: SweepSpec, run: dict) -> tuple[DetectorConfig, dict]:
    """Detector for one run, plus the position metadata recorded in the row."""
    over = {key: run[key] for key in ("beta", "gamma", "epsilon") if key in run}
    base = dict(spec.detector)
    if "n_spins" in run:
        base["n_spins"] = int(run["n_spins"])
        base.pop("positions", None)
    if "spacing" in run:
        base["spacing"] = run["spacing"]
        base.pop("positions", None)
    seed = int(run.get("seed", spec.seed))
    meta = {"seed": seed, "replicate": run["replicate"]}
    if spec.positions.kind == "random-uniform":
        n = int(base.get("n_spins", len(base.get("positions", ()))))
        base["positions"] = random_positions(
            n, spec.positions.interval, spec.positions.min_gap, seed, run["replicate"]
        ).tolist()
        base.pop("n_spins", None)
    det = cfgmod.detector_from(base, **over)
    if "positions" in base:
        meta["spacing_or_positions_hash"] = "sha:" + det.fingerprint()
    else:
        meta["spacing_or_positions_hash"] = repr(cfgmod.number(base.get("spacing", 1.0)))
    return det, meta


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt(float(v)) for v in value)
    return str(value)


def _per_spin(values: tuple) -> object:
    return values[0] if len(set(values)) == 1 else list(values)


def solve_row(det: DetectorConfig, k0: float, method: str = "dense",
              timing: bool = False) -> dict:
    """Solve one configuration and collect the per-solve record.

    Solver errors are captured in ``status`` rather than raised.
    """
    row = {
        "n_spins": det.n_spins, "k0": float(k0),
        "beta": _per_spin(det.beta), "gamma": _per_spin(det.gamma),
        "epsilon": _per_spin(det.epsilon),
        "P_gnd": math.nan, "P_OS": math.nan, "P_trk": math.nan, "entropy": math.nan,
        "unitarity_defect": math.nan, "residual": math.nan, "condition": math.nan,
        "P_w": [], "status": "ok",
    }
    start = time.perf_counter()
    try:
        sol = solve_scattering(det, k0, method=method)
        probs = channel_probabilities(sol, tolerance=math.inf)
        defect = unitarity_defect(sol)
        row.update(
            P_gnd=probs.P_gnd, P_OS=probs.P_OS, P_trk=probs.P_trk,
            entropy=probs.spin_entropy, unitarity_defect=defect,
            residual=sol.residual, condition=sol.condition, P_w=probs.P_w.tolist(),
            entropy_kind=probs.entropy_kind,
        )
        if not defect < ROW_UNITARITY_TOL:
            row["status"] = f"failed: unitarity defect {defect:.3e}"
    except CloudChamberError as exc:
        row["status"] = f"failed: {type(exc).__name__}: {exc}"
    row["wall_ms"] = (time.perf_counter() - start) * 1e3 if timing else ""
    return row


def _run_one(args) -> dict:
    spec, run, timing = args
    seed_meta = {"seed": int(run.get("seed", spec.seed)), "replicate": run["replicate"]}
    try:
        det, meta = build_detector(spec, run)
    except CloudChamberError as exc:
        row = {name: "" for name in COLUMNS}
        row.update(seed_meta, status=f"failed: {type(exc).__name__}: {exc}")
        for key in ("k0", "gamma", "beta", "epsilon", "n_spins", "spacing"):
            if key in run:
                row[key] = run[key]
        return row
    k0 = float(run.get("k0", spec.k0))
    row = solve_row(det, k0, spec.method, timing)
    row.update(meta)
    return row


def run_sweep(spec: SweepSpec, jobs: int = 1, timing: bool = False) -> Iterator[dict]:
    """Yield rows in the deterministic run order."""
    tasks = ((spec, run, timing) for run in spec.runs())
    if jobs <= 1:
        yield from map(_run_one, tasks)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map() hands results back in submission order
        yield from pool.map(_run_one, tasks, chunksize=1)


def header_comment() -> str:
    return f"# cloudchamber {__version__} sweep"


def write_rows(rows: Iterable[dict], stream) -> int:
    stream.write(header_comment() + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    count = 0
    for row in rows:
        writer.writerow([_fmt(row.get(name, "")) for name in COLUMNS])
        stream.flush()
        count += 1
    return count


def sweep_to_string(spec: SweepSpec, jobs: int = 1) -> str:
    buf = io.StringIO()
    write_rows(run_sweep(spec, jobs), buf)
    return buf.getvalue()
