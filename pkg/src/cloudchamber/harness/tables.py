"""Published reference probabilities for regular spin meshes and their recomputation."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..channelspace import DetectorConfig
from ..errors import CloudChamberError
from ..stationary import channel_probabilities, solve_scattering

DEFAULT_TOL = 1e-3
STRICT_TOL = 5e-5

# k0 = pi, spacing 0.1, epsilon = 0.01, beta = 0.5, gamma = 3
TABLE1_PARAMS = dict(k0=math.pi, epsilon=0.01, beta=0.5, gamma=3.0)
TABLE1 = {
    2: {"P_gnd": 0.60514, "P_OS": 0.28992, "P_trk": 0.10494},
    4: {"P_gnd": 0.41826, "P_OS": 0.36631, "P_trk": 0.21543},
    6: {"P_gnd": 0.24661, "P_OS": 0.39652, "P_trk": 0.35687},
    8: {"P_gnd": 0.15813, "P_OS": 0.37044, "P_trk": 0.47143},
}

# k0 = 400/3, spacing 0.05/N, epsilon = 0.04, beta = 1e-4; values are P_trk
TABLE2_PARAMS = dict(k0=400 / 3, epsilon=0.04, beta=1e-4)
TABLE2_GAMMAS = {"50": 50.0, "100": 100.0, "150": 150.0, "800/3": 800 / 3}
TABLE2 = {
    2: {"50": 0.0074691, "100": 0.063126, "150": 0.14733, "800/3": 0.24907},
    3: {"50": 0.015572, "100": 0.12502, "150": 0.21374, "800/3": 0.2812},
    4: {"50": 0.032093, "100": 0.25924, "150": 0.39707, "800/3": 0.066758},
    6: {"50": 0.07459, "100": 0.40374, "150": 0.51122, "800/3": 0.22914},
    7: {"50": 0.099126, "100": 0.47012, "150": 0.40409, "800/3": 0.37756},
    8: {"50": 0.12356, "100": 0.49174, "150": 0.50721, "800/3": 0.32307},
}


@dataclass(frozen=True)
class Cell:
    table: str
    n_spins: int
    column: str
    quantity: str
    published: float
    computed: float
    error: str = ""

    @property
    def diff(self) -> float:
        return abs(self.computed - self.published)

    def ok(self, tol: float) -> bool:
        return not self.error and self.diff <= tol


def _table1_detector(n: int) -> DetectorConfig:
    p = TABLE1_PARAMS
    return DetectorConfig.regular(n, 0.1, beta=p["beta"], gamma=p["gamma"],
                                  epsilon=p["epsilon"])


def _table2_detector(n: int, gamma: float) -> DetectorConfig:
    p = TABLE2_PARAMS
    return DetectorConfig.regular(n, 0.05 / n, beta=p["beta"], gamma=gamma,
                                  epsilon=p["epsilon"])


def _solve(args):
    det, k0, method = args
    try:
        probs = channel_probabilities(solve_scattering(det, k0, method=method))
        return {"P_gnd": probs.P_gnd, "P_OS": probs.P_OS, "P_trk": probs.P_trk}, ""
    except CloudChamberError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _jobs_for(name: str):
    if name == "table1":
        for n, row in TABLE1.items():
            yield (n, "", row), (_table1_detector(n), TABLE1_PARAMS["k0"])
    elif name == "table2":
        for n, row in TABLE2.items():
            for label, gamma in TABLE2_GAMMAS.items():
                yield (n, label, {"P_trk": row[label]}), (
                    _table2_detector(n, gamma), TABLE2_PARAMS["k0"])
    else:
        raise ValueError(f"unknown table {name!r}")


def reproduce(name: str, method: str = "dense", jobs: int = 1) -> list[Cell]:
    """Recompute every cell of ``table1`` or ``table2``."""
    jobs_list = list(_jobs_for(name))
    args = [(det, k0, method) for _, (det, k0) in jobs_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve, args))
    else:
        results = [_solve(a) for a in args]
    cells = []
    for ((n, column, expected), _), (computed, error) in zip(jobs_list, results):
        for quantity, published in expected.items():
            value = computed[quantity] if computed else math.nan
            cells.append(Cell(name, n, column, quantity, published, value, error))
    return cells


def format_report(cells: list[Cell], tol: float) -> str:
    lines = [f"{'N':>2} {'gamma':>6} {'quantity':>8} {'computed':>12} {'published':>10} "
             f"{'|diff|':>10}  status"]
    for c in cells:
        status = "ok" if c.ok(tol) else ("ERROR " + c.error if c.error else "MISMATCH")
        lines.append(f"{c.n_spins:>2} {c.column or '-':>6} {c.quantity:>8} "
                     f"{c.computed:>12.7f} {c.published:>10.7g} {c.diff:>10.2e}  {status}")
    worst = max((c.diff for c in cells), default=0.0)
    lines.append(f"max |diff| = {worst:.2e} (tolerance {tol:.0e})")
    return "\n".join(lines)
