"""
Stationary scattering of a plane wave on a one-sided spin detector.

A unit-amplitude wave exp(i k0 x) comes from the left in the ground channel
(all spins down). Between and outside the spins every channel component is a
free plane-wave pair; each spin imposes, in every channel, continuity of the
wave function and a derivative jump

    psi_c'(y+) - psi_c'(y-) = beta * psi_c(y) + gamma * psi_flip(c)(y)

obtained by integrating the Hamiltonian across the Dirac peak. Stacking these
2 N equations per channel gives a square system of dimension 2 N 2^N over the
unknowns R_c, T_c and the interior amplitudes.

Internally each right-moving wave is referenced to the left edge of its
region and each left-moving wave to the right edge, so that evanescent
components of closed channels never exceed unit magnitude inside the matrix.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import entr

from .channelspace import (
    DetectorConfig,
    channel_wavenumber,
    channel_wavenumbers,
    flip_table,
    hamming_weights,
)
from .errors import ClosedChannel, SingularSystem, UnitarityViolation

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
UNITARITY_TOL = 1e-6


# -- single spin, closed form -------------------------------------------------

@dataclass(frozen=True)
class SingleSpinCoefficients:
    """Amplitudes for one spin at the origin.

    ``R0, T0`` live in the ground channel, ``R1, T1`` in the excited one.
    """

    R0: complex
    T0: complex
    R1: complex
    T1: complex
    k0: float
    k1: complex

    @property
    def excited_open(self) -> bool:
        return self.k1.imag == 0

    @property
    def excitation_probability(self) -> float:
        if not self.excited_open:
            return 0.0
        return self.k1.real / self.k0 * (abs(self.R1) ** 2 + abs(self.T1) ** 2)

    @property
    def ground_probability(self) -> float:
        return abs(self.R0) ** 2 + abs(self.T0) ** 2

    @property
    def flux_defect(self) -> float:
        return abs(1.0 - self.ground_probability - self.excitation_probability)

    @property
    def spin_entropy(self) -> float:
        return float(entr(self.excitation_probability) + entr(self.ground_probability))


def solve_single_spin(k0: float, beta: float, gamma: float, eps: float) -> SingleSpinCoefficients:
    k1 = channel_wavenumber(k0 * k0, eps).wavenumber
    D = (beta - 2j * k0) * (beta - 2j * k1) - gamma ** 2
    R1 = 2j * k0 * gamma / D
    R0 = (2j * k1 * beta - beta ** 2 + gamma ** 2) / D
    T0 = -2j * k0 * (beta - 2j * k1) / D
    return SingleSpinCoefficients(complex(R0), complex(T0), complex(R1), complex(R1),
                                  float(k0), complex(k1))


def single_spin_excitation_probability(k0: float, beta: float, gamma: float,
                                       eps: float) -> float:
    """Flux into the excited channel of a single spin, in closed form."""
    if not k0 * k0 > eps:
        raise ClosedChannel(
            f"excited channel is closed at k0^2 = {k0 * k0!r} <= epsilon = {eps!r}"
        )
    k1 = np.sqrt(k0 * k0 - eps)
    num = 8 * k0 * k1 * gamma ** 2
    den = 4 * beta ** 2 * (k0 + k1) ** 2 + (4 * k0 * k1 - beta ** 2 + gamma ** 2) ** 2
    return float(num / den)


def gamma_max(k0: float, beta: float = 0.0, eps: float = 0.0) -> float:
    """Coupling strength that maximises the single-spin excitation probability.

    With g = gamma^2 the probability is proportional to g / (a + (b + g)^2),
    a = 4 beta^2 (k0 + k1)^2, b = 4 k0 k1 - beta^2, whose only stationary
    point on g > 0 is g = sqrt(a + b^2).
    """
    if not k0 * k0 > eps:
        raise ClosedChannel(
            f"excited channel is closed at k0^2 = {k0 * k0!r} <= epsilon = {eps!r}"
        )
    k1 = np.sqrt(k0 * k0 - eps)
    a = 4 * beta ** 2 * (k0 + k1) ** 2
    b = 4 * k0 * k1 - beta ** 2
    return float(np.sqrt(np.sqrt(a + b * b)))


def coupling_for_excitation(k0: float, target: float) -> float:
    """Weak-coupling gamma giving excitation probability ``target`` when
    beta = epsilon = 0."""
    if not 0 <= target <= 0.5:
        raise ValueError(f"single-spin excitation is bounded by 1/2, got {target}")
    if target == 0:
        return 0.0
    # P = 2u / (1 + u)^2 with u = gamma^2 / (4 k0^2)
    u = ((1 - target) - np.sqrt(1 - 2 * target)) / target
    return float(2 * k0 * np.sqrt(u))


# -- N spins, linear system ---------------------------------------------------

@dataclass(frozen=True)
class LinearSystem:
    """Matching conditions at every spin for every channel.

    Unknowns are grouped by channel in blocks of ``2 N``:
    ``[R, A_2, B_2, ..., A_N, B_N, T]``. Rows follow the same grouping, two
    per spin (continuity, then derivative jump).
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    detector: DetectorConfig
    k0: float
    k: np.ndarray
    open: np.ndarray

    @property
    def dimension(self) -> int:
        return self.rhs.size

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _edge_terms(r, side, N, k, widths):
    """Value and derivative coefficients of region ``r`` at one of its edges.

    Returns ``[(column offset, value coef, derivative coef), ...]`` with
    coefficient arrays over channels.
    """
    one = np.ones_like(k)
    if r == 0:
        return [(0, one, -1j * k)]
    if r == N:
        return [(2 * N - 1, one, 1j * k)]
    e = np.exp(1j * k * widths[r - 1])
    a, b = 1 + 2 * (r - 1), 2 + 2 * (r - 1)
    if side == "left":
        return [(a, one, 1j * k), (b, e, -1j * k * e)]
    return [(a, e, 1j * k * e), (b, one, -1j * k)]


def assemble_system(det: DetectorConfig, k0: float) -> LinearSystem:
    if not k0 > 0:
        raise ValueError(f"k0 must be positive, got {k0}")
    N, nc = det.n_spins, det.n_channels
    y, beta, gamma, _ = det.arrays()
    k, is_open = channel_wavenumbers(k0 * k0, det)
    widths = np.diff(y)
    flips = flip_table(N)
    channels = np.arange(nc)
    block = 2 * N

    rows, cols, vals = [], [], []

    def put(row_idx, col_idx, v):
        rows.append(row_idx)
        cols.append(col_idx)
        vals.append(v)

    rhs = np.zeros(nc * block, dtype=complex)
    for n in range(N):
        cont = channels * block + 2 * n
        jump = cont + 1
        left = _edge_terms(n, "right", N, k, widths)
        right = _edge_terms(n + 1, "left", N, k, widths)
        partner = flips[n]
        for off, v, dv in right:
            put(cont, channels * block + off, v)
            put(jump, channels * block + off, dv - beta[n] * v)
        for off, v, dv in left:
            put(cont, channels * block + off, -v)
            put(jump, channels * block + off, -dv)
        for off, v, dv in right:
            # value of the flipped channel just right of the spin
            put(jump, partner * block + off, -gamma[n] * v[partner])
        if n == 0:
            phase = np.exp(1j * k0 * y[0])
            rhs[0] = phase
            rhs[1] = 1j * k0 * phase

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nc * block, nc * block),
    ).tocsr()
    matrix.eliminate_zeros()
    return LinearSystem(matrix, rhs, det, float(k0), k, is_open)


def _solve_dense(system: LinearSystem):
    A = system.dense()
    anorm = np.abs(A).sum(axis=0).max()
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
        except (scipy.linalg.LinAlgWarning, ValueError) as exc:
            raise SingularSystem(f"LU factorisation failed: {exc}") from exc
    rcond, _ = scipy.linalg.lapack.zgecon(lu, anorm, norm="1")
    condition = np.inf if rcond == 0 else 1.0 / rcond
    if rcond < np.finfo(float).eps:
        raise SingularSystem("matching system is numerically singular", condition)
    x = scipy.linalg.lu_solve((lu, piv), system.rhs, check_finite=False)
    return x, float(condition)


def _solve_sparse(system: LinearSystem):
    A = system.matrix.tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystem(f"sparse LU failed: {exc}") from exc
    x = lu.solve(system.rhs)
    n = A.shape[0]
    inv = spla.LinearOperator(
        (n, n), matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="H"), dtype=complex
    )
    condition = float(spla.onenormest(A) * spla.onenormest(inv))
    return x, condition


def solve_system(system: LinearSystem, method: str = "dense"):
    """Solve an assembled system; returns ``(x, relative residual, condition)``."""
    if method == "dense":
        x, condition = _solve_dense(system)
    elif method == "sparse":
        x, condition = _solve_sparse(system)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SingularSystem("solution contains non-finite entries", condition)
    residual = float(np.linalg.norm(system.matrix @ x - system.rhs)
                     / np.linalg.norm(system.rhs))
    if residual > RESIDUAL_TOL:
        raise SingularSystem(f"relative residual {residual:.3e} above {RESIDUAL_TOL:.0e}",
                             condition)
    return x, residual, condition


@dataclass(frozen=True)
class ScatteringSolution:
    """Amplitudes of the stationary state at energy k0^2.

    ``R_edge[c]`` multiplies exp(-i k_c (x - y_1)) left of the detector and
    ``T_edge[c]`` multiplies exp(i k_c (x - y_N)) right of it. ``A[c, i]`` and
    ``B[c, i]`` are the right- and left-moving amplitudes in the region between
    spins i+1 and i+2 (0-based i), both referenced to that region's left edge.
    """

    detector: DetectorConfig
    k0: float
    k: np.ndarray
    open: np.ndarray
    R_edge: np.ndarray
    T_edge: np.ndarray
    A: np.ndarray
    B: np.ndarray
    residual: float
    condition: float
    method: str = "dense"

    @property
    def energy(self) -> float:
        return self.k0 * self.k0

    @property
    def n_spins(self) -> int:
        return self.detector.n_spins

    @property
    def R(self) -> np.ndarray:
        """Reflection amplitudes multiplying exp(-i k_c x)."""
        with np.errstate(over="ignore", invalid="ignore"):
            return self.R_edge * np.exp(1j * self.k * self.detector.positions[0])

    @property
    def T(self) -> np.ndarray:
        """Transmission amplitudes multiplying exp(i k_c x)."""
        with np.errstate(over="ignore", invalid="ignore"):
            return self.T_edge * np.exp(-1j * self.k * self.detector.positions[-1])

    def wavefunction(self, x) -> np.ndarray:
        """Channel components psi_c(x), shape ``(n_channels, len(x))``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.array(self.detector.positions)
        N = y.size
        region = np.searchsorted(y, x, side="right")
        k = self.k[:, None]
        psi = np.zeros((self.k.size, x.size), dtype=complex)
        m = region == 0
        psi[:, m] = self.R_edge[:, None] * np.exp(-1j * k * (x[m] - y[0]))
        psi[0, m] += np.exp(1j * self.k0 * x[m])
        m = region == N
        psi[:, m] = self.T_edge[:, None] * np.exp(1j * k * (x[m] - y[-1]))
        for r in range(1, N):
            m = region == r
            s = x[m] - y[r - 1]
            psi[:, m] = (self.A[:, r - 1, None] * np.exp(1j * k * s)
                         + self.B[:, r - 1, None] * np.exp(-1j * k * s))
        return psi


def solve_scattering(det: DetectorConfig, k0: float, method: str = "dense",
                     system: Optional[LinearSystem] = None) -> ScatteringSolution:
    if system is None:
        system = assemble_system(det, k0)
    x, residual, condition = solve_system(system, method)
    N, nc = det.n_spins, det.n_channels
    blocks = x.reshape(nc, 2 * N)
    interior = blocks[:, 1:-1].reshape(nc, N - 1, 2)
    widths = np.diff(det.positions)
    A = interior[:, :, 0].copy()
    # left-movers are solved for at the right edge; move them to the left edge
    B = interior[:, :, 1] * np.exp(1j * system.k[:, None] * widths[None, :])
    logger.debug("solved N=%d k0=%g residual=%.2e cond=%.2e", N, k0, residual, condition)
    return ScatteringSolution(
        detector=det, k0=float(k0), k=system.k, open=system.open,
        R_edge=blocks[:, 0].copy(), T_edge=blocks[:, -1].copy(), A=A, B=B,
        residual=residual, condition=condition, method=method,
    )


# -- observables ----------------------------------------------------------------

@dataclass(frozen=True)
class ChannelProbabilities:
    p: np.ndarray
    P_w: np.ndarray
    P_gnd: float
    P_OS: float
    P_trk: float
    spin_entropy: float
    entropy_kind: str


def _fluxes(sol: ScatteringSolution) -> np.ndarray:
    weight = np.where(sol.open, sol.k.real / sol.k0, 0.0)
    return weight * (np.abs(sol.R_edge) ** 2 + np.abs(sol.T_edge) ** 2)


def unitarity_defect(sol: ScatteringSolution) -> float:
    return float(abs(1.0 - _fluxes(sol).sum()))


def channel_probabilities(sol: ScatteringSolution,
                          tolerance: float = UNITARITY_TOL) -> ChannelProbabilities:
    defect = unitarity_defect(sol)
    if not defect < tolerance:
        raise UnitarityViolation(defect, tolerance)
    p = _fluxes(sol)
    w = hamming_weights(sol.n_spins)
    P_w = np.bincount(w, weights=p, minlength=sol.n_spins + 1)
    kind = "single-spin" if sol.n_spins == 1 else "shannon-generalized"
    return ChannelProbabilities(
        p=p, P_w=P_w,
        P_gnd=float(P_w[0]), P_OS=float(P_w[1]), P_trk=float(P_w[2:].sum()),
        spin_entropy=float(entr(p).sum()), entropy_kind=kind,
    )
