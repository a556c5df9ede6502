"""
Wave-packet evolution on a finite-difference grid.

The multichannel Hamiltonian is discretised with the three-point Laplacian,
hard walls at both ends of the grid, and each Dirac peak placed on its
nearest grid point with weight 1/dx. Time stepping applies exp(-i H dt) to
the state through a Chebyshev expansion (default) or a Lanczos projection;
both pick their order per step so the truncation error stays below
tolerance, and neither forms the dense exponential.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.special import jv

from .channelspace import (
    DetectorConfig,
    channel_labels,
    channel_thresholds,
    flip_table,
    hamming_weights,
)
from .errors import ConvergenceFailure, SpinCollision, SpinOutsideGrid

logger = logging.getLogger(__name__)

STEP_TOL = 1e-12
MAX_KRYLOV = 80
MAX_CHEBYSHEV = 20000


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3 or not self.x_max > self.x_min:
            raise ValueError(f"degenerate grid {self}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def nearest_index(self, y: float) -> int:
        if not self.x_min < y < self.x_max:
            raise SpinOutsideGrid(f"spin at {y} outside grid ({self.x_min}, {self.x_max})")
        return int(np.rint((y - self.x_min) / self.dx))

    def spin_indices(self, det: DetectorConfig) -> np.ndarray:
        idx = np.array([self.nearest_index(y) for y in det.positions])
        if np.unique(idx).size != idx.size:
            raise SpinCollision(f"two spins share a grid point (indices {idx.tolist()})")
        return idx


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian packet in the ground channel.

    ``mode`` is ``"right"``, ``"left"`` or ``"double"`` (the symmetric sum of
    both). ``width`` is the standard deviation of |psi|^2.
    """

    center: float
    width: float
    wavenumber: float
    mode: str = "double"

    def __post_init__(self):
        if self.mode not in ("right", "left", "double"):
            raise ValueError(f"unknown packet mode {self.mode!r}")
        if not self.width > 0:
            raise ValueError("packet width must be positive")


@dataclass(frozen=True)
class WavePacketState:
    t: float
    psi: np.ndarray
    grid: Grid

    @property
    def n_channels(self) -> int:
        return self.psi.shape[0]

    @property
    def n_spins(self) -> int:
        return self.n_channels.bit_length() - 1

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)

    def position_mean(self) -> float:
        density = np.sum(np.abs(self.psi) ** 2, axis=0)
        return float(np.sum(density * self.grid.x) / np.sum(density))

    def position_width(self) -> float:
        density = np.sum(np.abs(self.psi) ** 2, axis=0)
        density = density / density.sum()
        mean = np.sum(density * self.grid.x)
        return float(np.sqrt(np.sum(density * (self.grid.x - mean) ** 2)))


def initial_state(packet: PacketSpec, grid: Grid, n_spins: int = 0) -> WavePacketState:
    x = grid.x
    envelope = np.exp(-((x - packet.center) ** 2) / (4 * packet.width ** 2))
    k = packet.wavenumber
    if packet.mode == "right":
        carrier = np.exp(1j * k * x)
    elif packet.mode == "left":
        carrier = np.exp(-1j * k * x)
    else:
        carrier = np.exp(1j * k * x) + np.exp(-1j * k * x)
    psi = np.zeros((1 << n_spins, grid.n_points), dtype=complex)
    psi[0] = envelope * carrier
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return WavePacketState(0.0, psi, grid)


def discretize_hamiltonian(det: Optional[DetectorConfig], grid: Grid) -> sp.csr_matrix:
    """Sparse real-symmetric Hamiltonian acting on ``psi.ravel()``.

    ``det=None`` gives the free particle. Channel ``c`` occupies the slice
    ``c * M:(c + 1) * M`` of the flattened state.
    """
    M, dx = grid.n_points, grid.dx
    lap = sp.diags(
        [np.full(M - 1, -1.0), np.full(M, 2.0), np.full(M - 1, -1.0)], [-1, 0, 1]
    ) / dx ** 2
    if det is None:
        return sp.csr_matrix(lap)
    nc = det.n_channels
    idx = grid.spin_indices(det)
    H = sp.kron(sp.identity(nc), lap) + sp.kron(
        sp.diags(channel_thresholds(det)), sp.identity(M)
    )
    rows, cols, vals = [], [], []
    channels = np.arange(nc)
    flips = flip_table(det.n_spins)
    for n, j in enumerate(idx):
        site = channels * M + j
        rows.append(site)
        cols.append(site)
        vals.append(np.full(nc, det.beta[n] / dx))
        rows.append(site)
        cols.append(flips[n] * M + j)
        vals.append(np.full(nc, det.gamma[n] / dx))
    H = H + sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nc * M, nc * M),
    )
    return sp.csr_matrix(H)


def spectral_bounds(H) -> tuple[float, float]:
    """Gershgorin enclosure of the spectrum of a real-symmetric ``H``."""
    d = H.diagonal().real
    radius = np.asarray(abs(H).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min(d - radius)), float(np.max(d + radius))


class ChebyshevStepper:
    """Applies exp(-i H dt) by a Chebyshev expansion.

    The series is cut once the Bessel coefficients J_k(a dt) fall below
    ``tol``, where ``a`` is the half-width of the Gershgorin interval.
    Everything except the vector recursion is precomputed, so one stepper
    should be reused for every step of a run.
    """

    def __init__(self, H, dt: float, tol: float = STEP_TOL,
                 max_order: int = MAX_CHEBYSHEV):
        lo, hi = spectral_bounds(H)
        center = 0.5 * (hi + lo)
        half = 0.5 * (hi - lo) * 1.01 + 1e-12
        x = half * dt
        self.order = _chebyshev_order(x, tol, max_order)
        k = np.arange(self.order + 1)
        self.coef = 2.0 * jv(k, x) * (-1j) ** k
        self.coef[0] *= 0.5
        self.phase = np.exp(-1j * center * dt)
        # spectrum of the scaled operator lies inside [-1, 1]
        eye = sp.identity(H.shape[0], format="csr")
        self.scaled = sp.csr_matrix((H - center * eye) / half, dtype=complex)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        prev, cur = v, self.scaled @ v
        w = self.coef[0] * prev + self.coef[1] * cur
        for c in self.coef[2:]:
            nxt = self.scaled @ cur
            nxt *= 2.0
            nxt -= prev
            prev, cur = cur, nxt
            w += c * cur
        w *= self.phase
        return w


def _chebyshev_order(x: float, tol: float, max_order: int) -> int:
    # J_k(x) decays faster than exponentially once k exceeds x, never before
    if x > max_order:
        raise ConvergenceFailure(
            f"Chebyshev propagator needs order > {int(x)} > {max_order} at this dt; reduce dt"
        )
    k = np.arange(max(int(2 * x) + 64, 16))
    tail = np.abs(jv(k, x)) > 0.1 * tol
    order = int(k[tail][-1]) + 2 if tail.any() else 2
    if order > max_order:
        raise ConvergenceFailure(
            f"Chebyshev propagator needs order {order} > {max_order} at this dt; reduce dt"
        )
    return order


def lanczos_action(H, v: np.ndarray, dt: float, tol: float = STEP_TOL,
                   max_order: int = MAX_KRYLOV):
    """exp(-i H dt) v by Lanczos projection; returns ``(w, order)``.

    Lanczos vectors are reorthogonalised against the whole basis so the
    projected propagator stays unitary to working precision.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return np.zeros_like(v), 0
    Q = np.empty((max_order + 1, v.size), dtype=complex)
    Q[0] = v / beta0
    alpha = np.zeros(max_order)
    beta = np.zeros(max_order)
    err = np.inf
    for j in range(max_order):
        w = H @ Q[j]
        alpha[j] = np.vdot(Q[j], w).real
        basis = Q[: j + 1]
        w -= (basis @ w.conj()).conj() @ basis
        beta[j] = np.linalg.norm(w)
        m = j + 1
        if m == 1:
            lam, U = alpha[:1], np.ones((1, 1))
        else:
            lam, U = eigh_tridiagonal(alpha[:m], beta[: m - 1])
        c = U @ (np.exp(-1j * dt * lam) * U[0])
        err = beta0 * beta[j] * abs(c[-1])
        if err < tol or beta[j] < 1e-14 * beta0:
            return beta0 * (c @ Q[:m]), m
        Q[j + 1] = w / beta[j]
    raise ConvergenceFailure(
        f"Lanczos propagator did not reach {tol:.0e} within order {max_order} "
        f"(estimate {err:.2e}); reduce dt"
    )


def propagate(state: WavePacketState, H, dt: float, steps: int,
              tol: float = STEP_TOL, method: str = "chebyshev") -> WavePacketState:
    """Advance ``state`` by ``steps`` applications of exp(-i H dt)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if method == "chebyshev":
        step = ChebyshevStepper(H, dt, tol)
    elif method == "lanczos":
        Hc = sp.csr_matrix(H, dtype=complex)

        def step(u):
            return lanczos_action(Hc, u, dt, tol)[0]
    else:
        raise ValueError(f"unknown propagation method {method!r}")
    shape = state.psi.shape
    v = state.psi.ravel().copy()
    for _ in range(steps):
        v = step(v)
    return WavePacketState(state.t + steps * dt, v.reshape(shape), state.grid)


def trajectory(state: WavePacketState, H, dt: float, n_samples: int,
               sample_every: int = 1, tol: float = STEP_TOL,
               method: str = "chebyshev") -> Iterator[WavePacketState]:
    """Yield the initial state and ``n_samples`` later snapshots spaced by
    ``sample_every`` steps."""
    yield state
    for _ in range(n_samples):
        state = propagate(state, H, dt, sample_every, tol, method)
        yield state


@dataclass(frozen=True)
class ConfigurationProbabilities:
    t: float
    P_c: np.ndarray
    P_w: np.ndarray

    def by_label(self) -> dict:
        return dict(zip(channel_labels(self.P_w.size - 1), self.P_c))


def configuration_probabilities(state: WavePacketState) -> ConfigurationProbabilities:
    P_c = np.sum(np.abs(state.psi) ** 2, axis=1) * state.grid.dx
    w = hamming_weights(state.n_spins)
    P_w = np.bincount(w, weights=P_c, minlength=state.n_spins + 1)
    return ConfigurationProbabilities(state.t, P_c, P_w)


def energy(state: WavePacketState, H) -> float:
    v = state.psi.ravel()
    return float(np.vdot(v, H @ v).real * state.grid.dx)
