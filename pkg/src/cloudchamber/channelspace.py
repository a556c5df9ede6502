"""
Channel space of an N-spin detector.

A channel is one joint configuration of the N spins, encoded as an integer
``c`` in ``[0, 2**N)``. Spin ``n`` (1-indexed) is up in channel ``c`` iff bit
``N - n`` of ``c`` is set, so spin 1 is the most significant bit and the
binary string of ``c`` reads spin 1 first. For N = 6, ``c = 53 = 0b110101``
has every spin up except spins 3 and 5.

Units are those of the Hamiltonian with hbar^2 / 2m = 1, so an energy E
corresponds to the wavenumber sqrt(E).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidChannel, InvalidDetector, OverlappingSpins, ThresholdDegeneracy

#: relative width of the forbidden band around a channel threshold
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class ChannelIndex:
    value: int
    n_spins: int

    def __post_init__(self):
        if self.n_spins < 1:
            raise InvalidChannel(f"n_spins must be positive, got {self.n_spins}")
        if not 0 <= self.value < (1 << self.n_spins):
            raise InvalidChannel(
                f"channel {self.value} out of range for {self.n_spins} spins"
            )

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    @property
    def bits(self) -> str:
        """Binary string, spin 1 first."""
        return format(self.value, f"0{self.n_spins}b")

    def is_up(self, spin: int) -> bool:
        """Whether spin ``spin`` (1-indexed) is excited in this channel."""
        return bool(self.value & spin_mask(spin, self.n_spins))

    def spins_up(self) -> list[int]:
        return [n for n in range(1, self.n_spins + 1) if self.is_up(n)]

    def flip(self, spin: int) -> "ChannelIndex":
        return ChannelIndex(self.value ^ spin_mask(spin, self.n_spins), self.n_spins)

    @classmethod
    def from_bits(cls, bits: str) -> "ChannelIndex":
        return cls(int(bits, 2), len(bits))


ChannelLike = Union[ChannelIndex, int]


def spin_mask(spin: int, n_spins: int) -> int:
    """Bit mask of spin ``spin`` (1-indexed) under the spin-1-is-MSB convention."""
    if not 1 <= spin <= n_spins:
        raise InvalidChannel(f"spin {spin} out of range 1..{n_spins}")
    return 1 << (n_spins - spin)


def hamming_weight(c: ChannelLike) -> int:
    """Number of excited spins in channel ``c``."""
    value = int(c)
    if value < 0:
        raise InvalidChannel(f"negative channel index {value}")
    return bin(value).count("1")


def hamming_weights(n_spins: int) -> np.ndarray:
    """Hamming weight of every channel, indexed by channel."""
    c = np.arange(1 << n_spins)
    w = np.zeros_like(c)
    for n in range(n_spins):
        w += (c >> n) & 1
    return w


def coupled_channels(c: ChannelIndex) -> list[tuple[int, ChannelIndex]]:
    """Channels reached from ``c`` by one spin flip, as ``(spin, channel)`` pairs.

    The spin-flip coupling of spin n links c to c XOR mask(n), so the channel
    graph is the N-dimensional hypercube and every channel has exactly N
    neighbours.
    """
    return [(n, c.flip(n)) for n in range(1, c.n_spins + 1)]


def _as_spin_array(value, n_spins: int, name: str) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1:
        raise InvalidDetector(f"{name} must be a scalar or a flat list")
    if arr.size == 1 and n_spins != 1:
        arr = np.full(n_spins, arr[0])
    if arr.size != n_spins:
        raise InvalidDetector(f"{name} has {arr.size} entries, expected {n_spins}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDetector(f"{name} contains non-finite values")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class DetectorConfig:
    """Positions and couplings of N fixed spins.

    ``beta`` is the elastic Dirac strength, ``gamma`` the spin-flip Dirac
    strength and ``epsilon`` the excitation energy of each spin. Scalars are
    broadcast to every spin.
    """

    positions: tuple[float, ...]
    beta: tuple[float, ...]
    gamma: tuple[float, ...]
    epsilon: tuple[float, ...]

    def __init__(self, positions, beta=0.0, gamma=0.0, epsilon=0.0):
        pos = np.atleast_1d(np.asarray(positions, dtype=float))
        if pos.ndim != 1 or pos.size < 1:
            raise InvalidDetector("a detector needs at least one spin")
        n = pos.size
        object.__setattr__(self, "positions", _as_spin_array(pos, n, "positions"))
        object.__setattr__(self, "beta", _as_spin_array(beta, n, "beta"))
        object.__setattr__(self, "gamma", _as_spin_array(gamma, n, "gamma"))
        object.__setattr__(self, "epsilon", _as_spin_array(epsilon, n, "epsilon"))
        if n > 1 and not np.all(np.diff(pos) > 0):
            raise OverlappingSpins(f"positions must be strictly increasing: {pos.tolist()}")
        if any(e < 0 for e in self.epsilon):
            raise InvalidDetector("excitation energies must be non-negative")

    @classmethod
    def regular(cls, n_spins: int, spacing: float, beta=0.0, gamma=0.0,
                epsilon=0.0, offset: float = 0.0) -> "DetectorConfig":
        """Equally spaced mesh with y_n = offset + (n - 1) * spacing."""
        if n_spins < 1:
            raise InvalidDetector(f"n_spins must be positive, got {n_spins}")
        if n_spins > 1 and not spacing > 0:
            raise OverlappingSpins(f"spacing must be positive, got {spacing}")
        return cls(offset + spacing * np.arange(n_spins), beta, gamma, epsilon)

    @property
    def n_spins(self) -> int:
        return len(self.positions)

    @property
    def n_channels(self) -> int:
        return 1 << self.n_spins

    def arrays(self):
        """``(positions, beta, gamma, epsilon)`` as float arrays."""
        return (np.array(self.positions), np.array(self.beta),
                np.array(self.gamma), np.array(self.epsilon))

    def shifted(self, delta: float) -> "DetectorConfig":
        return DetectorConfig(np.array(self.positions) + delta,
                              self.beta, self.gamma, self.epsilon)

    def mirrored(self) -> "DetectorConfig":
        """Image under x -> -x; spin n of the image is spin N + 1 - n here."""
        return DetectorConfig(-np.array(self.positions[::-1]), self.beta[::-1],
                              self.gamma[::-1], self.epsilon[::-1])

    def fingerprint(self) -> str:
        """Short stable hash of the full configuration."""
        text = repr((self.positions, self.beta, self.gamma, self.epsilon))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class ChannelKinematics:
    threshold: float
    wavenumber: complex
    open: bool


def channel_threshold(c: ChannelLike, det: DetectorConfig) -> float:
    """Sum of the excitation energies of the spins that are up in ``c``."""
    if isinstance(c, ChannelIndex) and c.n_spins != det.n_spins:
        raise InvalidChannel(
            f"channel built for {c.n_spins} spins, detector has {det.n_spins}"
        )
    value = int(c)
    if not 0 <= value < det.n_channels:
        raise InvalidChannel(f"channel {value} out of range for {det.n_spins} spins")
    return float(sum(eps for n, eps in enumerate(det.epsilon, start=1)
                     if value & spin_mask(n, det.n_spins)))


def channel_thresholds(det: DetectorConfig) -> np.ndarray:
    """Threshold energy of every channel, indexed by channel."""
    N = det.n_spins
    c = np.arange(1 << N)
    E = np.zeros(c.size)
    for n, eps in enumerate(det.epsilon, start=1):
        E += eps * ((c >> (N - n)) & 1)
    return E


def _check_degeneracy(E, E_c):
    gap = np.abs(np.asarray(E) - np.asarray(E_c))
    bad = gap < DEGENERACY_TOL * np.maximum(np.abs(E), 1.0)
    if np.any(bad):
        E_bad = np.broadcast_to(E_c, np.shape(bad))[bad]
        raise ThresholdDegeneracy(float(E), float(np.ravel(E_bad)[0]))


def channel_wavenumber(E: float, E_c: float) -> ChannelKinematics:
    """Wavenumber of a channel with threshold ``E_c`` at total energy ``E``.

    Open channels get the positive root, closed channels the root with
    positive imaginary part so that outgoing waves decay away from the
    detector.
    """
    if not E > 0:
        raise ValueError(f"energy must be positive, got {E}")
    _check_degeneracy(E, E_c)
    if E > E_c:
        return ChannelKinematics(float(E_c), complex(np.sqrt(E - E_c)), True)
    return ChannelKinematics(float(E_c), 1j * np.sqrt(E_c - E), False)


def channel_wavenumbers(E: float, det: DetectorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`channel_wavenumber` over every channel.

    Returns ``(k, open)`` arrays indexed by channel.
    """
    if not E > 0:
        raise ValueError(f"energy must be positive, got {E}")
    E_c = channel_thresholds(det)
    _check_degeneracy(E, E_c)
    is_open = E > E_c
    k = np.where(is_open, np.sqrt(np.abs(E - E_c)) + 0j, 1j * np.sqrt(np.abs(E - E_c)))
    return k, is_open


def flip_table(n_spins: int) -> np.ndarray:
    """``table[n - 1, c]`` is channel ``c`` with spin ``n`` flipped."""
    c = np.arange(1 << n_spins)
    return np.stack([c ^ spin_mask(n, n_spins) for n in range(1, n_spins + 1)])


def channel_labels(n_spins: int) -> list[str]:
    return [format(c, f"0{n_spins}b") for c in range(1 << n_spins)]


def as_channel(c: ChannelLike, n_spins: int) -> ChannelIndex:
    if isinstance(c, ChannelIndex):
        return c
    return ChannelIndex(int(c), n_spins)
