import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import expm

from cloudchamber.channelspace import DetectorConfig
from cloudchamber.errors import ConvergenceFailure, SpinCollision, SpinOutsideGrid
from cloudchamber.stationary import single_spin_excitation_probability
from cloudchamber.timedep import (
    ChebyshevStepper,
    Grid,
    PacketSpec,
    WavePacketState,
    configuration_probabilities,
    discretize_hamiltonian,
    energy,
    initial_state,
    lanczos_action,
    propagate,
    spectral_bounds,
    trajectory,
)


def test_grid_basics():
    g = Grid(-1.0, 1.0, 201)
    assert g.dx == pytest.approx(0.01)
    assert g.nearest_index(0.0) == 100
    with pytest.raises(SpinOutsideGrid):
        g.nearest_index(1.0)
    with pytest.raises(SpinCollision):
        g.spin_indices(DetectorConfig([0.0, 0.004]))
    with pytest.raises(ValueError):
        Grid(1.0, 0.0, 10)


def test_hamiltonian_structure():
    det = DetectorConfig([-0.5, 0.5], beta=[0.3, -0.2], gamma=[1.0, 2.0], epsilon=[0.1, 0.4])
    grid = Grid(-2, 2, 81)
    H = discretize_hamiltonian(det, grid)
    M = grid.n_points
    assert H.shape == (4 * M, 4 * M)
    assert abs(H - H.T).max() == 0
    # thresholds on the diagonal away from the spins
    d = H.diagonal().reshape(4, M)
    np.testing.assert_allclose(d[:, 3] - d[0, 3], [0, 0.4, 0.1, 0.5])
    j = grid.nearest_index(-0.5)
    # spin 1 couples channel 00 to 10 at its site
    assert H[0 * M + j, 2 * M + j] == pytest.approx(1.0 / grid.dx)
    assert H[0 * M + j, 1 * M + j] == 0
    lo, hi = spectral_bounds(H)
    ev = np.linalg.eigvalsh(H.toarray())
    assert lo <= ev[0] and ev[-1] <= hi


def test_hamiltonian_hermitian_on_random_vectors(rng):
    det = DetectorConfig([-0.3, 0.2, 0.9], beta=[0.3, -1.0, 2.0], gamma=[1.0, -2.0, 0.5],
                         epsilon=[0.1, 0.4, 0.0])
    H = discretize_hamiltonian(det, Grid(-2, 2, 101))
    u, v = _random_vector(rng, H.shape[0]), _random_vector(rng, H.shape[0])
    assert abs(np.vdot(u, H @ v) - np.vdot(H @ u, v)) < 1e-12 * abs(H).max()


def _random_vector(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def test_steppers_match_dense_exponential(rng):
    det = DetectorConfig([0.0], beta=0.4, gamma=1.3, epsilon=0.2)
    grid = Grid(-3, 3, 61)
    H = discretize_hamiltonian(det, grid)
    v = _random_vector(rng, H.shape[0])
    dt = 0.01
    exact = expm(-1j * dt * H.toarray()) @ v
    cheb = ChebyshevStepper(H, dt)(v)
    lan, order = lanczos_action(sp.csr_matrix(H, dtype=complex), v, dt)
    np.testing.assert_allclose(cheb, exact, atol=1e-11)
    np.testing.assert_allclose(lan, exact, atol=1e-11)
    assert 1 < order < 80


def test_zero_hamiltonian_is_identity(rng):
    H = sp.csr_matrix((40, 40))
    v = _random_vector(rng, 40)
    np.testing.assert_allclose(ChebyshevStepper(H, 0.5)(v), v, atol=1e-14)
    np.testing.assert_allclose(lanczos_action(H, v, 0.5)[0], v, atol=1e-14)


def test_convergence_failure():
    H = discretize_hamiltonian(None, Grid(-1, 1, 2001))
    with pytest.raises(ConvergenceFailure):
        ChebyshevStepper(H, 10.0, max_order=100)
    v = np.zeros(H.shape[0], complex)
    v[1000] = 1
    with pytest.raises(ConvergenceFailure):
        lanczos_action(sp.csr_matrix(H, dtype=complex), v, 10.0, max_order=10)


def test_unknown_method():
    state = initial_state(PacketSpec(0, 1, 1), Grid(-5, 5, 101))
    H = discretize_hamiltonian(None, state.grid)
    with pytest.raises(ValueError):
        propagate(state, H, 0.1, 1, method="euler")
    with pytest.raises(ValueError):
        propagate(state, H, 0.0, 1)


def test_free_gaussian_spreading():
    sigma, k = 1.0, 1.0
    grid = Grid(-30, 30, 3001)
    state = initial_state(PacketSpec(-5.0, sigma, k, mode="right"), grid)
    H = discretize_hamiltonian(None, grid)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
    assert energy(state, H) == pytest.approx(k**2 + 1 / (4 * sigma**2), rel=1e-3)
    t = 3.0
    final = propagate(state, H, 0.05, 60)
    assert final.t == pytest.approx(t)
    assert final.norm() == pytest.approx(1.0, abs=1e-10)
    # dispersion k^2 gives group velocity 2k and sigma(t) = sigma sqrt(1 + (t / sigma^2)^2)
    assert final.position_mean() == pytest.approx(-5.0 + 2 * k * t, abs=1e-3)
    assert final.position_width() == pytest.approx(sigma * np.sqrt(1 + (t / sigma**2) ** 2), rel=1e-2)


def test_chebyshev_and_lanczos_agree():
    det = DetectorConfig([-1.0, 1.0], beta=0.2, gamma=2.0, epsilon=0.3)
    grid = Grid(-10, 10, 401)
    H = discretize_hamiltonian(det, grid)
    state = initial_state(PacketSpec(0.0, 1.0, 2.0), grid, 2)
    a = propagate(state, H, 0.05, 10, method="chebyshev")
    b = propagate(state, H, 0.05, 10, method="lanczos")
    np.testing.assert_allclose(a.psi, b.psi, atol=1e-9)


def test_mirror_symmetric_detector_gives_equal_single_flips():
    det = DetectorConfig([-3.0, 3.0], beta=0.1, gamma=3.0, epsilon=0.5)
    grid = Grid(-20, 20, 1601)
    H = discretize_hamiltonian(det, grid)
    state = initial_state(PacketSpec(0.0, 0.7, 4.0), grid, 2)
    for st in trajectory(state, H, 0.05, 4, sample_every=5):
        probs = configuration_probabilities(st).by_label()
        assert probs["01"] == pytest.approx(probs["10"], abs=1e-12)
        assert sum(probs.values()) == pytest.approx(1.0, abs=1e-10)


def test_one_sided_packet_matches_half_of_double():
    """Before anything reflects back, the halves of a double packet evolve
    independently: the right-moving half alone reproduces the flip it causes."""
    det = DetectorConfig([-9.0, 9.0], beta=0.0, gamma=6.0, epsilon=0.2)
    grid = Grid(-30, 30, 2401)
    H = discretize_hamiltonian(det, grid)
    H1 = discretize_hamiltonian(DetectorConfig([9.0], beta=0.0, gamma=6.0, epsilon=0.2), grid)
    double = initial_state(PacketSpec(0.0, 1.0, 6.0), grid, 2)
    right = initial_state(PacketSpec(0.0, 1.0, 6.0, mode="right"), grid, 1)
    # the halves overlap neither each other nor the far spin (in position or
    # momentum) beyond ~exp(-20), so the double run carries exactly half
    a = configuration_probabilities(propagate(double, H, 0.02, 60)).by_label()
    b = configuration_probabilities(propagate(right, H1, 0.02, 60)).by_label()
    assert b["1"] > 0.05
    assert a["01"] == pytest.approx(0.5 * b["1"], abs=1e-6)
    assert a["10"] == pytest.approx(a["01"], abs=1e-12)


def test_excitation_converges_with_grid():
    """A packet crossing one spin ends up excited with roughly the stationary
    probability; the mismatch shrinks as the grid is refined."""
    k0, beta, gamma, eps = 2.0, 0.5, 1.5, 0.6
    target = single_spin_excitation_probability(k0, beta, gamma, eps)
    det = DetectorConfig([0.0], beta, gamma, eps)
    errors = []
    for dx, sigma in ((0.08, 3.0), (0.04, 6.0)):
        x0 = -(4 * sigma + 2)
        t_end = (abs(x0) + 4.5 * sigma) / (2 * k0)
        half = max(abs(x0) + 5 * sigma, 2 * k0 * t_end - abs(x0) + 5 * sigma) + 2
        n = int(round(2 * half / dx)) + 1
        grid = Grid(-half, half, n)
        H = discretize_hamiltonian(det, grid)
        state = initial_state(PacketSpec(x0, sigma, k0, mode="right"), grid, 1)
        steps = int(np.ceil(t_end / 0.25))
        final = propagate(state, H, t_end / steps, steps)
        errors.append(abs(configuration_probabilities(final).P_c[1] - target) / target)
    assert errors[1] < errors[0]
    assert errors[1] < 0.01


def test_state_helpers():
    grid = Grid(-1, 1, 5)
    psi = np.zeros((2, 5), complex)
    psi[1, 2] = 1 / np.sqrt(grid.dx)
    st = WavePacketState(0.0, psi, grid)
    assert st.n_spins == 1
    assert st.norm() == pytest.approx(1.0)
    probs = configuration_probabilities(st)
    np.testing.assert_allclose(probs.P_w, [0, 1])
    assert st.position_mean() == pytest.approx(0.0)
    with pytest.raises(ValueError):
        PacketSpec(0, 1, 1, mode="up")
    with pytest.raises(ValueError):
        PacketSpec(0, 0, 1)
