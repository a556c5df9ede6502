"""Reference solutions built independently of the package's matching system."""

import numpy as np


def transfer_matrix_solve(positions, beta, gamma, epsilon, k0):
    """Stationary amplitudes by propagating (psi, psi') across the detector.

    Returns ``(R_edge, T_edge, k)`` in the same local phase convention as the
    package: R multiplies exp(-i k (x - y_1)), T multiplies exp(i k (x - y_N)).
    Only reliable for modest N and spans (transfer matrices amplify evanescent
    components).
    """
    y = np.asarray(positions, float)
    N = y.size
    nc = 2**N
    beta = np.broadcast_to(np.asarray(beta, float), (N,))
    gamma = np.broadcast_to(np.asarray(gamma, float), (N,))
    epsilon = np.broadcast_to(np.asarray(epsilon, float), (N,))
    bits = [[(c >> (N - 1 - n)) & 1 for n in range(N)] for c in range(nc)]
    E_c = np.array([sum(e for e, b in zip(epsilon, bs) if b) for bs in bits])
    k = np.sqrt((k0**2 - E_c).astype(complex))
    k = np.where(k.imag < 0, -k, k)

    I = np.eye(nc)
    Z = np.zeros((nc, nc))

    def kick(n):
        V = beta[n] * I.copy()
        for c in range(nc):
            V[c, c ^ (1 << (N - 1 - n))] += gamma[n]
        return np.block([[I, Z], [V, I]])

    def free(d):
        cos = np.diag(np.cos(k * d))
        sin_k = np.diag(np.where(k == 0, d, np.sin(k * d) / np.where(k == 0, 1, k)))
        ksin = np.diag(-k * np.sin(k * d))
        return np.block([[cos, sin_k], [ksin, cos]])

    M = kick(0)
    for n in range(1, N):
        M = kick(n) @ free(y[n] - y[n - 1]) @ M

    # left state: psi = inc + R, psi' = ik0 inc - ik R ; right: psi = T, psi' = ik T
    inc = np.zeros(2 * nc, complex)
    inc[0] = np.exp(1j * k0 * y[0])
    inc[nc] = 1j * k0 * np.exp(1j * k0 * y[0])
    left_R = np.vstack([I, np.diag(-1j * k)])
    right_T = np.vstack([I, np.diag(1j * k)])
    A = np.hstack([M @ left_R, -right_T])
    sol = np.linalg.solve(A, -M @ inc)
    return sol[:nc], sol[nc:], k
