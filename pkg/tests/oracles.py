"""Brute-force references built from explicit Kronecker products."""

import numpy as np

SQ2 = 1 / np.sqrt(2)
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQ2
PAULI = {"X": X, "Y": Y, "Z": Z}


def unit(i, j):
    e = np.zeros((2, 2), dtype=complex)
    e[i, j] = 1
    return e


def kron_all(mats):
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def full_1q(u, target, n):
    return kron_all([u if q == target else I2 for q in range(n)])


def full_2q(u, qa, qb, n):
    """Embed a 4x4 gate on (qa, qb), qa major, by summing over its matrix units."""
    out = np.zeros((2**n, 2**n), dtype=complex)
    for r in range(4):
        for c in range(4):
            if u[r, c] == 0:
                continue
            ops = [I2] * n
            ops[qa] = unit(r >> 1, c >> 1)
            ops[qb] = unit(r & 1, c & 1)
            out += u[r, c] * kron_all(ops)
    return out


def expm_hermitian(h, t):
    """exp(-i t h) for Hermitian h via its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def basis(bits):
    vec = np.zeros(2 ** len(bits), dtype=complex)
    vec[int("".join(map(str, bits)), 2)] = 1
    return vec


def qnn_unitary(layers, theta):
    """Full circuit matrix: H(readout), parity gates in order, H(readout)."""
    n = theta.shape[1] + 1
    u = full_1q(H, 0, n)
    for kind, row in zip(layers, theta):
        p = PAULI[kind[0]]
        for k, t in enumerate(row, start=1):
            gate = expm_hermitian(np.kron(p, p), t / 2)
            u = full_2q(gate, 0, k, n) @ u
    return full_1q(H, 0, n) @ u


def qnn_readout(layers, theta, bits, pauli="Z"):
    psi = qnn_unitary(layers, theta) @ basis([1, *bits])
    op = full_1q(PAULI[pauli], 0, len(bits) + 1)
    return float(np.real(psi.conj() @ op @ psi))


def qnn_data(layers, theta, bits, pauli="Z"):
    n = len(bits) + 1
    psi = qnn_unitary(layers, theta) @ basis([1, *bits])
    return np.array([np.real(psi.conj() @ full_1q(PAULI[pauli], k, n) @ psi)
                     for k in range(1, n)])


def central_diff(fn, x, h=1e-6):
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g
