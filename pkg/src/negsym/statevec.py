"""Dense statevector simulation.

Amplitudes are stored as a flat complex128 array of length ``2**n``. Qubit 0
is the most significant bit of the basis index, so ``|q0 q1 ... q_{n-1}>``
sits at index ``sum(q_k << (n - 1 - k))``. Gates are applied in place on
reshaped views; the full ``2**n x 2**n`` operator is never built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PAULIS = ("X", "Y", "Z")
MAX_QUBITS = 24


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class Gate1Q:
    matrix: np.ndarray
    name: str = "U"


@dataclass(frozen=True)
class Gate2Q:
    """Two-qubit gate; ``matrix`` is in the ``|q_a q_b>`` basis (q_a major)."""

    matrix: np.ndarray
    name: str = "U2"
    diagonal: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Observable:
    pauli: str
    targets: tuple[int, ...]

    def __post_init__(self):
        if self.pauli not in PAULIS:
            raise ValueError(f"pauli must be one of {PAULIS}, got {self.pauli!r}")
        targets = tuple(int(t) for t in self.targets)
        if not targets:
            raise ValueError("observable needs at least one target")
        if len(set(targets)) != len(targets):
            raise ValueError(f"duplicate targets in {targets}")
        object.__setattr__(self, "targets", targets)


# --- gate library -----------------------------------------------------------

_SQ2 = 1.0 / np.sqrt(2.0)

I = Gate1Q(np.eye(2, dtype=np.complex128), "I")
X = Gate1Q(np.array([[0, 1], [1, 0]], dtype=np.complex128), "X")
Y = Gate1Q(np.array([[0, -1j], [1j, 0]], dtype=np.complex128), "Y")
Z = Gate1Q(np.array([[1, 0], [0, -1]], dtype=np.complex128), "Z")
H = Gate1Q(np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128), "H")
S = Gate1Q(np.diag([1, 1j]).astype(np.complex128), "S")
SDG = Gate1Q(np.diag([1, -1j]).astype(np.complex128), "Sdg")

CNOT = Gate2Q(
    np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    ),
    "CNOT",
)

PAULI_GATES = {"X": X, "Y": Y, "Z": Z}


def rx(theta: float) -> Gate1Q:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return Gate1Q(np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128), f"Rx({theta:g})")


def ry(theta: float) -> Gate1Q:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return Gate1Q(np.array([[c, -s], [s, c]], dtype=np.complex128), f"Ry({theta:g})")


def rz(theta: float) -> Gate1Q:
    return Gate1Q(
        np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]).astype(np.complex128),
        f"Rz({theta:g})",
    )


def xx(theta: float) -> Gate2Q:
    """exp(-i theta/2 X(x)X)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = c * np.eye(4, dtype=np.complex128) - 1j * s * np.kron(X.matrix, X.matrix)
    return Gate2Q(m, f"XX({theta:g})")


def zz(theta: float) -> Gate2Q:
    """exp(-i theta/2 Z(x)Z); diagonal."""
    a, b = np.exp(-0.5j * theta), np.exp(0.5j * theta)
    return Gate2Q(np.diag([a, b, b, a]).astype(np.complex128), f"ZZ({theta:g})", diagonal=True)


def controlled(gate: Gate1Q) -> Gate2Q:
    """Controlled version of a single-qubit gate (control = first qubit)."""
    m = np.eye(4, dtype=np.complex128)
    m[2:, 2:] = gate.matrix
    return Gate2Q(m, f"C{gate.name}")


def kron2(a: Gate1Q, b: Gate1Q) -> Gate2Q:
    """Local product ``a (x) b`` as a two-qubit gate."""
    m = np.kron(a.matrix, b.matrix)
    diag = not np.any(m - np.diag(np.diag(m)))
    return Gate2Q(m, f"{a.name}*{b.name}", diagonal=diag)


# --- state preparation ------------------------------------------------------


def basis_state(n_qubits: int, bits: Sequence[int]) -> StateVector:
    bits = [int(b) for b in bits]
    if len(bits) != n_qubits:
        raise ValueError(f"need {n_qubits} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"bits must be 0/1, got {bits}")
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    index = 0
    for b in bits:
        index = (index << 1) | b
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


# --- kernels ----------------------------------------------------------------


def _check_qubit(state: StateVector, q: int) -> None:
    if not 0 <= q < state.n_qubits:
        raise ValueError(f"qubit {q} out of range for {state.n_qubits}-qubit state")


def apply_1q(state: StateVector, gate: Gate1Q, target: int) -> StateVector:
    """Apply ``gate`` to ``target`` in place and return ``state``."""
    _check_qubit(state, target)
    u = gate.matrix
    psi = state.amplitudes.reshape(2**target, 2, -1)
    a0 = psi[:, 0, :].copy()
    a1 = psi[:, 1, :].copy()
    psi[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    psi[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return state


def _pair_slices(n: int, qa: int, qb: int):
    """Index tuples into the rank-n tensor view for the four (bit_a, bit_b) blocks."""
    out = []
    for i in (0, 1):
        for j in (0, 1):
            idx = [slice(None)] * n
            idx[qa] = i
            idx[qb] = j
            out.append(tuple(idx))
    return out


def apply_2q(state: StateVector, gate: Gate2Q, q_a: int, q_b: int) -> StateVector:
    """Apply a 4x4 gate on ``(q_a, q_b)`` in place and return ``state``."""
    _check_qubit(state, q_a)
    _check_qubit(state, q_b)
    if q_a == q_b:
        raise ValueError(f"two-qubit gate needs distinct qubits, got {q_a} twice")
    n = state.n_qubits
    psi = state.amplitudes.reshape((2,) * n)
    blocks = _pair_slices(n, q_a, q_b)
    u = gate.matrix
    if gate.diagonal:
        for k, idx in enumerate(blocks):
            if u[k, k] != 1:
                psi[idx] *= u[k, k]
        return state
    old = [psi[idx].copy() for idx in blocks]
    for r, idx in enumerate(blocks):
        acc = None
        for c in range(4):
            if u[r, c] == 0:
                continue
            term = u[r, c] * old[c]
            acc = term if acc is None else acc + term
        psi[idx] = 0 if acc is None else acc
    return state


# --- measurement ------------------------------------------------------------


def _rotate_to_z(state: StateVector, pauli: str, targets: Sequence[int]) -> StateVector:
    """Scratch copy rotated so that ``pauli`` on each target reads as Z."""
    if pauli == "Z":
        return state
    work = state.copy()
    for q in targets:
        if pauli == "Y":
            apply_1q(work, SDG, q)
        apply_1q(work, H, q)
    return work


def _z_marginal(probs: np.ndarray, q: int) -> float:
    p = probs.reshape(2**q, 2, -1)
    return float(p[:, 0, :].sum() - p[:, 1, :].sum())


def expectation(state: StateVector, obs: Observable) -> float:
    """Exact single-qubit Pauli expectation."""
    if len(obs.targets) != 1:
        raise ValueError("expectation() takes one target; use expectation_vector()")
    (q,) = obs.targets
    _check_qubit(state, q)
    work = _rotate_to_z(state, obs.pauli, [q])
    return _z_marginal(work.probabilities(), q)


def expectation_vector(state: StateVector, pauli: str, targets: Sequence[int]) -> np.ndarray:
    """Per-target single-qubit expectations of ``pauli``."""
    obs = Observable(pauli, tuple(targets))
    for q in obs.targets:
        _check_qubit(state, q)
    # local rotations on other qubits leave each single-qubit marginal unchanged
    work = _rotate_to_z(state, pauli, obs.targets)
    probs = work.probabilities()
    return np.array([_z_marginal(probs, q) for q in obs.targets])


def sample_shots(state: StateVector, obs: Observable, shots: int, seed: int) -> float:
    """Mean of ``shots`` simulated +-1 outcomes of a single-qubit Pauli measurement."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    exact = expectation(state, obs)
    return sample_from_expectation(exact, shots, np.random.default_rng(seed))


def sample_from_expectation(exact: float, shots: int, rng: np.random.Generator) -> float:
    p_minus = min(max((1.0 - exact) / 2.0, 0.0), 1.0)
    n_minus = rng.binomial(shots, p_minus)
    return (shots - 2 * n_minus) / shots
