"""Readout-coupled QNN built from XX / ZZ parity layers.

Qubit 0 is the readout, prepared in |1>; qubits 1..N hold the binary pattern.
The circuit is H(readout), then every layer couples the readout to each data
qubit in ascending order with that layer's parity gate, then H(readout).
Layers are applied in the order they are listed in the architecture string.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevec as sv
from .statevec import PAULIS, Observable, StateVector

LAYER_KINDS = ("XX", "ZZ")
# how each layer is realised; "parity" is the model proper, the others are controls
GATE_MODES = ("parity", "local", "controlled")


@dataclass(frozen=True)
class ArchitectureSpec:
    layers: tuple[str, ...]
    n_data: int

    def __post_init__(self):
        layers = tuple(str(k).upper() for k in self.layers)
        if not layers:
            raise ValueError("architecture needs at least one layer")
        bad = [k for k in layers if k not in LAYER_KINDS]
        if bad:
            raise ValueError(f"unknown layer kind(s) {bad}; expected XX or ZZ")
        if self.n_data < 1:
            raise ValueError(f"n_data must be >= 1, got {self.n_data}")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def parse(cls, text: str, n_data: int) -> "ArchitectureSpec":
        parts = [p.strip() for p in text.strip().split("-")]
        if any(not p for p in parts):
            raise ValueError(f"malformed architecture string {text!r}")
        return cls(tuple(parts), n_data)

    def __str__(self) -> str:
        return "-".join(self.layers)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_params(self) -> int:
        return self.n_layers * self.n_data

    @property
    def has_zz(self) -> bool:
        return "ZZ" in self.layers


@dataclass(frozen=True)
class QnnModel:
    arch: ArchitectureSpec
    theta: np.ndarray
    measurement: str = "Z"

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64)
        expected = (self.arch.n_layers, self.arch.n_data)
        if theta.shape != expected:
            raise ValueError(f"theta shape {theta.shape} does not match architecture {expected}")
        if self.measurement not in PAULIS:
            raise ValueError(f"measurement must be one of {PAULIS}, got {self.measurement!r}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def create(cls, arch: str | ArchitectureSpec, n_data: int | None = None,
               theta=None, measurement: str = "Z") -> "QnnModel":
        if isinstance(arch, str):
            if n_data is None:
                raise ValueError("n_data is required when arch is a string")
            arch = ArchitectureSpec.parse(arch, n_data)
        if theta is None:
            theta = np.zeros((arch.n_layers, arch.n_data))
        return cls(arch, theta, measurement)

    @property
    def n_data(self) -> int:
        return self.arch.n_data

    @property
    def n_qubits(self) -> int:
        return self.arch.n_data + 1

    def with_theta(self, theta) -> "QnnModel":
        return QnnModel(self.arch, theta, self.measurement)

    def with_measurement(self, measurement: str) -> "QnnModel":
        return QnnModel(self.arch, self.theta, measurement)


def _as_bits(pattern, n: int) -> np.ndarray:
    bits = np.asarray(pattern).astype(np.int64).ravel()
    if bits.shape != (n,):
        raise ValueError(f"pattern has {bits.size} bits, model expects {n}")
    return bits


def build_input(pattern) -> StateVector:
    """|1, x>: readout in |1> followed by the pattern bits."""
    bits = np.asarray(pattern).astype(np.int64).ravel()
    return sv.basis_state(bits.size + 1, [1, *bits.tolist()])


def _layer_gate(kind: str, angle: float, mode: str) -> sv.Gate2Q:
    if mode == "parity":
        return sv.xx(angle) if kind == "XX" else sv.zz(angle)
    rot = sv.rx(angle) if kind == "XX" else sv.rz(angle)
    if mode == "local":
        return sv.kron2(rot, rot)
    if mode == "controlled":
        return sv.controlled(rot)
    raise ValueError(f"unknown gate mode {mode!r}; expected one of {GATE_MODES}")


def apply_circuit(state: StateVector, model: QnnModel, mode: str = "parity") -> StateVector:
    """Run the QNN unitary on ``state`` in place.

    ``mode="local"`` swaps each parity gate for the product rotation R(t) (x) R(t)
    on (readout, data); ``mode="controlled"`` uses a rotation of the readout
    controlled by the data qubit. Both keep basis-state inputs unentangled.
    """
    if state.n_qubits != model.n_qubits:
        raise ValueError(
            f"state has {state.n_qubits} qubits, model needs {model.n_qubits}"
        )
    sv.apply_1q(state, sv.H, 0)
    for kind, row in zip(model.arch.layers, model.theta):
        for k, angle in enumerate(row, start=1):
            gate = _layer_gate(kind, float(angle), mode)
            if mode == "controlled":
                sv.apply_2q(state, gate, k, 0)
            else:
                sv.apply_2q(state, gate, 0, k)
    sv.apply_1q(state, sv.H, 0)
    return state


def output_state(model: QnnModel, pattern, mode: str = "parity") -> StateVector:
    bits = _as_bits(pattern, model.n_data)
    return apply_circuit(build_input(bits), model, mode)


def forward(model: QnnModel, pattern, mode: str = "parity") -> float:
    """Exact logit: expectation of the measurement Pauli on the readout."""
    state = output_state(model, pattern, mode)
    return sv.expectation(state, Observable(model.measurement, (0,)))


def forward_sampled(model: QnnModel, pattern, shots: int, seed: int) -> float:
    """Finite-shot estimate of :func:`forward`."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    state = output_state(model, pattern)
    return sv.sample_shots(state, Observable(model.measurement, (0,)), shots, seed)


def features(model: QnnModel, pattern, mode: str = "parity") -> np.ndarray:
    """Per-data-qubit expectations of the measurement Pauli (length N)."""
    state = output_state(model, pattern, mode)
    return sv.expectation_vector(state, model.measurement, range(1, model.n_qubits))


def predict_label(logit: float) -> int:
    return 1 if logit >= 0 else -1


def predict(model: QnnModel, pattern) -> int:
    return predict_label(forward(model, pattern))

