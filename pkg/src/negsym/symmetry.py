"""Numerical checks of negational symmetry.

Each check draws random angles and patterns, evaluates the circuit on the
pattern and on its bitwise negation, and records the worst violation of the
expected relation. Relations are written as :class:`Claim` values:

* ``equal``          f(x) == f(~x)
* ``antisymmetric``  f(x) == -f(~x)
* ``constant(v)``    f(x) == f(~x) == v
* ``zero``           f(x) == -f(~x) == 0 (vector-valued or sign-flipped form)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import branch
from . import statevec as sv
from .data import LabeledDataset, negate
from .fileio import atomic_write_text
from .qnn import ArchitectureSpec, QnnModel, features, forward
from .train import batch_features, batch_logits

DEFAULT_TOL = 1e-9
BELL_TOL = 1e-12
CLAIM_KINDS = ("equal", "antisymmetric", "constant", "zero")
EVAL_METHODS = ("dense", "branch")
# deviation below which a vector is treated as zero for cosine/pearson
_ZERO = 1e-12


@dataclass(frozen=True)
class Claim:
    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in CLAIM_KINDS:
            raise ValueError(f"unknown claim kind {self.kind!r}")
        if (self.kind == "constant") != (self.value is not None):
            raise ValueError("a value is required for constant claims and only for them")

    def __str__(self) -> str:
        if self.kind == "constant":
            return f"constant({self.value:g})"
        return self.kind

    def deviation(self, fx: np.ndarray, fnx: np.ndarray) -> float:
        """Worst violation over all entries of paired outputs."""
        fx, fnx = np.asarray(fx, dtype=np.float64), np.asarray(fnx, dtype=np.float64)
        if fx.size == 0:
            return 0.0
        if self.kind == "equal":
            dev = np.abs(fx - fnx)
        elif self.kind == "antisymmetric":
            dev = np.abs(fx + fnx)
        elif self.kind == "constant":
            dev = np.maximum(np.abs(fx - self.value), np.abs(fnx - self.value))
        else:
            dev = np.maximum(np.abs(fx), np.abs(fnx))
        return float(dev.max())


EQUAL = Claim("equal")
ANTISYMMETRIC = Claim("antisymmetric")
ZERO = Claim("zero")

# readout measurement, per architecture and Pauli
TABLE1 = {
    ("XX", "Z"): Claim("constant", -1.0),
    ("XX", "X"): Claim("constant", 0.0),
    ("XX", "Y"): ZERO,
    ("ZZ", "Z"): EQUAL,
    ("ZZ", "X"): Claim("constant", 0.0),
    ("ZZ", "Y"): ANTISYMMETRIC,
    ("XX-ZZ", "Z"): EQUAL,
    ("XX-ZZ", "X"): Claim("constant", 0.0),
    ("XX-ZZ", "Y"): ANTISYMMETRIC,
    ("ZZ-XX", "Z"): EQUAL,
    ("ZZ-XX", "X"): Claim("constant", 0.0),
    ("ZZ-XX", "Y"): ANTISYMMETRIC,
}
# data-qubit measurement, per Pauli
TABLE2 = {"Z": ANTISYMMETRIC, "X": ZERO, "Y": ANTISYMMETRIC}


def readout_claim(arch: ArchitectureSpec | str, measurement: str = "Z") -> Claim:
    """Expected readout relation for any stack of XX / ZZ layers.

    Without a ZZ layer every XX gate commutes with the X-basis readout state,
    so the readout never moves and the outputs are the constants of the
    single-XX row.
    """
    layers = arch.layers if isinstance(arch, ArchitectureSpec) else tuple(arch.upper().split("-"))
    key = "ZZ" if "ZZ" in layers else "XX"
    return TABLE1[(key, measurement)]


@dataclass
class SymmetryReport:
    architecture: str
    measurement: str
    claim: str
    trials: int
    max_deviation: float
    tolerance: float
    passed: bool
    n_data: int = 0
    target: str = "readout"

    def to_record(self) -> dict:
        return {
            "architecture": self.architecture,
            "measurement": self.measurement,
            "claim": self.claim,
            "trials": self.trials,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "n_data": self.n_data,
            "target": self.target,
        }


def _draw(arch: ArchitectureSpec, trials: int, seed: int):
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-np.pi, np.pi, (trials, arch.n_layers, arch.n_data))
    bits = rng.integers(0, 2, (trials, arch.n_data), dtype=np.uint8)
    return theta, bits


def _paired_outputs(arch, theta, bits, measurement, target, method, mode):
    """Outputs on x and ~x for every trial; shape (trials,) or (trials, N)."""
    if method not in EVAL_METHODS:
        raise ValueError(f"method must be one of {EVAL_METHODS}, got {method!r}")
    if method == "branch" and mode != "parity":
        raise ValueError("the branch evaluator only supports parity gates")
    neg = negate(bits)
    if method == "branch":
        fn = branch.logits if target == "readout" else branch.features
        return (fn(arch.layers, theta, bits, measurement),
                fn(arch.layers, theta, neg, measurement))
    fn = forward if target == "readout" else features
    fx, fnx = [], []
    for t, x, nx in zip(theta, bits, neg):
        model = QnnModel(arch, t, measurement)
        fx.append(fn(model, x, mode))
        fnx.append(fn(model, nx, mode))
    return np.array(fx), np.array(fnx)


def check_claim(arch, n_data: int, measurement: str, claim: Claim, target: str = "readout",
                trials: int = 1000, seed: int = 0, tol: float = DEFAULT_TOL,
                method: str = "dense", mode: str = "parity") -> SymmetryReport:
    """Test ``claim`` on fresh random (theta, x) draws."""
    if target not in ("readout", "data"):
        raise ValueError(f"target must be 'readout' or 'data', got {target!r}")
    if not isinstance(arch, ArchitectureSpec):
        arch = ArchitectureSpec.parse(arch, n_data)
    theta, bits = _draw(arch, trials, seed)
    fx, fnx = _paired_outputs(arch, theta, bits, measurement, target, method, mode)
    dev = claim.deviation(fx, fnx)
    return SymmetryReport(str(arch), measurement, str(claim), trials, dev, tol,
                          dev <= tol, arch.n_data, target)


def check_theorem1(arch, n_data: int, trials: int = 1000, seed: int = 0,
                   tol: float = DEFAULT_TOL, method: str = "dense") -> SymmetryReport:
    """Z readout: f(x) == f(~x), downgraded to constant(-1) when there is no ZZ layer."""
    arch = ArchitectureSpec.parse(arch, n_data) if isinstance(arch, str) else arch
    return check_claim(arch, n_data, "Z", readout_claim(arch, "Z"), "readout",
                       trials, seed, tol, method)


def check_theorem2(arch, n_data: int, trials: int = 1000, seed: int = 0,
                   tol: float = DEFAULT_TOL, method: str = "dense",
                   measurement: str = "Z") -> SymmetryReport:
    """Data-qubit features: the relation of the given Pauli's row (Z: g(x) == -g(~x))."""
    return check_claim(arch, n_data, measurement, TABLE2[measurement], "data",
                       trials, seed, tol, method)


def check_table1_grid(n_data: int = 4, trials: int = 1000, seed: int = 0,
                      tol: float = DEFAULT_TOL, method: str = "dense") -> list[SymmetryReport]:
    return [
        check_claim(arch, n_data, pauli, claim, "readout", trials, seed + i, tol, method)
        for i, ((arch, pauli), claim) in enumerate(TABLE1.items())
    ]


def check_table2_grid(n_data: int = 4, trials: int = 1000, seed: int = 0,
                      tol: float = DEFAULT_TOL, method: str = "dense",
                      arch: str = "XX-ZZ") -> list[SymmetryReport]:
    return [
        check_claim(arch, n_data, pauli, claim, "data", trials, seed + i, tol, method)
        for i, (pauli, claim) in enumerate(TABLE2.items())
    ]


def check_ablation(arch: str = "XX-ZZ", n_data: int = 4, trials: int = 1000, seed: int = 0,
                   mode: str = "local", tol: float = DEFAULT_TOL) -> SymmetryReport:
    """f(x) == f(~x) on a control circuit whose gates cannot entangle basis inputs.

    A failing report (deviation above ``tol``) means the control broke the symmetry.
    """
    report = check_claim(arch, n_data, "Z", EQUAL, "readout", trials, seed, tol, "dense", mode)
    report.architecture = f"{report.architecture}[{mode}]"
    return report


def check_model(model: QnnModel, trials: int = 1000, seed: int = 0, tol: float = DEFAULT_TOL,
                method: str = "branch") -> list[SymmetryReport]:
    """Readout and data-qubit relations for one fixed model on random patterns."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, (trials, model.n_data), dtype=np.uint8)
    neg = negate(bits)
    pauli = model.measurement
    out = []
    for target, claim, fn in (("readout", readout_claim(model.arch, pauli), batch_logits),
                              ("data", TABLE2[pauli], batch_features)):
        dev = claim.deviation(fn(model, bits, method), fn(model, neg, method))
        out.append(SymmetryReport(str(model.arch), pauli, str(claim), trials, dev, tol,
                                  dev <= tol, model.n_data, target))
    return out


def bell_state() -> sv.StateVector:
    state = sv.basis_state(2, [0, 0])
    sv.apply_1q(state, sv.H, 0)
    sv.apply_2q(state, sv.CNOT, 0, 1)
    return state


def bell_probabilities(basis: str = "computational") -> np.ndarray:
    """Joint outcome probabilities (00, 01, 10, 11) of CNOT (H x I)|00>.

    In the Fourier basis the outcomes are (++, +-, -+, --).
    """
    state = bell_state()
    if basis == "fourier":
        sv.apply_1q(state, sv.H, 0)
        sv.apply_1q(state, sv.H, 1)
    elif basis != "computational":
        raise ValueError(f"basis must be 'computational' or 'fourier', got {basis!r}")
    return state.probabilities()


def check_bell(basis: str, tol: float = BELL_TOL) -> SymmetryReport:
    expected = np.array([0.5, 0.0, 0.0, 0.5])
    dev = float(np.max(np.abs(bell_probabilities(basis) - expected)))
    pauli = "Z" if basis == "computational" else "X"
    return SymmetryReport("bell", pauli, "probabilities(0.5,0,0,0.5)", 1, dev, tol,
                          dev <= tol, 2, basis)


def full_suite(n_data: int = 4, trials: int = 1000, seed: int = 0, tol: float = DEFAULT_TOL,
               method: str = "dense") -> list[SymmetryReport]:
    """Both grids plus the two Bell records (17 reports)."""
    return (check_table1_grid(n_data, trials, seed, tol, method)
            + check_table2_grid(n_data, trials, seed + 100, tol, method)
            + [check_bell("computational"), check_bell("fourier")])


@dataclass
class PairStats:
    mean_diff: float
    std_diff: float
    mean_pearson: float
    mean_cosine: float
    max_pair_norm: float
    n_pairs: int = 0
    skipped_cosine: int = 0
    skipped_pearson: int = 0


def logit_pair_stats(model: QnnModel, dataset: LabeledDataset,
                     method: str = "branch") -> PairStats:
    """Statistics of f(x) - f(~x); correlations are undefined for scalars and left NaN."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    diff = (batch_logits(model, dataset.patterns, method)
            - batch_logits(model, negate(dataset.patterns), method))
    return PairStats(float(diff.mean()), float(diff.std()), float("nan"), float("nan"),
                     float(np.abs(diff).max()), len(diff))


def _pairwise_cosine(a: np.ndarray, b: np.ndarray):
    na, nb = np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)
    ok = (na > _ZERO) & (nb > _ZERO)
    cos = np.einsum("ij,ij->i", a[ok], b[ok]) / (na[ok] * nb[ok])
    return cos, int((~ok).sum())


def _pairwise_pearson(a: np.ndarray, b: np.ndarray):
    ca = a - a.mean(axis=1, keepdims=True)
    cb = b - b.mean(axis=1, keepdims=True)
    return _pairwise_cosine(ca, cb)


def feature_pair_stats(model: QnnModel, dataset: LabeledDataset,
                       method: str = "branch") -> PairStats:
    """Statistics of the residual g(x) + g(~x) and of the pairwise alignment.

    Cosine similarity and Pearson correlation are taken per pair across the N
    feature components; pairs where either side is zero (or constant, for
    Pearson) are skipped and counted.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    g = batch_features(model, dataset.patterns, method)
    gn = batch_features(model, negate(dataset.patterns), method)
    resid = g + gn
    cos, skip_cos = _pairwise_cosine(g, gn)
    pear, skip_pear = _pairwise_pearson(g, gn) if g.shape[1] >= 2 else (np.array([]), len(g))
    return PairStats(
        mean_diff=float(resid.mean()),
        std_diff=float(resid.std()),
        mean_pearson=float(pear.mean()) if pear.size else float("nan"),
        mean_cosine=float(cos.mean()) if cos.size else float("nan"),
        max_pair_norm=float(np.linalg.norm(resid, axis=1).max()),
        n_pairs=len(g),
        skipped_cosine=skip_cos,
        skipped_pearson=skip_pear,
    )


def write_report(path, reports: Sequence[SymmetryReport], extra: dict | None = None) -> None:
    doc = {
        "passed": all(r.passed for r in reports),
        "records": [r.to_record() for r in reports],
    }
    if extra:
        doc.update(extra)
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def format_table(reports: Iterable[SymmetryReport]) -> str:
    header = f"{'architecture':<16} {'target':<13} {'M':<2} {'claim':<28} {'max_dev':>10}  result"
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(
            f"{r.architecture:<16} {r.target:<13} {r.measurement:<2} {r.claim:<28} "
            f"{r.max_deviation:>10.3e}  {'PASS' if r.passed else 'FAIL'}"
        )
    return "\n".join(lines)
