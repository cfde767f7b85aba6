"""Vectorised evaluator for the readout-coupled QNN on basis-state inputs.

Every gate in a layer is ``exp(-i t/2 P_0 P_k)`` with the same Pauli P on the
readout. Writing the readout in the eigenbasis of P splits the layer into two
branches, and in each branch the data qubits just receive independent
single-qubit rotations. A basis-state input therefore evolves into a sum of
``2**L`` terms ``|r_b> (x) |phi_b^1> (x) ... (x) |phi_b^N>`` and expectations
reduce to products of 2x2 overlaps: O(4**L * N) work instead of O(2**N).

Angles and patterns broadcast over arbitrary leading dimensions, which is how
the trainer evaluates a whole mini-batch of parameter shifts in one call.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_SQ2 = 1.0 / np.sqrt(2.0)
_HAD = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128)
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
# cap on leading-batch * branches**2 * N elements held at once
_CHUNK_ELEMS = 1 << 22


def _propagate(layers: Sequence[str], theta: np.ndarray, bits: np.ndarray):
    """Branch amplitudes of the readout (..., B, 2) and data (..., B, N, 2)."""
    lead = bits.shape[:-1]
    r = np.broadcast_to(np.array([_SQ2, -_SQ2], dtype=np.complex128), lead + (1, 2)).copy()
    phi = np.zeros(lead + (1, bits.shape[-1], 2), dtype=np.complex128)
    phi[..., 0, :, 0] = 1 - bits
    phi[..., 0, :, 1] = bits

    for j, kind in enumerate(layers):
        t = theta[..., j, :][..., None, :]  # (..., 1, N) against branch axis
        if kind == "ZZ":
            em, ep = np.exp(-0.5j * t), np.exp(0.5j * t)
            r_up = r * np.array([1, 0])
            r_dn = r * np.array([0, 1])
            phi_up = phi * np.stack([em, ep], axis=-1)
            phi_dn = phi * np.stack([ep, em], axis=-1)
        elif kind == "XX":
            c, s = np.cos(0.5 * t), np.sin(0.5 * t)
            a = (r[..., 0] + r[..., 1]) * _SQ2
            b = (r[..., 0] - r[..., 1]) * _SQ2
            r_up = a[..., None] * np.array([_SQ2, _SQ2])
            r_dn = b[..., None] * np.array([_SQ2, -_SQ2])
            p0, p1 = phi[..., 0], phi[..., 1]
            phi_up = np.stack([c * p0 - 1j * s * p1, c * p1 - 1j * s * p0], axis=-1)
            phi_dn = np.stack([c * p0 + 1j * s * p1, c * p1 + 1j * s * p0], axis=-1)
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
        r = np.concatenate([r_up, r_dn], axis=-2)
        phi = np.concatenate([phi_up, phi_dn], axis=-3)

    r = r @ _HAD.T
    return r, phi


def _prepare(layers, theta, patterns):
    theta = np.asarray(theta, dtype=np.float64)
    bits = np.asarray(patterns).astype(np.float64)
    n = theta.shape[-1]
    if bits.shape[-1] != n:
        raise ValueError(f"patterns have {bits.shape[-1]} bits, theta has {n} columns")
    if theta.shape[-2] != len(layers):
        raise ValueError(f"theta has {theta.shape[-2]} rows for {len(layers)} layers")
    lead = np.broadcast_shapes(theta.shape[:-2], bits.shape[:-1])
    theta = np.broadcast_to(theta, lead + theta.shape[-2:]).reshape(-1, *theta.shape[-2:])
    bits = np.broadcast_to(bits, lead + (n,)).reshape(-1, n)
    chunk = max(1, _CHUNK_ELEMS // (4 ** len(layers) * n))
    return theta, bits, lead, chunk


def logits(layers: Sequence[str], theta, patterns, pauli: str = "Z") -> np.ndarray:
    """Readout expectation of ``pauli`` for each (theta, pattern) pair."""
    layers = tuple(layers)
    theta, bits, lead, chunk = _prepare(layers, theta, patterns)
    op = _PAULI[pauli]
    out = np.empty(bits.shape[0])
    for lo in range(0, bits.shape[0], chunk):
        r, phi = _propagate(layers, theta[lo:lo + chunk], bits[lo:lo + chunk])
        gram = np.einsum("...bks,...cks->...bck", phi.conj(), phi)
        overlap = np.prod(gram, axis=-1)
        readout = np.einsum("...bs,st,...ct->...bc", r.conj(), op, r)
        out[lo:lo + chunk] = np.einsum("...bc,...bc->...", readout, overlap).real
    return out.reshape(lead)


def features(layers: Sequence[str], theta, patterns, pauli: str = "Z") -> np.ndarray:
    """Per-data-qubit expectations of ``pauli``; shape (..., N)."""
    layers = tuple(layers)
    theta, bits, lead, chunk = _prepare(layers, theta, patterns)
    op = _PAULI[pauli]
    n = bits.shape[-1]
    out = np.empty(bits.shape)
    for lo in range(0, bits.shape[0], chunk):
        r, phi = _propagate(layers, theta[lo:lo + chunk], bits[lo:lo + chunk])
        gram = np.einsum("...bks,...cks->...bck", phi.conj(), phi)
        # product over all data qubits except k, via prefix/suffix products
        ones = np.ones(gram.shape[:-1] + (1,), dtype=gram.dtype)
        prefix = np.cumprod(np.concatenate([ones, gram[..., :-1]], axis=-1), axis=-1)
        suffix = np.cumprod(np.concatenate([ones, gram[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
        others = prefix * suffix
        local = np.einsum("...bks,st,...ckt->...bck", phi.conj(), op, phi)
        readout = np.einsum("...bs,...cs->...bc", r.conj(), r)
        out[lo:lo + chunk] = np.einsum("...bc,...bck->...k", readout, local * others).real
    return out.reshape(lead + (n,))
