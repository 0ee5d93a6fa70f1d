"""Populations, symmetric-state fidelity, readout-error transform and the
two-qubit gate-error bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hamiltonian import basis_labels, excitation_counts
from .system import SpamModel

__all__ = [
    "DimMismatchError",
    "NotNormalizedError",
    "WReference",
    "populations",
    "aggregate_populations",
    "w_state",
    "w_fidelity",
    "spam_matrix",
    "apply_spam",
    "apply_spam_to_labels",
    "gate_error_bound",
]


class DimMismatchError(ValueError):
    pass


class NotNormalizedError(ValueError):
    pass


@dataclass(frozen=True)
class WReference:
    """Single-excitation symmetric state with per-atom phases:
    (1/sqrt(N)) sum_i exp(i phi_i) |g..e_i..g>."""

    phases: tuple[float, ...]

    @property
    def atom_count(self) -> int:
        return len(self.phases)

    def vector(self) -> np.ndarray:
        return w_state(self.phases)


def w_state(phases: tuple[float, ...] | list[float]) -> np.ndarray:
    n = len(phases)
    if n < 1:
        raise ValueError("need at least one atom")
    v = np.zeros(2**n, dtype=complex)
    for i, phi in enumerate(phases):
        v[1 << (n - 1 - i)] = np.exp(1j * phi)
    return v / math.sqrt(n)


def populations(rho: np.ndarray) -> dict[str, float]:
    """Diagonal populations keyed by basis label, plus aggregates: the
    single-excitation sum 'ge+eg' for two atoms and the n-excitation
    probabilities P0..Pn for three."""
    rho = np.asarray(rho)
    d = rho.shape[0]
    n = d.bit_length() - 1
    if 2**n != d:
        raise DimMismatchError(f"dimension {d} is not a power of two")
    diag = np.real(np.diag(rho))
    out = {lab: float(p) for lab, p in zip(basis_labels(n), diag)}
    return aggregate_populations(out, n)


def aggregate_populations(base: dict[str, float], n_atoms: int) -> dict[str, float]:
    out = dict(base)
    if n_atoms == 2:
        out["ge+eg"] = out["ge"] + out["eg"]
    if n_atoms == 3:
        counts = excitation_counts(3)
        labels = basis_labels(3)
        for k in range(4):
            out[f"P{k}"] = float(sum(base[labels[i]] for i in range(8) if counts[i] == k))
    return out


def w_fidelity(rho: np.ndarray, reference: WReference) -> float:
    """<W|rho|W> with the reference's own phases; real in [0, 1]."""
    v = reference.vector()
    rho = np.asarray(rho)
    if rho.shape[0] != v.shape[0]:
        raise DimMismatchError(f"state dim {rho.shape[0]} vs reference dim {v.shape[0]}")
    f = np.real(np.vdot(v, rho @ v))
    return float(f)


def spam_matrix(spam: SpamModel) -> np.ndarray:
    """Per-atom detection channel, columns = true state (g, e), rows =
    detected state (g, e)."""
    eps = spam.false_positive
    epsp = spam.false_negative
    eta = spam.pumping_error
    pg_given_g = eta * (1 - eps) + (1 - eta) * (1 - eps)
    pr_given_g = eta * eps + (1 - eta) * eps
    pg_given_r = eta * (1 - eps) + (1 - eta) * (1 - eps) * epsp
    pr_given_r = eta * eps + (1 - eta) * (1 - epsp + eps * epsp)
    return np.array([[pg_given_g, pg_given_r], [pr_given_g, pr_given_r]])


def apply_spam(true_probs: dict[str, float], spam: SpamModel) -> dict[str, float]:
    """Transform true basis-label probabilities into detected ones.

    Keys are strings over {g, e}; all keys must have equal length (the atom
    count) and the probabilities must sum to one.  Detected joint
    probabilities are products of the independent per-atom channels.
    """
    labels = sorted(true_probs)
    if not labels:
        raise ValueError("empty probability map")
    n = len(labels[0])
    if any(len(k) != n or set(k) - {"g", "e"} for k in labels):
        raise ValueError("keys must be equal-length strings over {g, e}")
    total = sum(true_probs.values())
    if abs(total - 1.0) > 1e-9:
        raise NotNormalizedError(f"probabilities sum to {total}, expected 1")
    full = basis_labels(n)
    p = np.array([true_probs.get(lab, 0.0) for lab in full])
    m = spam_matrix(spam)
    joint = np.array([[1.0]])
    for _ in range(n):
        joint = np.kron(joint, m)
    q = joint @ p
    return {lab: float(v) for lab, v in zip(full, q)}


def apply_spam_to_labels(pops: dict[str, float], spam: SpamModel, n_atoms: int) -> dict[str, float]:
    """SPAM-transform a population map that may carry aggregate keys; the
    aggregates are recomputed from the transformed basis populations."""
    base = {k: v for k, v in pops.items() if set(k) <= {"g", "e"} and len(k) == n_atoms}
    det = apply_spam(base, spam)
    return aggregate_populations(det, n_atoms)


def gate_error_bound(v: float, tau_r: float) -> float:
    """Intrinsic two-qubit gate error floor, (3 (7 pi)^{2/3} / 8) (V tau_R)^{-2/3}.

    ``v`` is the interaction strength (rad/us), ``tau_r`` the Rydberg
    lifetime (us).
    """
    if v <= 0 or tau_r <= 0:
        raise ValueError("v and tau_r must be positive")
    return 3.0 * (7.0 * math.pi) ** (2.0 / 3.0) / 8.0 * (v * tau_r) ** (-2.0 / 3.0)
