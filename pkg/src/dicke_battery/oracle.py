"""Brute-force reference implementations, used by the test-suite only.

Nothing in the library imports this module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .ergotropy import EnergyLevels
from .liouville import BathParams

MAX_DENSE_QUBITS = 4
MAX_EXHAUSTIVE_DIM = 8


@dataclass(frozen=True)
class DenseSuperoperator:
    """Generator on column-stacked vec(rho): vec(A rho B) = (B^T kron A) vec(rho)."""

    n_qubits: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = rho.shape[0]
        return (self.matrix @ rho.reshape(-1, order="F")).reshape(d, d, order="F")


def _embedded(op: np.ndarray, site: int, n: int) -> np.ndarray:
    out = np.ones((1, 1))
    for i in range(n):
        out = np.kron(out, op if i == site else np.eye(2))
    return out


def _dissipator(a: np.ndarray) -> np.ndarray:
    eye = np.eye(a.shape[0])
    ada = a.conj().T @ a
    return np.kron(a.conj(), a) - 0.5 * np.kron(eye, ada) - 0.5 * np.kron(ada.T, eye)


def assemble_dense_superoperator(n_qubits: int, params: BathParams) -> DenseSuperoperator:
    if n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"dense superoperator is limited to N <= {MAX_DENSE_QUBITS}")
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1| with |1> excited
    sm = [_embedded(lower, i, n_qubits) for i in range(n_qubits)]
    jm = sum(sm)
    nc, nl = params.n_c, params.n_l
    s = params.eta * params.gamma_c * ((nc + 1) * _dissipator(jm) + nc * _dissipator(jm.T))
    for a in sm:
        s = s + (1 - params.eta) * params.gamma_l * ((nl + 1) * _dissipator(a) + nl * _dissipator(a.T))
    return DenseSuperoperator(n_qubits, s)


def exhaustive_passive_energy(populations, levels: EnergyLevels, exhaustive: bool = True) -> float:
    """Minimum of sum_i p_pi(i) E_i over all assignments of populations to levels."""
    energies = levels.slots()
    p = np.zeros(len(energies))
    pops = np.asarray(populations, dtype=float)
    if len(pops) > len(energies):
        raise ValueError("more populations than levels")
    p[: len(pops)] = pops
    if not exhaustive:
        return float(np.sort(p)[::-1] @ np.sort(energies))
    if len(p) > MAX_EXHAUSTIVE_DIM:
        raise ValueError(f"exhaustive search is limited to dimension {MAX_EXHAUSTIVE_DIM}")
    return float(min(p[list(perm)] @ energies for perm in itertools.permutations(range(len(p)))))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def product_state(n_qubits: int, single: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1))
    for _ in range(n_qubits):
        out = np.kron(out, single)
    return out
