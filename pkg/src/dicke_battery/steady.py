"""Steady states: block form for collective baths, unique fixed points otherwise."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .dicke import Chi, SchurTransform, degeneracy, schur_transform
from .liouville import (
    DickeRateGenerator,
    FullLiouvillian,
    SectorGenerator,
    SectorKind,
    geometric_ladder,
)

TRACE_TOL = 1e-10
PSD_TOL = 1e-10


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class Block:
    chi: Chi
    ladder: np.ndarray

    @property
    def j2(self) -> int:
        return self.chi.j2


@dataclass(frozen=True)
class BlockState:
    """rho = sum_j chi_j (x) diag(ladder_j) in the extended Dicke basis."""

    n_qubits: int
    blocks: tuple[Block, ...]
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.validate:
            return
        total = sum(b.chi.trace for b in self.blocks)
        if abs(total - 1.0) > TRACE_TOL:
            raise ValueError(f"block weights sum to {total}, not 1")
        for b in self.blocks:
            lad = np.asarray(b.ladder)
            if len(lad) != b.j2 + 1:
                raise ValueError(f"ladder length {len(lad)} does not match 2j+1 = {b.j2 + 1}")
            if lad.min() < -PSD_TOL or abs(lad.sum() - 1.0) > TRACE_TOL:
                raise ValueError("ladder is not a probability vector")
            if b.chi.matrix is not None:
                mat = b.chi.matrix
                if np.abs(mat - mat.conj().T).max() > 1e-10:
                    raise ValueError("chi block is not Hermitian")
                if np.linalg.eigvalsh(mat).min() < -PSD_TOL:
                    raise ValueError("chi block is not positive semidefinite")
            elif b.chi.scale < -PSD_TOL:
                raise ValueError("chi block is not positive semidefinite")

    @property
    def weights(self) -> dict[int, float]:
        return {b.j2: b.chi.trace for b in self.blocks}

    @property
    def p_sym(self) -> float:
        return self.weights.get(self.n_qubits, 0.0)

    def spectrum(self) -> list[tuple[float, int, int]]:
        """(eigenvalue, excitation number k, multiplicity) triples."""
        out = []
        for b in self.blocks:
            kmin = (self.n_qubits - b.j2) // 2
            lad = np.asarray(b.ladder)
            for val, mult in b.chi.eigenvalues():
                for i, t in enumerate(lad):
                    out.append((val * float(t), kmin + i, mult))
        return out

    def energy(self) -> float:
        e = 0.0
        for b in self.blocks:
            kmin = (self.n_qubits - b.j2) // 2
            lad = np.asarray(b.ladder)
            e += b.chi.trace * float(lad @ (kmin + np.arange(len(lad))))
        return e

    def to_full(self, transform: SchurTransform | None = None) -> "FullState":
        t = transform or schur_transform(self.n_qubits)
        d = 1 << self.n_qubits
        rho_schur = np.zeros((d, d), dtype=complex)
        slices = t.block_slices()
        for b in self.blocks:
            chi = b.chi.dense()
            for s in range(chi.shape[0]):
                for s2 in range(chi.shape[0]):
                    if chi[s, s2] == 0:
                        continue
                    r, c = slices[(b.j2, s + 1)], slices[(b.j2, s2 + 1)]
                    rho_schur[r, c] += chi[s, s2] * np.diag(b.ladder)
        u = t.matrix
        return FullState(u @ rho_schur @ u.conj().T)

    def dicke_populations(self, generator: DickeRateGenerator) -> np.ndarray:
        """Total (j, m) populations in the order used by ``generator``."""
        p = np.zeros(generator.dim)
        for b in self.blocks:
            sl = generator.block_ranges()[b.j2]
            p[sl] = b.chi.trace * np.asarray(b.ladder)
        return p

    @classmethod
    def from_dicke_populations(cls, n_qubits: int, generator: DickeRateGenerator,
                               populations: np.ndarray, validate: bool = True) -> "BlockState":
        """Permutation-invariant state with chi_j proportional to the identity."""
        blocks = []
        for j2, sl in generator.block_ranges().items():
            p = np.clip(np.asarray(populations[sl], dtype=float), 0.0, None)
            w = float(p.sum())
            nu = degeneracy(n_qubits, j2)
            lad = p / w if w > 0 else geometric_ladder(j2, 0.0)
            blocks.append(Block(Chi(j2, nu, None, w / nu), lad))
        total = sum(b.chi.trace for b in blocks)
        if total > 0:
            blocks = [Block(Chi(b.j2, b.chi.nu, None, b.chi.scale / total), b.ladder) for b in blocks]
        return cls(n_qubits, tuple(blocks), validate)

    def to_csv(self) -> str:
        """Rows (j, sigma, sigma_prime, m, re, im) of chi_j[s, s'] * ladder_m."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "sigma", "sigma_prime", "m", "re", "im"])
        for b in self.blocks:
            chi = b.chi.dense()
            for s in range(chi.shape[0]):
                for s2 in range(chi.shape[1]):
                    for i, t in enumerate(b.ladder):
                        v = chi[s, s2] * t
                        w.writerow([_half(b.j2), s + 1, s2 + 1, _half(2 * i - b.j2),
                                    f"{v.real:.17g}", f"{np.imag(v):.17g}"])
        return buf.getvalue()


def _half(x2: int) -> str:
    return str(x2 // 2) if x2 % 2 == 0 else f"{x2}/2"


@dataclass(frozen=True)
class FullState:
    """Dense density matrix on 2^N dimensions."""

    matrix: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] & (m.shape[0] - 1):
            raise ValueError("density matrix must be square with a power-of-two dimension")
        if not self.validate:
            return
        if np.abs(m - m.conj().T).max() > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix has trace {np.trace(m).real}")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def ground(cls, n_qubits: int) -> "FullState":
        m = np.zeros((1 << n_qubits,) * 2)
        m[0, 0] = 1.0
        return cls(m)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "FullState":
        d = 1 << n_qubits
        return cls(np.eye(d) / d)

    @classmethod
    def product_gibbs(cls, n_qubits: int, q: float) -> "FullState":
        one = np.array([1.0, q]) / (1.0 + q)
        diag = np.ones(1)
        for _ in range(n_qubits):
            diag = np.kron(diag, one)
        return cls(np.diag(diag))

    @classmethod
    def pure(cls, psi: np.ndarray) -> "FullState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


def project_to_blocks(state: FullState, transform: SchurTransform | None = None) -> BlockState:
    """chi_j[s, s'] = sum_m <j,m,s|rho|j,m,s'>; ladder = m-marginal of block j."""
    t = transform or schur_transform(state.n_qubits)
    if t.matrix.shape[0] != state.dim:
        raise ValueError("transform and state dimensions differ")
    rho = t.matrix.conj().T @ state.matrix @ t.matrix
    slices = t.block_slices()
    blocks = []
    for j2 in sorted({k[0] for k in slices}, reverse=True):
        nu = max(s for (a, s) in slices if a == j2)
        chi = np.zeros((nu, nu), dtype=complex)
        marg = np.zeros(j2 + 1)
        for s in range(nu):
            rs = slices[(j2, s + 1)]
            marg += np.diag(rho[rs, rs]).real
            for s2 in range(nu):
                chi[s, s2] = np.trace(rho[rs, slices[(j2, s2 + 1)]])
        w = marg.sum()
        lad = marg / w if w > 1e-300 else geometric_ladder(j2, 0.0)
        chi = 0.5 * (chi + chi.conj().T)
        if np.abs(chi.imag).max() == 0:
            chi = chi.real
        blocks.append(Block(Chi(j2, nu, chi), np.clip(lad, 0.0, None) / max(lad.clip(0).sum(), 1e-300)))
    return BlockState(state.n_qubits, tuple(blocks))


def _chis(weights) -> list[Chi]:
    if isinstance(weights, BlockState):
        return [b.chi for b in weights.blocks]
    return list(weights)


def collective_steady_state(weights: BlockState | Iterable[Chi], alpha_c: float,
                            n_qubits: int | None = None) -> BlockState:
    """Attach the thermal ladder alpha_c^{j+m}/Z_j to every chi_j."""
    if not 0.0 <= alpha_c < 1.0:
        raise ValueError(f"alpha_c must lie in [0, 1), got {alpha_c}")
    chis = _chis(weights)
    if n_qubits is None:
        n_qubits = weights.n_qubits if isinstance(weights, BlockState) else max(c.j2 for c in chis)
    total = sum(c.trace for c in chis)
    if abs(total - 1.0) > TRACE_TOL:
        raise ValueError(f"sector weights sum to {total}, not 1")
    blocks = tuple(Block(c, geometric_ladder(c.j2, alpha_c)) for c in chis)
    return BlockState(n_qubits, blocks)


class LadderFixedPoint(NamedTuple):
    populations: np.ndarray
    thermalizing: bool


def ladder_fixed_point(generator: SectorGenerator) -> LadderFixedPoint:
    """Null vector of a thermalizing sector from current balance p_l b_l = p_{l+1} c_l."""
    d = generator.dim
    if generator.kind is not SectorKind.THERMALIZING:
        return LadderFixedPoint(np.zeros(d), False)
    p = np.zeros(d)
    p[0] = 1.0
    for l in range(d - 1):
        c = generator.upper[l]
        p[l + 1] = p[l] * generator.lower[l] / c if c > 0 else 0.0
    return LadderFixedPoint(p / p.sum(), True)


def _residual(liouvillian: FullLiouvillian, rho: np.ndarray) -> float:
    return float(np.abs(liouvillian.apply(rho)).max())


def _hermitian_unit(rho: np.ndarray) -> np.ndarray:
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def steady_state_full(liouvillian: FullLiouvillian, seed_state: FullState | None = None,
                      tol: float = 1e-10, max_steps: int = 40, method: str = "auto") -> FullState:
    """Fixed point of the full-space generator.

    Without a local channel the fixed point depends on the seed: it is
    obtained exactly by projecting the seed onto spin blocks and attaching
    thermal ladders.  With a local channel it is unique; ``method="krylov"``
    solves the bordered system L[rho] + tr(rho) I/d = I/d with GMRES, and
    ``method="integrate"`` propagates over doubling time windows until the
    residual max|L[rho]| falls below ``tol``.  ``"auto"`` tries Krylov first
    and finishes by integration if needed.
    """
    n = liouvillian.n_qubits
    d = liouvillian.dim
    cd, cu, ld, lu = liouvillian.rates
    if not (ld > 0 or lu > 0):
        if seed_state is None:
            raise ValueError("without a local channel the fixed point depends on the initial state; pass seed_state")
        if cd == 0 and cu == 0:
            return seed_state
        t = schur_transform(n)
        return collective_steady_state(project_to_blocks(seed_state, t), cu / cd).to_full(t)
    seed = (seed_state or FullState.maximally_mixed(n)).matrix
    rho = seed
    if method in ("auto", "krylov"):
        rho = _krylov_fixed_point(liouvillian, seed, tol)
        res = _residual(liouvillian, rho)
        if res < tol or method == "krylov":
            if res >= tol:
                raise ConvergenceError("GMRES did not reach the tolerance", res)
            return FullState(rho)
    elif method != "integrate":
        raise ValueError(f"unknown method {method!r}")
    return FullState(_integrate_fixed_point(liouvillian, rho, tol, max_steps))


def _krylov_fixed_point(liouvillian: FullLiouvillian, seed: np.ndarray, tol: float) -> np.ndarray:
    d = liouvillian.dim
    eye = np.eye(d).ravel() / d

    def mv(v):
        r = v.reshape(d, d)
        return liouvillian.apply(r).ravel() + np.trace(r) * eye

    op = spla.LinearOperator((d * d, d * d), matvec=mv, dtype=complex)
    x, _ = spla.gmres(op, eye.astype(complex), x0=seed.ravel().astype(complex),
                      rtol=min(1e-3 * tol, 1e-13), atol=0.0, restart=min(d * d, 300), maxiter=200)
    rho = _hermitian_unit(x.reshape(d, d))
    # a few refinement sweeps on the residual equation
    for _ in range(3):
        r = mv(rho.ravel())
        r = eye - r
        if np.abs(r).max() < 1e-3 * tol:
            break
        dx, _ = spla.gmres(op, r, rtol=1e-10, atol=0.0, restart=min(d * d, 300), maxiter=100)
        rho = _hermitian_unit(rho + dx.reshape(d, d))
    return rho


def _integrate_fixed_point(liouvillian: FullLiouvillian, rho: np.ndarray, tol: float,
                           max_steps: int) -> np.ndarray:
    d = liouvillian.dim
    cd, cu, ld, lu = liouvillian.rates
    window = 1.0 / max(cd, cu, ld, lu, 1e-300)

    def rhs(_, y):
        return liouvillian.apply(y.view(complex).reshape(d, d)).ravel().view(float)

    res = _residual(liouvillian, rho)
    last = math.inf
    for _ in range(max_steps):
        if res < tol:
            return rho
        sol = solve_ivp(rhs, (0.0, window), rho.ravel().view(float).copy(), method="DOP853",
                        rtol=1e-12, atol=1e-14)
        if not sol.success:
            raise ConvergenceError(sol.message, res)
        rho = _hermitian_unit(sol.y[:, -1].view(complex).reshape(d, d))
        last, res = res, _residual(liouvillian, rho)
        if res >= last and res < 10 * tol:
            break
        window *= 2.0
    if res >= tol:
        raise ConvergenceError("integration did not reach the tolerance", res)
    return rho
