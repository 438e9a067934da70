"""Dissipative generators for collective and local thermal baths.

Three backends live here:

* ``SectorGenerator``: the tri-diagonal generator of one Bohr sector
  (j, sigma; j', sigma'; delta) under purely collective dissipation;
* ``FullLiouvillian``: the matrix-free action of the mixed generator on a
  dense 2^N x 2^N operator;
* ``DickeRateGenerator``: a rate matrix over total (j, m) populations,
  exact for permutation-invariant states that are diagonal in the
  excitation number (ground, Dicke-diagonal, product Gibbs initial data and
  every state they evolve into).  It is what makes N = 26 sweeps cheap.

No Hamiltonian term appears anywhere: the battery Hamiltonian commutes
with every dissipator used here, and in the rotating frame it drops out.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .dicke import MAX_SCHUR, degeneracy, ladder_arrays, spins

MAX_SIGMA_RESOLVED = 12
MAX_UNRESOLVED = 30


@dataclass(frozen=True)
class BathParams:
    """Rates and Bose ratios of the collective (c) and local (l) baths."""

    gamma_c: float = 1.0
    gamma_l: float = 0.0
    eta: float = 1.0
    alpha_c: float = 0.0
    alpha_l: float = 0.0

    def __post_init__(self):
        if self.gamma_c < 0 or self.gamma_l < 0:
            raise ValueError("rates must be nonnegative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        for name in ("alpha_c", "alpha_l"):
            a = getattr(self, name)
            if not 0.0 <= a < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {a}")

    @classmethod
    def from_ratio(cls, gamma_r: float, *, gamma_c: float = 1.0, **kw) -> "BathParams":
        return cls(gamma_c=gamma_c, gamma_l=gamma_r * gamma_c, **kw)

    @property
    def n_c(self) -> float:
        return self.alpha_c / (1.0 - self.alpha_c)

    @property
    def n_l(self) -> float:
        return self.alpha_l / (1.0 - self.alpha_l)

    @property
    def gamma_r(self) -> float:
        return self.gamma_l / self.gamma_c if self.gamma_c else math.inf

    def replace(self, **kw) -> "BathParams":
        return replace(self, **kw)

    def rates(self) -> tuple[float, float, float, float]:
        """Effective (collective down, collective up, local down, local up) rates."""
        gc = self.eta * self.gamma_c
        gl = (1.0 - self.eta) * self.gamma_l
        return gc * (self.n_c + 1.0), gc * self.n_c, gl * (self.n_l + 1.0), gl * self.n_l

    @property
    def has_local(self) -> bool:
        _, _, ld, lu = self.rates()
        return ld > 0 or lu > 0


class SectorKind(enum.Enum):
    THERMALIZING = "thermalizing"
    LEAKING = "leaking"


@dataclass(frozen=True)
class BohrSector:
    """Block of coherences |j,m,sigma><j',m',sigma'| with m - m' = delta.

    ``sigma`` and ``sigma_p`` are None for sigma-unresolved enumeration;
    the generator never depends on them.
    """

    j2: int
    jp2: int
    delta: int
    sigma: int | None = None
    sigma_p: int | None = None

    def m2_values(self) -> np.ndarray:
        lo = max(-self.j2, -self.jp2 + 2 * self.delta)
        hi = min(self.j2, self.jp2 + 2 * self.delta)
        return np.arange(lo, hi + 1, 2)

    @property
    def dim(self) -> int:
        return min(self.j2 + 1, self.jp2 + 1) - max(abs(self.delta) - abs(self.j2 - self.jp2) // 2, 0)


def enumerate_bohr_sectors(n_qubits: int, resolve_sigma: bool = False) -> list[BohrSector]:
    cap = MAX_SIGMA_RESOLVED if resolve_sigma else MAX_UNRESOLVED
    if n_qubits < 1 or n_qubits > cap:
        raise ValueError(f"n_qubits={n_qubits} outside 1..{cap} for this enumeration")
    out = []
    js = spins(n_qubits)
    for j2 in js:
        for jp2 in js:
            dmax = (j2 + jp2) // 2
            for delta in range(-dmax, dmax + 1):
                if not resolve_sigma:
                    out.append(BohrSector(j2, jp2, delta))
                    continue
                for s in range(1, degeneracy(n_qubits, j2) + 1):
                    for sp_ in range(1, degeneracy(n_qubits, jp2) + 1):
                        out.append(BohrSector(j2, jp2, delta, s, sp_))
    return out


def classify_sector(sector: BohrSector) -> SectorKind:
    # symmetry rule only; numeric column sums can vanish at zero temperature
    if sector.j2 == sector.jp2 and sector.delta == 0:
        return SectorKind.THERMALIZING
    return SectorKind.LEAKING


@dataclass(frozen=True)
class SectorGenerator:
    """Tri-diagonal generator over m ascending.

    ``lower[l]`` feeds row l+1 from column l (upward jump), ``upper[l]``
    feeds row l from column l+1 (downward jump).
    """

    sector: BohrSector
    m2: np.ndarray
    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    gamma: float
    n: float

    @property
    def dim(self) -> int:
        return len(self.diag)

    @property
    def kind(self) -> SectorKind:
        return classify_sector(self.sector)

    def matrix(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def column_sums(self) -> np.ndarray:
        s = self.diag.copy()
        s[:-1] += self.lower
        s[1:] += self.upper
        return s

    def _a_factors(self):
        """A_m, A'_m', B_m, B'_m' at each row."""
        sec = self.sector
        a, b = ladder_arrays(sec.j2)
        ap, bp = ladder_arrays(sec.jp2)
        k = (self.m2 + sec.j2) // 2
        kp = (self.m2 - 2 * sec.delta + sec.jp2) // 2
        return a[k], ap[kp], b[k], bp[kp]


def build_sector_generator(sector: BohrSector, params: BathParams) -> SectorGenerator:
    if params.eta != 1.0:
        raise NotImplementedError("sector generators describe purely collective dissipation (eta = 1)")
    gamma, n = params.gamma_c, params.n_c
    m2 = sector.m2_values()
    if len(m2) == 0:
        raise ValueError(f"empty sector {sector}")
    probe = SectorGenerator(sector, m2, np.zeros(len(m2)), np.zeros(0), np.zeros(0), gamma, n)
    a, ap, b, bp = probe._a_factors()
    diag = -0.5 * gamma * (n * (b + bp) + (n + 1.0) * (a + ap))
    link = np.sqrt(b * bp)[:-1]
    return SectorGenerator(sector, m2, diag, gamma * n * link, gamma * (n + 1.0) * link, gamma, n)


class GershgorinBound(NamedTuple):
    gap: float
    thermalizing: bool


def gershgorin_gap(generator: SectorGenerator, params: BathParams | None = None) -> GershgorinBound:
    """Lower bound on the decay rate of a leaking sector from column discs."""
    if generator.kind is SectorKind.THERMALIZING:
        return GershgorinBound(0.0, True)
    gamma = generator.gamma if params is None else params.gamma_c
    n = generator.n if params is None else params.n_c
    a, ap, b, bp = generator._a_factors()
    down = 0.5 * (a + ap) - np.sqrt(a * ap)
    up = 0.5 * (b + bp) - np.sqrt(b * bp)
    cols = gamma * (n + 1.0) * down + gamma * n * up
    return GershgorinBound(float(max(cols.min(), 0.0)), False)


def lowering_operators(n_qubits: int) -> tuple[sp.csr_matrix, list[sp.csr_matrix]]:
    """Sparse J_- and the list of sigma_-^(i), qubit 1 = most significant bit."""
    dim = 1 << n_qubits
    idx = np.arange(dim)
    singles = []
    for i in range(n_qubits):
        mask = 1 << (n_qubits - 1 - i)
        src = idx[(idx & mask) != 0]
        singles.append(sp.csr_matrix((np.ones(len(src)), (src ^ mask, src)), shape=(dim, dim)))
    jm = sum(singles[1:], singles[0]).tocsr()
    return jm, singles


def excitation_numbers(n_qubits: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    return np.array([bin(x).count("1") for x in idx], dtype=float)


class FullLiouvillian:
    """Matrix-free mixed generator acting on dense 2^N x 2^N operators."""

    def __init__(self, n_qubits: int, params: BathParams,
                 rates: tuple[float, float, float, float] | None = None):
        if n_qubits < 1 or n_qubits > MAX_SCHUR:
            raise ValueError(f"full-space action is capped at N={MAX_SCHUR}, got {n_qubits}")
        self.n_qubits = n_qubits
        self.params = params
        self.dim = 1 << n_qubits
        jm, _ = lowering_operators(n_qubits)
        self._jm = jm
        self._jp = jm.T.tocsr()
        self._jpjm = (self._jp @ jm).tocsr()
        self._jmjp = (jm @ self._jp).tocsr()
        k = excitation_numbers(n_qubits)
        self._k = k
        idx = np.arange(self.dim)
        self._local = []
        for i in range(n_qubits):
            mask = 1 << (n_qubits - 1 - i)
            hi = idx[(idx & mask) != 0]
            self._local.append((hi, hi ^ mask))
        # (collective down, collective up, local down, local up)
        self.rates = tuple(rates) if rates is not None else params.rates()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        cd, cu, ld, lu = self.rates
        rho = np.asarray(rho)
        out = np.zeros_like(rho, dtype=np.result_type(rho.dtype, float))
        if cd:
            out += cd * (self._jm @ (self._jm @ rho.T).T
                         - 0.5 * (self._jpjm @ rho) - 0.5 * (self._jpjm @ rho.T).T)
        if cu:
            out += cu * (self._jp @ (self._jp @ rho.T).T
                         - 0.5 * (self._jmjp @ rho) - 0.5 * (self._jmjp @ rho.T).T)
        if ld or lu:
            k = self._k
            n = float(self.n_qubits)
            for hi, lo in self._local:
                if ld:
                    out[np.ix_(lo, lo)] += ld * rho[np.ix_(hi, hi)]
                if lu:
                    out[np.ix_(hi, hi)] += lu * rho[np.ix_(lo, lo)]
            # anticommutator terms summed over qubits: sum_i n_i = K
            out -= 0.5 * ld * (k[:, None] + k[None, :]) * rho
            out -= 0.5 * lu * ((n - k)[:, None] + (n - k)[None, :]) * rho
        return out

    __call__ = apply

    def as_linear_operator(self) -> LinearOperator:
        d = self.dim

        def mv(v):
            return self.apply(np.asarray(v).reshape(d, d)).ravel()

        return LinearOperator((d * d, d * d), matvec=mv, dtype=complex)


def build_full_liouvillian(n_qubits: int, params: BathParams) -> FullLiouvillian:
    return FullLiouvillian(n_qubits, params)


class DickeRateGenerator:
    """Rate matrix over total block populations P(j, m).

    ``states[i] = (j2, m2)`` ordered by j descending, m ascending.  Column
    sums vanish identically, so the total probability is conserved.
    """

    def __init__(self, n_qubits: int, params: BathParams):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = n_qubits
        self.params = params
        self.states = tuple((j2, m2) for j2 in spins(n_qubits) for m2 in range(-j2, j2 + 1, 2))
        self.index = {s: i for i, s in enumerate(self.states)}
        self.matrix = self._assemble().tocsr()

    @property
    def dim(self) -> int:
        return len(self.states)

    def _assemble(self) -> sp.coo_matrix:
        cd, cu, ld, lu = self.params.rates()
        half = self.n_qubits / 2.0
        rows, cols, vals = [], [], []

        def link(src, j2, m2, rate):
            if rate == 0.0:
                return
            dst = self.index.get((j2, m2))
            if dst is None:
                raise AssertionError(f"rate {rate} into missing state {(j2, m2)}")
            rows.append(dst)
            cols.append(src)
            vals.append(rate)

        for src, (j2, m2) in enumerate(self.states):
            j, m = j2 / 2.0, m2 / 2.0
            a = (j + m) * (j - m + 1)
            b = (j - m) * (j + m + 1)
            link(src, j2, m2 - 2, cd * a)
            link(src, j2, m2 + 2, cu * b)
            out = cd * a + cu * b + ld * (half + m) + lu * (half - m)
            if j2 > 0:
                same = (half + 1) / (2 * j * (j + 1))
                link(src, j2, m2 - 2, ld * same * a)
                link(src, j2, m2 + 2, lu * same * b)
                down_j = (j + 1 + half) / (2 * j * (2 * j + 1))
                link(src, j2 - 2, m2 - 2, ld * (j + m - 1) * (j + m) * down_j)
                link(src, j2 - 2, m2 + 2, lu * (j - m - 1) * (j - m) * down_j)
            up_j = (half - j) / (2 * (j + 1) * (2 * j + 1))
            link(src, j2 + 2, m2 - 2, ld * (j - m + 1) * (j - m + 2) * up_j)
            link(src, j2 + 2, m2 + 2, lu * (j + m + 1) * (j + m + 2) * up_j)
            rows.append(src)
            cols.append(src)
            vals.append(-out)
        n = self.dim
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n))

    def block_ranges(self) -> dict[int, slice]:
        out, start = {}, 0
        for j2 in spins(self.n_qubits):
            out[j2] = slice(start, start + j2 + 1)
            start += j2 + 1
        return out

    def stationary(self, p0: np.ndarray | None = None) -> np.ndarray:
        """Stationary populations.

        With a local channel the fixed point is unique and ``p0`` is
        ignored.  Without one, each spin block relaxes on its own ladder and
        keeps the weight it had in ``p0``.
        """
        cd, cu, ld, lu = self.params.rates()
        if ld > 0 or lu > 0:
            m = self.matrix.tolil()
            m[0, :] = 1.0
            rhs = np.zeros(self.dim)
            rhs[0] = 1.0
            p = sp.linalg.spsolve(m.tocsc(), rhs)
            p = np.clip(p, 0.0, None)
            return p / p.sum()
        if p0 is None:
            raise ValueError("without a local channel the fixed point depends on the initial populations")
        p0 = np.asarray(p0, dtype=float)
        if cd == 0 and cu == 0:
            return p0.copy()
        out = np.zeros_like(p0)
        alpha = cu / cd
        for j2, sl in self.block_ranges().items():
            out[sl] = p0[sl].sum() * geometric_ladder(j2, alpha)
        return out


def geometric_ladder(j2: int, alpha: float) -> np.ndarray:
    """tau_m proportional to alpha^{j+m}, normalized over m = -j..j."""
    k = np.arange(j2 + 1)
    if alpha == 0.0:
        t = (k == 0).astype(float)
    else:
        t = alpha ** k
    return t / t.sum()


def build_dicke_rate_generator(n_qubits: int, params: BathParams) -> DickeRateGenerator:
    return DickeRateGenerator(n_qubits, params)
