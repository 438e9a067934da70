"""Irrep bookkeeping for N spin-1/2 systems.

Total spin is stored as the integer ``j2 = 2j`` so that sector keys stay
exact for half-integer spins.  Basis conventions used throughout the
package:

* computational states are bit strings with qubit 1 as the most
  significant bit, and ``|1>`` is the excited level;
* the extended Dicke basis |j, m, sigma> is built by Clebsch-Gordan
  coupling, adding each new qubit on the left of the existing register;
* copies of a given j are numbered (sigma = 1, 2, ...) in the order
  they are produced, parents visited by decreasing spin.

With these choices the two-qubit singlet is (|01> - |10>)/sqrt(2) and
the three-qubit j=1/2 copies are

    sigma=1: (|001>+|010>-2|100>)/sqrt(6), (2|011>-|101>-|110>)/sqrt(6)
    sigma=2: (|001>-|010>)/sqrt(2),        (|101>-|110>)/sqrt(2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MAX_ENUMERATE = 64
MAX_SCHUR = 12
MAX_WEIGHTS = 1000


def _check_n(n_qubits: int, cap: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or n_qubits < 1:
        raise ValueError(f"n_qubits must be a positive integer, got {n_qubits!r}")
    if n_qubits > cap:
        raise ValueError(f"n_qubits={n_qubits} exceeds the cap of {cap}")


def to_j2(j) -> int:
    """Return 2j as an int, rejecting anything that is not a half-integer >= 0."""
    two_j = Fraction(j) * 2
    if two_j.denominator != 1 or two_j < 0:
        raise ValueError(f"spin must be a nonnegative half-integer, got {j!r}")
    return int(two_j)


def degeneracy(n_qubits: int, j2: int) -> int:
    """Exact multiplicity nu_j = C(N, N/2-j) - C(N, N/2-j-1)."""
    if j2 < 0 or j2 > n_qubits or (n_qubits - j2) % 2:
        return 0
    k = (n_qubits - j2) // 2
    return math.comb(n_qubits, k) - (math.comb(n_qubits, k - 1) if k >= 1 else 0)


def spins(n_qubits: int) -> list[int]:
    """Admissible 2j values, largest first."""
    return list(range(n_qubits, -1, -2))


def enumerate_sectors(n_qubits: int) -> list[tuple[Fraction, int]]:
    """All total spins j for ``n_qubits`` qubits with their multiplicities."""
    _check_n(n_qubits, MAX_ENUMERATE)
    return [(Fraction(j2, 2), degeneracy(n_qubits, j2)) for j2 in spins(n_qubits)]


@dataclass(frozen=True)
class SectorLabel:
    j2: int
    sigma: int

    @property
    def j(self) -> Fraction:
        return Fraction(self.j2, 2)


@dataclass(frozen=True)
class LadderCoefficients:
    """Squared ladder matrix elements over m = -j..j.

    ``a[m]`` is |<m-1|J_-|m>|^2 = (j+m)(j-m+1) and ``b[m]`` is
    |<m+1|J_+|m>|^2 = (j-m)(j+m+1).
    """

    j2: int
    a: np.ndarray
    b: np.ndarray

    @property
    def m(self) -> np.ndarray:
        return np.arange(-self.j2, self.j2 + 1, 2) / 2.0


def ladder_arrays(j2: int) -> tuple[np.ndarray, np.ndarray]:
    # (j+m) and (j-m) are integers, so work with k = j+m directly
    k = np.arange(j2 + 1, dtype=float)
    a = k * (j2 - k + 1)
    b = (j2 - k) * (k + 1)
    return a, b


def ladder_coefficients(j) -> LadderCoefficients:
    j2 = to_j2(j)
    a, b = ladder_arrays(j2)
    return LadderCoefficients(j2, a, b)


@dataclass(frozen=True)
class SchurTransform:
    """Unitary whose columns are the ordered |j, m, sigma> states.

    ``ordering[i] = (j2, sigma, m2)`` labels column i; blocks appear with
    j descending, sigma ascending and m ascending inside each block.
    """

    n_qubits: int
    matrix: np.ndarray
    ordering: tuple[tuple[int, int, int], ...]

    def columns(self, j2: int, sigma: int) -> np.ndarray:
        idx = [i for i, (a, s, _) in enumerate(self.ordering) if a == j2 and s == sigma]
        return self.matrix[:, idx]

    def block_slices(self) -> dict[tuple[int, int], slice]:
        out: dict[tuple[int, int], slice] = {}
        start = 0
        for i, (j2, s, _) in enumerate(self.ordering):
            if (j2, s) not in out:
                start = i
            out[(j2, s)] = slice(start, i + 1)
        return out


def _irrep_copies(n_qubits: int) -> dict[int, list[list[np.ndarray]]]:
    """Map 2j -> list of copies; each copy lists its vectors by ascending m."""
    ground = np.array([1.0, 0.0])
    excited = np.array([0.0, 1.0])
    current = {1: [[ground, excited]]}
    for _ in range(1, n_qubits):
        nxt: dict[int, list[list[np.ndarray]]] = {}
        for j2 in sorted(current, reverse=True):
            for copy in current[j2]:
                for big2 in (j2 + 1, j2 - 1):
                    if big2 < 0:
                        continue
                    vecs = []
                    for mm2 in range(-big2, big2 + 1, 2):
                        v = 0.0
                        for s2, e in ((1, excited), (-1, ground)):
                            m2 = mm2 - s2
                            if abs(m2) > j2:
                                continue
                            # new qubit sits to the left: |s> (x) |j, m>
                            if big2 == j2 + 1:
                                c = math.sqrt((j2 + s2 * mm2 + 1) / (2 * (j2 + 1)))
                            else:
                                c = -s2 * math.sqrt((j2 - s2 * mm2 + 1) / (2 * (j2 + 1)))
                            v = v + c * np.kron(e, copy[(m2 + j2) // 2])
                        vecs.append(v)
                    nxt.setdefault(big2, []).append(vecs)
        current = nxt
    return current


def schur_transform(n_qubits: int) -> SchurTransform:
    _check_n(n_qubits, MAX_SCHUR)
    copies = _irrep_copies(n_qubits)
    cols, ordering = [], []
    for j2 in sorted(copies, reverse=True):
        for sigma, copy in enumerate(copies[j2], start=1):
            for i, v in enumerate(copy):
                cols.append(v)
                ordering.append((j2, sigma, 2 * i - j2))
    return SchurTransform(n_qubits, np.column_stack(cols), tuple(ordering))


@dataclass(frozen=True)
class Chi:
    """Degeneracy-space operator chi_j of one spin sector.

    Either an explicit ``nu x nu`` matrix, or ``scale * identity`` when
    ``matrix`` is None (the only form that stays cheap for large N).
    Convention: (chi_j)[s, s'] = sum_m <j,m,s|rho|j,m,s'>.
    """

    j2: int
    nu: int
    matrix: np.ndarray | None = None
    scale: float = 0.0

    @property
    def j(self) -> Fraction:
        return Fraction(self.j2, 2)

    @property
    def trace(self) -> float:
        if self.matrix is None:
            return float(self.scale * self.nu)
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> list[tuple[float, int]]:
        """(value, multiplicity) pairs."""
        if self.matrix is None:
            return [(float(self.scale), self.nu)] if self.nu else []
        w = np.linalg.eigvalsh(self.matrix)
        return [(float(x), 1) for x in w]

    def dense(self) -> np.ndarray:
        if self.matrix is not None:
            return np.asarray(self.matrix)
        if self.nu > 4096:
            raise MemoryError(f"refusing to materialize a {self.nu}x{self.nu} identity block")
        return self.scale * np.eye(self.nu)


def product_gibbs_sector_weights(n_qubits: int, q: float) -> list[Chi]:
    """Spin-sector weights of the product state rho_q^{(x)N}.

    Each |j,m,sigma> carries q^{N/2+m}/(1+q)^N, so chi_j is a multiple of
    the identity and its trace is nu_j * sum_m q^{N/2+m} / (1+q)^N.
    """
    _check_n(n_qubits, MAX_WEIGHTS)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    out = []
    logz = n_qubits * math.log1p(q)
    for j2 in spins(n_qubits):
        nu = degeneracy(n_qubits, j2)
        kmin = (n_qubits - j2) // 2
        if q == 0.0:
            per_state = 1.0 if kmin == 0 else 0.0
        else:
            ks = np.arange(kmin, kmin + j2 + 1)
            per_state = float(np.exp(ks * math.log(q) - logz).sum())
        out.append(Chi(j2, nu, None, per_state))
    return out


def dicke_states(n_qubits: int) -> np.ndarray:
    """Columns |N/2, k - N/2>: normalized uniform superpositions with k excitations."""
    _check_n(n_qubits, MAX_SCHUR)
    idx = np.arange(1 << n_qubits)
    k = np.array([bin(x).count("1") for x in idx])
    out = np.zeros((1 << n_qubits, n_qubits + 1))
    for kk in range(n_qubits + 1):
        sel = k == kk
        out[sel, kk] = 1.0 / math.sqrt(sel.sum())
    return out
