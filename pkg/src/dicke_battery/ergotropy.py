"""Energy, passive energy and ergotropy for H_B = sum_i sigma_+ sigma_- (omega = 1)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import unitary_group

from .liouville import BathParams, FullLiouvillian, excitation_numbers
from .steady import BlockState, FullState, collective_steady_state, project_to_blocks, steady_state_full
from .dicke import schur_transform

EIG_CUTOFF = 1e-14


@dataclass(frozen=True)
class EnergyLevels:
    n_qubits: int

    @property
    def levels(self) -> list[tuple[int, int]]:
        return [(k, math.comb(self.n_qubits, k)) for k in range(self.n_qubits + 1)]

    def slots(self) -> np.ndarray:
        """Every eigenvalue of H_B, ascending (only for small N)."""
        return np.repeat(np.arange(self.n_qubits + 1, dtype=float),
                         [c for _, c in self.levels])


class ErgotropyReport(NamedTuple):
    energy: float
    passive_energy: float
    ergotropy: float

    @property
    def residual(self) -> float:
        return self.energy - self.ergotropy


def energy(state: BlockState | FullState) -> float:
    if isinstance(state, BlockState):
        return state.energy()
    k = excitation_numbers(state.n_qubits)
    return float(np.real(np.diag(state.matrix)) @ k)


def passive_energy_from_multiset(values, multiplicities, n_qubits: int) -> float:
    """Fill energy slots from the bottom with eigenvalues in descending order.

    ``multiplicities`` may be huge integers; the merge walks level by level
    so nothing of size 2^N is ever allocated.
    """
    vals = np.asarray(values, dtype=float)
    order = np.argsort(-vals, kind="stable")
    total = 0.0
    level, room = 0, 1  # C(N, 0)
    for i in order:
        v = vals[i]
        left = int(multiplicities[i])
        if v <= 0.0:
            break
        while left > 0:
            take = min(left, room)
            total += v * take * level
            left -= take
            room -= take
            if room == 0:
                level += 1
                if level > n_qubits:
                    if left:
                        raise ValueError("more eigenvalues than Hilbert-space dimension")
                    break
                room = math.comb(n_qubits, level)
    return total


def ergotropy(state: BlockState | FullState) -> ErgotropyReport:
    e = energy(state)
    n = state.n_qubits
    if isinstance(state, BlockState):
        spec = state.spectrum()
        vals = np.array([s[0] for s in spec])
        mult = [s[2] for s in spec]
    else:
        vals = np.linalg.eigvalsh(state.matrix)
        mult = [1] * len(vals)
    vals = np.where(np.abs(vals) < EIG_CUTOFF, 0.0, vals)
    ep = passive_energy_from_multiset(vals, mult, n)
    w = e - ep
    if -1e-12 < w < 0.0:
        w = 0.0
    return ErgotropyReport(float(e), float(ep), float(w))


def _check_alpha(alpha_c: float, allow_limits: bool) -> None:
    if allow_limits:
        if not 0.0 <= alpha_c <= 1.0:
            raise ValueError(f"alpha_c must lie in [0, 1], got {alpha_c}")
    elif not 0.0 < alpha_c < 1.0:
        raise ValueError(f"alpha_c must lie in (0, 1), got {alpha_c}; pass allow_limits=True for the endpoints")


def ergotropy_closed_form(n_qubits: int, alpha_c: float, allow_limits: bool = False) -> float:
    """Ergotropy of the collective steady state reached from the ground state."""
    _check_alpha(alpha_c, allow_limits)
    n = n_qubits
    if alpha_c == 0.0:
        return 0.0
    if alpha_c == 1.0:
        return infinite_temperature_ergotropy(n)
    a = alpha_c
    return n + a / (1.0 - a) + (n + a) / (a ** (n + 1) - 1.0)


def infinite_temperature_ergotropy(n_qubits: int) -> float:
    return n_qubits / 2.0 + 1.0 / (n_qubits + 1.0) - 1.0


def energy_closed_form(n_qubits: int, alpha_c: float, allow_limits: bool = False) -> float:
    _check_alpha(alpha_c, allow_limits)
    n = n_qubits
    if alpha_c == 0.0:
        return 0.0
    if alpha_c == 1.0:
        return n / 2.0
    a = alpha_c
    return n + 1.0 / (1.0 - a) + (n + 1.0) / (a ** (n + 1) - 1.0)


def ground_population_closed_form(n_qubits: int, alpha_c: float) -> float:
    if alpha_c == 1.0:
        return 1.0 / (n_qubits + 1)
    return (1.0 - alpha_c) / (1.0 - alpha_c ** (n_qubits + 1))


def inversion_ratios(n_qubits: int, alpha_c: float, q: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Population ratios for the product-Gibbs-initialized collective steady state.

    Returns ``(m, up, down)`` where ``up[i] = s(m+1)/n_s(m)`` and
    ``down[i] = s(m-1)/n_s(m)``: s(k) is the population of a symmetric state
    with k excitations and n_s(m) that of the lowest state of the spin
    block whose ladder starts at m excitations.  A ratio above one is a
    population inversion that a unitary can exploit.
    """
    n = n_qubits
    m = np.arange(1, n // 2 + 1, dtype=float)
    a, qq = alpha_c, q
    num = (1.0 - qq ** (n + 1)) * (a ** m - a ** (n + 1 - m))
    den = (qq ** m - qq ** (n + 1 - m)) * (1.0 - a ** (n + 1))
    base = num / den
    return m, a * base, base / a


def inversion_onset(alpha_c: float, q: float) -> float:
    """Large-N threshold m* above which s(m+1) > n_s(m), for alpha_c > q."""
    if not alpha_c > q:
        return math.inf
    return math.log(1.0 / alpha_c) / math.log(alpha_c / q)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary (QR of a complex Ginibre matrix, phases fixed)."""
    return unitary_group.rvs(dim, random_state=rng)


class BalanceReport(NamedTuple):
    delta_w: float
    delta_w_direct: float
    prep_cost: float
    w_rotated: float
    w_unrotated: float
    w_initial: float


def _steady_ergotropy(state: FullState, params: BathParams, transform) -> float:
    if params.has_local:
        ss = steady_state_full(FullLiouvillian(state.n_qubits, params), state)
        return ergotropy(ss).ergotropy
    cd, cu, _, _ = params.rates()
    if cd == 0:
        return ergotropy(state).ergotropy
    return ergotropy(collective_steady_state(project_to_blocks(state, transform), cu / cd)).ergotropy


def ergotropic_balance(q: float, unitary: np.ndarray, params: BathParams) -> BalanceReport:
    """Net gain of rotating the product Gibbs state before charging.

    ``delta_w`` = [W(steady | U rho_q U^dag) - prep cost] - W(steady | rho_q);
    ``delta_w_direct`` = W(steady | U rho_q U^dag) - W(U rho_q U^dag).
    """
    u = np.asarray(unitary, dtype=complex)
    d = u.shape[0]
    n = d.bit_length() - 1
    if u.shape != (d, d) or (1 << n) != d:
        raise ValueError("unitary must be square with a power-of-two dimension")
    if n > 6:
        raise ValueError("balance study is capped at N=6")
    if np.abs(u.conj().T @ u - np.eye(d)).max() > 1e-10:
        raise ValueError("matrix is not unitary")
    rho_q = FullState.product_gibbs(n, q)
    rotated = FullState(u @ rho_q.matrix @ u.conj().T, validate=False)
    t = schur_transform(n)
    w_rot = _steady_ergotropy(rotated, params, t)
    w_unrot = _steady_ergotropy(rho_q, params, t)
    cost = energy(rotated) - energy(rho_q)
    w0 = ergotropy(rotated).ergotropy
    return BalanceReport(w_rot - cost - w_unrot, w_rot - w0, cost, w_rot, w_unrot, w0)


def steady_ergotropy(n_qubits: int, params: BathParams, initial: BlockState | None = None) -> ErgotropyReport:
    """Ergotropy of the long-time state for permutation-invariant dynamics.

    With a local channel the fixed point is unique and ``initial`` is
    ignored; otherwise ``initial`` (default: ground state) fixes the block
    weights.
    """
    from .liouville import DickeRateGenerator

    gen = DickeRateGenerator(n_qubits, params)
    if params.has_local:
        p = gen.stationary()
        return ergotropy(BlockState.from_dicke_populations(n_qubits, gen, p))
    if initial is None:
        from .dicke import product_gibbs_sector_weights

        initial = product_gibbs_sector_weights(n_qubits, 0.0)
    cd, cu, _, _ = params.rates()
    if cd == 0:
        if isinstance(initial, BlockState):
            return ergotropy(initial)
        raise ValueError("with no dissipation the initial ladders are needed; pass a BlockState")
    return ergotropy(collective_steady_state(initial, cu / cd, n_qubits))
