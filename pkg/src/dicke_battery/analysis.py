"""Diagnostics: bright-sector leakage, Jensen bounds, lobe extraction, collectivity kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dicke import dicke_states
from .liouville import BathParams, FullLiouvillian, excitation_numbers
from .steady import FullState


@dataclass(frozen=True)
class LeakageReport:
    p_sym: float
    mean_K: float
    mean_K2: float
    mean_H: float
    mean_H2: float
    lambda_formula: float
    lambda_numeric: float
    degenerate: bool = False


def bright_projector(n_qubits: int) -> np.ndarray:
    v = dicke_states(n_qubits)
    return v @ v.T


def _bright_moments(state: FullState):
    n = state.n_qubits
    v = dicke_states(n)
    block = v.T @ state.matrix @ v  # bright block in the Dicke basis, k = 0..N
    p = float(np.trace(block).real)
    if p < 1e-12:
        return p, None
    pops = np.diag(block).real / p
    k = np.arange(n + 1, dtype=float)
    return p, (pops @ k, pops @ k**2, pops @ (n - k), pops @ (n - k) ** 2)


def _propagate_taylor(liouvillian: FullLiouvillian, rho: np.ndarray, t: float, terms: int = 30) -> np.ndarray:
    out = rho.astype(complex)
    term = out.copy()
    for i in range(1, terms):
        term = liouvillian.apply(term) * (t / i)
        out = out + term
        if np.abs(term).max() < 1e-18:
            break
    return out


def leakage_functional(state: FullState, params: BathParams, h: float | None = None) -> LeakageReport:
    """Rate of bright-sector weight loss: closed form and -dp_sym/dt.

    The closed form counts only jumps out of the bright sector, so it is
    exact for states supported on the bright sector and a lower bound on
    the outflow otherwise (inflow from other blocks is not included).
    """
    n = state.n_qubits
    p, mom = _bright_moments(state)
    liou = FullLiouvillian(n, params)
    proj = bright_projector(n)
    rates = [r for r in liou.rates if r > 0]
    scale = max(rates) * n * n if rates else 1.0
    step = h if h is not None else 1e-4 / scale

    def p_at(t):
        return float(np.trace(proj @ _propagate_taylor(liou, state.matrix, t)).real)

    def central(hh):
        return (p_at(hh) - p_at(-hh)) / (2 * hh)

    numeric = -(4 * central(step / 2) - central(step)) / 3
    if mom is None:
        return LeakageReport(p, math.nan, math.nan, math.nan, math.nan, 0.0, numeric, True)
    mk, mk2, mh, mh2 = mom
    formula = ((1.0 - params.eta) * p * params.gamma_l / n
               * ((params.n_l + 1.0) * (mk2 - mk) + params.n_l * (mh2 - mh)))
    return LeakageReport(p, mk, mk2, mh, mh2, formula, numeric)


def _local_term_on_bright(state: FullState, lowering: bool) -> tuple[float, float]:
    n = state.n_qubits
    rates = (0.0, 0.0, 1.0, 0.0) if lowering else (0.0, 0.0, 0.0, 1.0)
    liou = FullLiouvillian(n, BathParams(), rates)
    direct = float(np.trace(bright_projector(n) @ liou.apply(state.matrix)).real)
    p, mom = _bright_moments(state)
    if mom is None:
        return direct, 0.0
    mk, mk2, mh, mh2 = mom
    formula = -p / n * ((mk2 - mk) if lowering else (mh2 - mh))
    return direct, formula


def lowering_leakage(state: FullState) -> tuple[float, float]:
    """d p_sym/dt from sum_i D[sigma_-^i] at unit rate: (direct, moment formula)."""
    return _local_term_on_bright(state, True)


def raising_leakage(state: FullState) -> tuple[float, float]:
    """d p_sym/dt from sum_i D[sigma_+^i] at unit rate: (direct, moment formula)."""
    return _local_term_on_bright(state, False)


class JensenCheck(NamedTuple):
    lhs: tuple[float, float]
    rhs: tuple[float, float]
    holds: bool


def jensen_bound_check(state: FullState, tol: float = 1e-12) -> JensenCheck:
    """<K(K-1)> >= <K>(<K>-1) and the hole analogue, on the bright component."""
    p, mom = _bright_moments(state)
    if mom is None:
        raise ValueError("state has no weight on the bright sector")
    mk, mk2, mh, mh2 = mom
    lhs = (mk2 - mk, mh2 - mh)
    rhs = (mk * (mk - 1), mh * (mh - 1))
    return JensenCheck(lhs, rhs, lhs[0] >= rhs[0] - tol and lhs[1] >= rhs[1] - tol)


def free_space_kernel(x: float, alpha_angle: float) -> float:
    """Normalized cross-decay rate of two dipoles a distance x = k0 r apart.

    ``alpha_angle`` is the angle between the dipole moment and the
    separation vector.
    """
    if x <= 0:
        raise ValueError("x must be positive; the x -> 0 limit is 1")
    c2 = math.cos(alpha_angle) ** 2
    if x < 1e-3:
        radial = -1.0 / 3.0 + x * x / 30.0  # series of cos x/x^2 - sin x/x^3
        sinc = 1.0 - x * x / 6.0
    else:
        radial = math.cos(x) / x**2 - math.sin(x) / x**3
        sinc = math.sin(x) / x
    return 1.5 * ((1.0 - 3.0 * c2) * radial + (1.0 - c2) * sinc)


@dataclass(frozen=True)
class LobeDescriptor:
    interior: bool
    alpha_c_star: float
    alpha_l_star: float
    w_max: float
    width_alpha_c: float
    width_alpha_l: float
    empty: bool = False


def _half_width(axis: np.ndarray, values: np.ndarray, i: int) -> float:
    half = 0.5 * values[i]

    def walk(step):
        j = i
        while 0 <= j + step < len(values) and values[j + step] >= half:
            j += step
        if not 0 <= j + step < len(values):
            return axis[j]
        a, b = values[j], values[j + step]
        return axis[j] + (axis[j + step] - axis[j]) * (a - half) / (a - b)

    return float(walk(1) - walk(-1))


def activation_lobe(alpha_c, alpha_l, w) -> LobeDescriptor:
    """Argmax and half-maximum widths of an ergotropy grid w[i_c, i_l]."""
    ac = np.asarray(alpha_c, dtype=float)
    al = np.asarray(alpha_l, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape != (len(ac), len(al)) or min(w.shape) < 5:
        raise ValueError("need a rectangular grid of at least 5 x 5 matching the axes")
    if not np.any(w > 0):
        return LobeDescriptor(False, math.nan, math.nan, 0.0, 0.0, 0.0, True)
    i, j = np.unravel_index(int(np.argmax(w)), w.shape)
    interior = bool(0 < i < len(ac) - 1 and 0 < j < len(al) - 1)
    return LobeDescriptor(interior, float(ac[i]), float(al[j]), float(w[i, j]),
                          _half_width(ac, w[:, j], i), _half_width(al, w[i, :], j))
