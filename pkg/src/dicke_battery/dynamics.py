"""Transient charging curves."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .dicke import dicke_states, product_gibbs_sector_weights
from .ergotropy import ErgotropyReport, ergotropy, steady_ergotropy
from .liouville import BathParams, DickeRateGenerator, FullLiouvillian, SectorGenerator
from .steady import Block, BlockState, FullState

EXPM_MAX_DIM = 64


class StiffnessError(RuntimeError):
    """Integrator gave up; ``partial`` holds the samples computed so far."""

    def __init__(self, message: str, partial: "Trajectory"):
        super().__init__(f"{message}; try a smaller gamma ratio or a shorter time window")
        self.partial = partial


@dataclass
class Trajectory:
    times: np.ndarray
    samples: list[ErgotropyReport]
    p_sym: np.ndarray | None = None
    gamma_c: float = 1.0
    failure: str | None = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def ergotropy(self) -> np.ndarray:
        return np.array([s.ergotropy for s in self.samples])

    @property
    def energy(self) -> np.ndarray:
        return np.array([s.energy for s in self.samples])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "gamma_c_t", "energy", "ergotropy", "p_sym"])
        for i, s in enumerate(self.samples):
            p = self.p_sym[i] if self.p_sym is not None else math.nan
            t = self.times[i]
            w.writerow([f"{x:.17g}" for x in (t, self.gamma_c * t, s.energy, s.ergotropy, p)])
        if self.failure:
            w.writerow([f"# failed: {self.failure}"])
        return buf.getvalue()


def _check_grid(time_grid) -> np.ndarray:
    t = np.asarray(time_grid, dtype=float).ravel()
    if len(t) > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if len(t) and t[0] < 0:
        raise ValueError("time grid must start at t >= 0")
    return t


def evolve_sector(generator: SectorGenerator, p0, t: float) -> np.ndarray:
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (generator.dim,):
        raise ValueError(f"p0 has shape {p0.shape}, sector dimension is {generator.dim}")
    if t == 0:
        return p0.copy()
    m = generator.matrix()
    if generator.dim <= EXPM_MAX_DIM:
        return sla.expm(m * t) @ p0
    sol = solve_ivp(lambda _, y: m @ y, (0.0, t), p0, method="LSODA", jac=lambda *_: m,
                    rtol=1e-10, atol=1e-13)
    return sol.y[:, -1]


def propagate_rates(matrix, p0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Rows p(t_i) = exp(M t_i) p0 for a (sparse or dense) rate matrix."""
    m = matrix.toarray() if hasattr(matrix, "toarray") else np.asarray(matrix)
    out = np.empty((len(times), len(p0)))
    cache: dict[float, np.ndarray] = {}
    p, last = np.asarray(p0, dtype=float), 0.0
    for i, t in enumerate(times):
        dt = t - last
        if dt > 0:
            key = round(dt, 12)
            if key not in cache:
                cache[key] = sla.expm(m * dt)
            p = cache[key] @ p
        out[i] = p
        last = t
    return out


def _is_isotropic(state: BlockState) -> bool:
    return all(b.chi.matrix is None for b in state.blocks)


def evolve_symmetric(state: BlockState, params: BathParams, time_grid) -> Trajectory:
    """Evolution of a block state on total (j, m) populations.

    Without a local channel chi_j is untouched and only the ladders move,
    so any block state is allowed.  With one, chi_j must be a multiple of
    the identity (permutation-invariant input).
    """
    t = _check_grid(time_grid)
    n = state.n_qubits
    gen = DickeRateGenerator(n, params)
    if params.has_local and not _is_isotropic(state):
        raise ValueError("local noise mixes degeneracy labels; pass a permutation-invariant state")
    p0 = state.dicke_populations(gen)
    path = propagate_rates(gen.matrix, p0, t)
    samples, psym = [], []
    ranges = gen.block_ranges()
    for p in path:
        if params.has_local:
            s = BlockState.from_dicke_populations(n, gen, p, validate=False)
        else:
            blocks = []
            for b in state.blocks:
                seg = np.clip(p[ranges[b.j2]], 0.0, None)
                w = seg.sum()
                blocks.append(Block(b.chi, seg / w if w > 0 else b.ladder))
            s = BlockState(n, tuple(blocks), validate=False)
        samples.append(ergotropy(s))
        psym.append(p[ranges[n]].sum())
    return Trajectory(t, samples, np.array(psym), params.gamma_c)


def evolve_full(rho0: FullState | BlockState, liouvillian: FullLiouvillian, time_grid,
                rtol: float = 1e-8, atol: float = 1e-10, method: str = "RK45",
                symmetric_fast_path: bool = True) -> Trajectory:
    """Sample energy, ergotropy and bright weight along rho(t) = exp(L t) rho0.

    A ``BlockState`` input is routed to the population backend; a
    ``FullState`` is integrated in the full 2^N x 2^N space with no trace
    renormalization.
    """
    if isinstance(rho0, BlockState):
        if not symmetric_fast_path:
            rho0 = rho0.to_full()
        else:
            return evolve_symmetric(rho0, liouvillian.params, time_grid)
    t = _check_grid(time_grid)
    d = liouvillian.dim
    if rho0.dim != d:
        raise ValueError("state and generator dimensions differ")
    bright = dicke_states(liouvillian.n_qubits)
    gamma_c = liouvillian.params.gamma_c

    def sample(mat):
        st = FullState(0.5 * (mat + mat.conj().T), validate=False)
        return ergotropy(st), float(np.trace(bright.T @ mat @ bright).real)

    if len(t) == 0:
        return Trajectory(t, [], np.zeros(0), gamma_c)
    y0 = rho0.matrix.astype(complex).ravel().view(float).copy()

    def rhs(_, y):
        return liouvillian.apply(y.view(complex).reshape(d, d)).ravel().view(float)

    if t[-1] == t[0]:
        states = [rho0.matrix]
        ok, message = True, ""
    else:
        sol = solve_ivp(rhs, (t[0], t[-1]), y0, method=method, t_eval=t, rtol=rtol, atol=atol)
        states = [sol.y[:, i].copy().view(complex).reshape(d, d) for i in range(sol.y.shape[1])]
        ok, message = sol.success, sol.message
    reports, ps = zip(*(sample(m) for m in states)) if states else ((), ())
    traj = Trajectory(t[: len(states)], list(reports), np.array(ps), gamma_c)
    if not ok:
        traj.failure = message
        raise StiffnessError(message, traj)
    return traj


def ground_block_state(n_qubits: int) -> BlockState:
    weights = product_gibbs_sector_weights(n_qubits, 0.0)
    from .liouville import geometric_ladder

    return BlockState(n_qubits, tuple(Block(c, geometric_ladder(c.j2, 0.0)) for c in weights))


def product_gibbs_block_state(n_qubits: int, q: float) -> BlockState:
    """rho_q^{(x)N} as a block state; ladders are q-geometric inside each block."""
    from .liouville import geometric_ladder

    weights = product_gibbs_sector_weights(n_qubits, q)
    return BlockState(n_qubits, tuple(Block(c, geometric_ladder(c.j2, q)) for c in weights))


def early_time_collapse_check(n_qubits: int, params_list: Sequence[BathParams], x_max: float,
                              n_points: int = 51) -> float:
    """Largest pairwise gap between ergotropy curves for gamma_c t <= x_max."""
    if not params_list:
        return 0.0
    ref = params_list[0]
    for p in params_list[1:]:
        if (p.eta, p.alpha_c, p.gamma_c) != (ref.eta, ref.alpha_c, ref.gamma_c):
            raise ValueError("curves must share eta, alpha_c and gamma_c")
    if any(p.alpha_l != 0.0 for p in params_list):
        raise ValueError("early-time comparison assumes alpha_l = 0")
    if x_max <= 0:
        return 0.0
    times = np.linspace(0.0, x_max / ref.gamma_c, n_points)
    start = ground_block_state(n_qubits)
    curves = [evolve_symmetric(start, p, times).ergotropy for p in params_list]
    return float(max(np.abs(a - b).max() for a in curves for b in curves))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-5) -> tuple[float, float]:
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def locate_optimal_alpha_c(n_qubits: int, params: BathParams, lo: float = 0.01, hi: float = 0.99,
                           tol: float = 1e-5) -> tuple[float, float]:
    """alpha_c maximizing the steady ergotropy with the other parameters fixed."""
    return golden_section_max(
        lambda a: steady_ergotropy(n_qubits, params.replace(alpha_c=a)).ergotropy, lo, hi, tol)
