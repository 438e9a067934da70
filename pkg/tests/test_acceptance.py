"""End-to-end acceptance checks, one test per criterion."""

import time

import mpmath
import numpy as np
import pytest
import scipy.linalg as sla

from conftest import random_state, trace_distance
from dicke_battery.analysis import activation_lobe, jensen_bound_check, leakage_functional
from dicke_battery.dicke import degeneracy, dicke_states, product_gibbs_sector_weights, schur_transform
from dicke_battery.dynamics import (
    evolve_full,
    evolve_sector,
    evolve_symmetric,
    ground_block_state,
    locate_optimal_alpha_c,
)
from dicke_battery.ergotropy import (
    ergotropic_balance,
    ergotropy,
    ergotropy_closed_form,
    haar_unitary,
    infinite_temperature_ergotropy,
    steady_ergotropy,
)
from dicke_battery.liouville import (
    BathParams,
    DickeRateGenerator,
    FullLiouvillian,
    SectorKind,
    build_sector_generator,
    enumerate_bohr_sectors,
    gershgorin_gap,
)
from dicke_battery.oracle import assemble_dense_superoperator, random_density_matrix
from dicke_battery.steady import BlockState, FullState, collective_steady_state, project_to_blocks, steady_state_full

ALPHAS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


def vec(m):
    return m.reshape(-1, order="F")


def unvec(v, d):
    return v.reshape(d, d, order="F")


def test_closed_form_ergotropy():
    start = time.perf_counter()
    worst = 0.0
    for n in range(2, 27):
        weights = product_gibbs_sector_weights(n, 0.0)
        for a in ALPHAS:
            w = ergotropy(collective_steady_state(weights, a, n)).ergotropy
            ref = ergotropy_closed_form(n, a)
            worst = max(worst, abs(w - ref) / abs(ref))
    assert worst < 1e-9
    assert time.perf_counter() - start < 5.0


def test_infinite_temperature_limit():
    with mpmath.workdps(120):
        a = mpmath.mpf(1) - mpmath.mpf(10) ** -40
        for n in range(1, 201):
            limit = n + a / (1 - a) + (n + a) / (a ** (n + 1) - 1)
            exact = mpmath.mpf(n) / 2 + mpmath.mpf(1) / (n + 1) - 1
            assert abs(limit - exact) < 1e-9
            assert abs(float(exact) - infinite_temperature_ergotropy(n)) < 1e-9
            assert ergotropy_closed_form(n, 1.0, allow_limits=True) == infinite_temperature_ergotropy(n)


def _two_qubit_reference(r, a):
    z = r.diagonal().real.sum()
    p1, p2 = r[:3, :3].trace().real / z, r[3, 3].real / z
    return np.diag([p1, a * p1, a * a * p1, p2]) / np.array([1 + a + a * a] * 3 + [1.0])


def _three_qubit_reference(r, a):
    z = r.diagonal().real.sum()
    p1 = r[:4, :4].trace().real / z
    p2 = (r[4, 4] + r[5, 5]).real / z
    p3 = (r[6, 6] + r[7, 7]).real / z
    c2 = (r[4, 6] + r[5, 7]) / z
    out = np.zeros((8, 8), dtype=complex)
    out[:4, :4] = np.diag(p1 * a ** np.arange(4)) / (1 + a + a * a + a ** 3)
    k = 1 + a
    out[4, 4], out[5, 5] = p2 / k, a * p2 / k
    out[6, 6], out[7, 7] = p3 / k, a * p3 / k
    out[4, 6], out[5, 7] = c2 / k, a * c2 / k
    out[6, 4], out[7, 5] = np.conj(c2) / k, a * np.conj(c2) / k
    return out


def test_small_system_analytic_steady_states(rng):
    start = time.perf_counter()
    for n, ref in ((2, _two_qubit_reference), (3, _three_qubit_reference)):
        t = schur_transform(n)
        u = t.matrix
        for _ in range(50):
            a = rng.uniform(0.05, 0.95)
            rho0 = random_state(n, rng)
            r0 = u.T @ rho0.matrix @ u
            ss = collective_steady_state(project_to_blocks(rho0, t), a).to_full(t)
            assert np.abs(u.T @ ss.matrix @ u - ref(r0, a)).max() < 1e-9
            liou = FullLiouvillian(n, BathParams(gamma_c=1.0, alpha_c=a))
            solved = steady_state_full(liou, rho0)
            assert np.abs(u.T @ solved.matrix @ u - ref(r0, a)).max() < 1e-9
    assert time.perf_counter() - start < 10.0


def _sector_propagate(n, params, rho, t):
    """exp(L t) rho assembled sector by sector in the Schur basis."""
    tr = schur_transform(n)
    u = tr.matrix
    r = u.T @ rho @ u
    out = np.zeros_like(r)
    idx = {lab: i for i, lab in enumerate(tr.ordering)}
    for s in enumerate_bohr_sectors(n, resolve_sigma=True):
        g = build_sector_generator(s, params)
        rows = [idx[(s.j2, s.sigma, m2)] for m2 in g.m2]
        cols = [idx[(s.jp2, s.sigma_p, m2 - 2 * s.delta)] for m2 in g.m2]
        v = r[rows, cols]
        out[rows, cols] = evolve_sector(g, v.real, t) + 1j * evolve_sector(g, v.imag, t)
    return u @ out @ u.T


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_dense_oracle_equivalence(n, rng):
    d = 2**n
    # collective channel: sector trajectories, block steady states, null-space census
    p = BathParams(gamma_c=1.0, alpha_c=0.4)
    s = assemble_dense_superoperator(n, p).matrix
    rho0 = random_state(n, rng)
    for t in (0.05, 0.5, 2.0):
        dense = unvec(sla.expm(s * t) @ vec(rho0.matrix), d)
        assert trace_distance(dense, _sector_propagate(n, p, rho0.matrix, t)) < 1e-8
    late = unvec(sla.expm(s * 400.0) @ vec(rho0.matrix), d)
    tr = schur_transform(n)
    assert trace_distance(late, collective_steady_state(project_to_blocks(rho0, tr), 0.4).to_full(tr)) < 1e-8
    w = np.linalg.eigvals(s)
    census = sum(degeneracy(n, j2) ** 2 for j2 in range(n, -1, -2))
    assert np.sum(np.abs(w) < 1e-9 * np.abs(w).max()) == census
    thermalizing = [sec for sec in enumerate_bohr_sectors(n, resolve_sigma=True)
                    if build_sector_generator(sec, p).kind is SectorKind.THERMALIZING]
    assert len(thermalizing) == census

    # mixed channels: full-space and population-backend results
    pm = BathParams(gamma_c=1.0, gamma_l=0.5, eta=0.8, alpha_c=0.55, alpha_l=0.2)
    sm = assemble_dense_superoperator(n, pm).matrix
    ev, vecs = np.linalg.eig(sm)
    k = np.argmin(np.abs(ev))
    ref = unvec(vecs[:, k], d)
    ref = ref / np.trace(ref)
    assert trace_distance(ref, steady_state_full(FullLiouvillian(n, pm), tol=1e-12)) < 1e-8
    gen = DickeRateGenerator(n, pm)
    pop = BlockState.from_dicke_populations(n, gen, gen.stationary()).to_full(tr)
    assert trace_distance(ref, pop) < 1e-8
    times = np.linspace(0, 3, 7)
    traj_pop = evolve_symmetric(ground_block_state(n), pm, times)
    traj_full = evolve_full(FullState.ground(n), FullLiouvillian(n, pm), times, rtol=1e-11, atol=1e-13)
    for i, t in enumerate(times):
        dense = FullState(unvec(sla.expm(sm * t) @ vec(FullState.ground(n).matrix), d), validate=False)
        e = ergotropy(FullState(0.5 * (dense.matrix + dense.matrix.conj().T), validate=False))
        assert abs(traj_pop.samples[i].ergotropy - e.ergotropy) < 1e-8
        assert abs(traj_full.samples[i].ergotropy - e.ergotropy) < 1e-8
        assert abs(traj_full.samples[i].energy - e.energy) < 1e-8


def test_fine_tuned_zero_line():
    start = time.perf_counter()
    n = 8
    grid = np.linspace(0.0, 0.96, 21)
    for q in grid:
        weights = product_gibbs_sector_weights(n, q)
        for a in grid:
            w = ergotropy(collective_steady_state(weights, a, n)).ergotropy
            if a == q:
                assert w < 1e-8
            elif abs(a - q) >= 0.05:
                assert w > 0
    assert time.perf_counter() - start < 60.0


def _lobe(n, eta, gamma_r, grid):
    w = np.array([[steady_ergotropy(n, BathParams(gamma_c=1.0, gamma_l=gamma_r, eta=eta, alpha_c=a,
                                                  alpha_l=b)).ergotropy for b in grid] for a in grid])
    return activation_lobe(grid, grid, w)


def test_activation_lobe_structure():
    start = time.perf_counter()
    grid = np.linspace(0.0, 0.96, 25)
    lobe = _lobe(7, 0.9, 1.0, grid)
    windows = [_lobe(7, eta, 1.0, grid).alpha_c_star for eta in (0.8, 0.9, 0.95)]
    assert all(0.45 <= a <= 0.75 for a in windows)
    assert lobe.alpha_c_star < 1
    assert lobe.alpha_l_star > 0
    assert lobe.interior
    assert time.perf_counter() - start < 900.0


@pytest.mark.parametrize("gamma_r", [0.1, 1.0])
def test_transient_overshoot(gamma_r):
    p = BathParams(gamma_c=1.0, gamma_l=gamma_r, eta=0.6, alpha_c=0.9, alpha_l=0.5)
    traj = evolve_symmetric(ground_block_state(10), p, np.linspace(0.0, 200.0, 2001))
    w = traj.ergotropy
    i = int(np.argmax(w))
    assert 2.0 <= w[i] <= 3.0
    assert 0 < i < len(w) - 1
    assert w[-1] < 0.05


@pytest.mark.parametrize("gamma_r", [0.01, 0.1, 1.0])
def test_near_optimal_plateau(gamma_r):
    base = BathParams(gamma_c=1.0, gamma_l=gamma_r, eta=0.9)
    a_star, _ = locate_optimal_alpha_c(10, base)
    traj = evolve_symmetric(ground_block_state(10), base.replace(alpha_c=a_star), np.linspace(0.0, 400.0, 401))
    plateau = traj.ergotropy[-1]
    assert abs(plateau - steady_ergotropy(10, base.replace(alpha_c=a_star)).ergotropy) < 1e-3
    assert 0.45 <= plateau <= 0.65


@pytest.mark.parametrize("n", [3, 6])
def test_early_time_collapse(n):
    a_star, _ = locate_optimal_alpha_c(n, BathParams(gamma_c=1.0, gamma_l=1.0, eta=0.9))
    family = [BathParams(gamma_c=1.0, gamma_l=g, eta=0.9, alpha_c=a_star) for g in (0.01, 0.1, 1.0)]
    early = np.linspace(0.0, 0.05, 51)
    late = np.linspace(0.0, 60.0, 601)
    curves = [evolve_symmetric(ground_block_state(n), p, early).ergotropy for p in family]
    peak = max(evolve_symmetric(ground_block_state(n), p, late).ergotropy.max() for p in family)
    gap = max(np.abs(a - b).max() for a in curves for b in curves)
    assert gap < 0.01 * peak


def test_haar_balance():
    start = time.perf_counter()
    cells = [(bq, bc) for bq in (0.5, 1.0, 5.0, 10.0) for bc in (0.01, 10.0)]
    streams = np.random.SeedSequence(2024).spawn(len(cells))
    worst = -np.inf
    for (bq, bc), ss in zip(cells, streams):
        rng = np.random.default_rng(ss)
        params = BathParams(gamma_c=1.0, alpha_c=np.exp(-bc))
        for _ in range(100):
            rep = ergotropic_balance(np.exp(-bq), haar_unitary(16, rng), params)
            worst = max(worst, rep.delta_w)
    assert worst < 0
    assert time.perf_counter() - start < 600.0


def test_leakage_functional_and_bright_conservation(rng):
    for _ in range(50):
        n = int(rng.integers(2, 7))
        v = dicke_states(n)
        state = FullState(v @ random_density_matrix(n + 1, rng) @ v.T)
        p = BathParams(gamma_c=rng.uniform(0.1, 2), gamma_l=rng.uniform(0.1, 2), eta=rng.uniform(0, 1),
                       alpha_c=rng.uniform(0, 0.9), alpha_l=rng.uniform(0, 0.9))
        rep = leakage_functional(state, p)
        assert abs(rep.lambda_formula - rep.lambda_numeric) < 1e-5
    for n in (3, 4, 5):
        rho0 = random_state(n, rng)
        traj = evolve_full(rho0, FullLiouvillian(n, BathParams(gamma_c=1.0, gamma_l=1.0, eta=1.0, alpha_c=0.6)),
                           np.linspace(0, 10, 21))
        assert np.abs(traj.p_sym - traj.p_sym[0]).max() < 1e-10


def test_property_suites(rng):
    # sector sign structure, detailed balance and decay bounds
    for n in range(1, 9):
        for alpha in (0.0, 0.3, 0.8):
            p = BathParams(gamma_c=1.3, alpha_c=alpha)
            for sec in enumerate_bohr_sectors(n):
                g = build_sector_generator(sec, p)
                scale = p.gamma_c * (p.n_c + 1) * (sec.j2 + 1) ** 2
                cs = g.column_sums()
                assert (g.lower >= 0).all() and (g.upper >= 0).all()
                assert (cs <= 1e-12 * scale).all()
                eig = np.linalg.eigvals(g.matrix()).real
                if g.kind is SectorKind.THERMALIZING:
                    assert np.allclose(g.lower, alpha * g.upper, rtol=1e-12, atol=1e-14)
                    assert np.abs(cs).max() <= 1e-12 * scale
                    assert eig.max() <= 1e-9 * scale
                else:
                    bound = gershgorin_gap(g)
                    assert not bound.thermalizing
                    assert eig.max() <= -bound.gap + 1e-9 * scale
    # trace, Hermiticity and positivity under the full dynamics
    for n in (2, 3, 4):
        p = BathParams(gamma_c=1.0, gamma_l=0.7, eta=0.6, alpha_c=0.5, alpha_l=0.3)
        s = assemble_dense_superoperator(n, p).matrix
        rho0 = random_state(n, rng)
        for t in (0.1, 1.0, 10.0):
            r = unvec(sla.expm(s * t) @ vec(rho0.matrix), 2**n)
            assert abs(np.trace(r) - 1) < 1e-12
            assert np.abs(r - r.conj().T).max() < 1e-12
            assert np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() > -1e-12
    # Jensen bounds on bright-supported states
    for n in (2, 4, 6):
        v = dicke_states(n)
        for _ in range(5):
            assert jensen_bound_check(FullState(v @ random_density_matrix(n + 1, rng) @ v.T)).holds
