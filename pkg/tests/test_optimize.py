import math

import numpy as np
import pytest

from noma_pep import (
    ChannelModel,
    OptimizationProblem,
    SystemConfig,
    objective_psi,
    qpsk_constellation,
    solve,
    union_bound_ber,
    union_bound_from_pep,
)
from noma_pep.optimize import _descending_grid

QPSK = qpsk_constellation(1.0)


def make_problem(alpha=(0.8, 0.2), snr_db=30.0, p_th=1e-3, grid_step=0.01,
                 sigma_h_sq=1.0, **kw):
    ch = ChannelModel(num_users=len(alpha), sigma_h_sq=sigma_h_sq)
    cfg = SystemConfig(alpha=tuple(alpha), P=1.0, channel=ch,
                       constellation=QPSK)
    return OptimizationProblem(cfg=cfg, snr_db=snr_db, p_th=p_th,
                               grid_step=grid_step, **kw)


def test_constant_pep_contracts_to_2p():
    p = 0.0123
    bound = union_bound_from_pep(lambda tx, rx: p, QPSK)
    assert abs(bound - 2 * p) < 1e-15


def test_single_user_bound_dominates_exact_ber():
    # Exact Gray-QPSK Rayleigh BER: 0.5*(1 - sqrt(g/(2+g))).
    ch = ChannelModel(num_users=1, sigma_h_sq=0.5)
    for snr_db in (0.0, 10.0, 20.0, 30.0):
        g = 10 ** (snr_db / 10)
        exact = 0.5 * (1 - math.sqrt(g / (2 + g)))
        bound = union_bound_ber(1, (1.0,), 1.0, snr_db, ch, QPSK)
        assert bound >= exact
        assert bound < 3 * exact  # sane looseness


def test_bound_non_increasing_in_snr():
    ch = ChannelModel(num_users=2, sigma_h_sq=0.5)
    vals = [
        union_bound_ber(1, (0.8, 0.2), 1.0, s, ch, QPSK)
        for s in (0.0, 10.0, 20.0, 30.0)
    ]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_objective_single_user_degenerate():
    ch = ChannelModel(num_users=1, sigma_h_sq=0.5)
    cfg = SystemConfig(alpha=(1.0,), P=1.0, channel=ch, constellation=QPSK)
    problem = OptimizationProblem(cfg=cfg, snr_db=10.0, p_th=0.5,
                                  grid_step=0.01)
    psi = objective_psi(problem, (1.0,))
    assert abs(psi - union_bound_ber(1, (1.0,), 1.0, 10.0, ch, QPSK)) < 1e-15


def test_objective_average_lower_bound():
    problem = make_problem()
    alpha = (0.8, 0.2)
    psi = objective_psi(problem, alpha)
    per_user = objective_psi(
        OptimizationProblem(cfg=problem.cfg, snr_db=problem.snr_db,
                            p_th=problem.p_th, grid_step=problem.grid_step,
                            objective_scope="per_user_list"),
        alpha,
    )
    assert psi >= max(per_user) / len(per_user) - 1e-15
    assert abs(psi - np.mean(per_user)) < 1e-15


def test_objective_validates_alpha():
    problem = make_problem()
    with pytest.raises(ValueError):
        objective_psi(problem, (0.8, 0.1))
    with pytest.raises(ValueError):
        objective_psi(problem, (0.8, 0.2, 0.0))


def test_problem_validation():
    with pytest.raises(ValueError):
        make_problem(p_th=0.0)
    with pytest.raises(ValueError):
        make_problem(p_th=1.0)
    with pytest.raises(ValueError):
        make_problem(grid_step=0.05)
    with pytest.raises(ValueError):
        make_problem(objective_scope="everything")


def test_descending_grid_two_users():
    grid = _descending_grid(2, 0.01)
    assert all(len(a) == 2 for a in grid)
    assert all(abs(sum(a) - 1) < 1e-12 for a in grid)
    assert all(a[0] > a[1] > 0 for a in grid)
    # alpha_1 runs over 0.51 .. 0.99 on a 0.01 grid
    firsts = sorted(a[0] for a in grid)
    assert len(grid) == 49
    assert abs(firsts[0] - 0.51) < 1e-12
    assert abs(firsts[-1] - 0.99) < 1e-12
    # deterministic ordering: descending alpha_1
    assert [a[0] for a in grid] == sorted((a[0] for a in grid), reverse=True)


def test_descending_grid_three_users():
    grid = _descending_grid(3, 0.01)
    assert all(a[0] > a[1] > a[2] > 0 for a in grid)
    assert all(abs(sum(a) - 1) < 1e-12 for a in grid)
    assert len(set(grid)) == len(grid)


def test_solve_vacuous_threshold_returns_unconstrained_min():
    problem = make_problem(p_th=0.999, snr_db=20.0)
    result = solve(problem)
    assert not result.infeasible
    assert all(e.feasible for e in result.sweep)
    best_by_psi = min(result.sweep, key=lambda e: (e.psi, -e.alpha[0]))
    assert result.best_alpha == best_by_psi.alpha
    assert result.best_alpha in [e.alpha for e in result.feasible_set]


def test_solve_unattainable_threshold_flags_infeasible():
    problem = make_problem(p_th=1e-12, snr_db=10.0)
    result = solve(problem)
    assert result.infeasible
    assert result.best_alpha is None
    assert len(result.sweep) == 49  # full sweep still attached
    assert math.isnan(result.best_objective)


def test_solve_deterministic_weighted():
    problem = make_problem(snr_db=25.0, p_th=0.05, grid_step=0.01,
                           sic_mode="weighted", weights_trials=150_000,
                           weights_seed=5)
    r1 = solve(problem)
    r2 = solve(problem)
    assert r1.best_alpha == r2.best_alpha
    assert r1.best_objective == r2.best_objective
    assert [e.psi for e in r1.sweep] == [e.psi for e in r2.sweep]


def test_solve_user1_pep_monotone_in_alpha1():
    problem = make_problem(p_th=0.999, snr_db=20.0)
    result = solve(problem)
    ordered = sorted(result.sweep, key=lambda e: e.alpha[0])
    peps = [e.pep_per_user[0] for e in ordered]
    assert all(b < a for a, b in zip(peps, peps[1:]))


def test_feasible_set_survives_grid_refinement():
    coarse = solve(make_problem(snr_db=30.0, p_th=1e-3, grid_step=0.01))
    fine = solve(make_problem(snr_db=30.0, p_th=1e-3, grid_step=0.005))
    fine_feasible = [e.alpha[0] for e in fine.feasible_set]
    assert coarse.feasible_set
    for entry in coarse.feasible_set:
        assert any(abs(f - entry.alpha[0]) <= 0.005 + 1e-12
                   for f in fine_feasible)
