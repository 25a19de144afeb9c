import math

import numpy as np
import pytest

from conftest import as_batches, make_stream
from renewglm.exceptions import ContractViolation
from renewglm.glm import Batch, Family
from renewglm.penalty import PenaltyConfig, PenaltyKind
from renewglm.simulation import TRUE_SUPPORT
from renewglm.solver import init_first_batch
from renewglm.state import SolverConfig, SolverState
from renewglm.tuning import bic, bic_path, choose, lambda_grid, lambda_max, select_lambda

LASSO = SolverConfig()


def test_lambda_max_examples():
    assert lambda_max([-3, 1, 2]) == 3
    assert lambda_max([0.0, 0.0]) == 0
    assert lambda_max([0.5]) == 0.5


def test_lambda_grid_examples():
    np.testing.assert_allclose(lambda_grid(1, 3, 0.01), [1, 0.1, 0.01])
    np.testing.assert_allclose(lambda_grid(2, 2, 0.5), [2, 1])
    for lmax, size, ratio in [(3.7, 100, 1e-3), (0.013, 17, 0.2)]:
        g = lambda_grid(lmax, size, ratio)
        assert g[0] == lmax and g[-1] == ratio * lmax
        assert np.all(np.diff(g) < 0)
    with pytest.raises(ContractViolation):
        lambda_grid(0.0)


def _state(rng, p=3):
    return SolverState(p=p, family=Family.GAUSSIAN, config=LASSO, b=1, N=7,
                       beta=rng.normal(size=p), cum_w=rng.uniform(1, 3, p))


def test_bic_at_previous_estimate(rng):
    state = _state(rng)
    batch = Batch(rng.normal(size=5), rng.normal(size=(5, 3)), 2)
    theta = batch.X @ state.beta
    ll = batch.y @ theta - 0.5 * theta @ theta
    assert bic(state, batch, state.beta) == pytest.approx(3 * math.log(12) - 2 * ll)


def test_bic_all_zero():
    state = SolverState(p=2, family=Family.GAUSSIAN, config=LASSO)
    assert bic(state, Batch(np.zeros(4), np.ones((4, 2))), np.zeros(2)) == 0.0


def test_bic_term_by_term(rng):
    state = _state(rng)
    batch = Batch((rng.random(5) < .5).astype(float), rng.normal(size=(5, 3)), 2)
    state.family = Family.BINOMIAL
    cand = np.array([0.4, 0.0, -1.1])
    quad = sum(state.cum_w[j] * (cand[j] - state.beta[j]) ** 2 for j in range(3))
    ll = 0.0
    for i in range(5):
        t = float(batch.X[i] @ cand)
        ll += batch.y[i] * t - math.log1p(math.exp(t))
    assert bic(state, batch, cand) == pytest.approx(2 * math.log(12) + quad - 2 * ll, rel=1e-12)


def test_bic_path_matches_scalar(rng):
    state = _state(rng, p=4)
    batch = Batch(rng.normal(size=6), rng.normal(size=(6, 4)), 2)
    cands = rng.normal(size=(5, 4)) * (rng.random((5, 4)) < .5)
    np.testing.assert_allclose(bic_path(state, batch, cands), [bic(state, batch, c) for c in cands])


def test_choose_single_point_and_ties():
    tr = choose(np.array([0.3]), np.ones((1, 2)), np.array([5.0]))
    assert tr.chosen_lambda == 0.3
    cands = np.array([[1.0, 0.0], [1.0, 0.0], [2.0, 1.0]])
    tr = choose(np.array([0.9, 0.5, 0.1]), cands, np.array([1.0, 1.0, 4.0]))
    assert tr.chosen_lambda == 0.9 and tr.chosen_index == 0


def test_identical_candidates_tie_to_larger_lambda():
    rng = np.random.default_rng(1)
    state = _state(rng)
    batch = Batch(rng.normal(size=5), rng.normal(size=(5, 3)), 2)
    lam, trace = select_lambda(state, batch, grid=[1e6, 2e6][::-1])
    assert lam == 2e6


def test_s_hat_monotone_along_lasso_path():
    batches = as_batches(make_stream(Family.GAUSSIAN, B=2, seed=0))
    state = init_first_batch(batches[0], LASSO)
    _, trace = select_lambda(state, batches[1])
    assert np.all(np.diff(trace.s_hat_per_lambda) >= 0)
    assert trace.s_hat_per_lambda[0] == 0


def test_degenerate_grid_returns_zero():
    state = SolverState(p=2, family=Family.GAUSSIAN, config=LASSO)
    lam, trace = select_lambda(state, Batch(np.zeros(3), np.ones((3, 2))))
    assert lam == 0.0 and trace.degenerate
    np.testing.assert_array_equal(trace.candidate, 0.0)


@pytest.mark.parametrize("kind", [PenaltyKind.SCAD, PenaltyKind.MCP])
def test_second_batch_selects_true_size(kind):
    config = SolverConfig(penalty=PenaltyConfig(kind))
    hits = 0
    for seed in range(50):
        # warm-started first batch (1000 pooled rows), as in the simulation protocol
        chunks = make_stream(Family.GAUSSIAN, B=11, seed=500 + seed)
        X0 = np.vstack([c[0] for c in chunks[:10]])
        y0 = np.concatenate([c[1] for c in chunks[:10]])
        state = init_first_batch(Batch(y0, X0), config)
        _, trace = select_lambda(state, Batch(chunks[10][1], chunks[10][0], 2))
        hits += int(trace.s_hat_per_lambda[trace.chosen_index] == len(TRUE_SUPPORT))
    assert hits >= 40
