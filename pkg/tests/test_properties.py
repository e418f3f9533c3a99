import numpy as np
from hypothesis import given, settings, strategies as st

from oracles import penrose_residuals
from randmat import random_ep, random_gp
from singkrylov.dense import jacobi_svd, pivoted_least_squares
from singkrylov.solvers import check_bounds, gmres, rr_gmres
from singkrylov.subspaces import classify, group_inverse, pseudoinverse, solution_triple

seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(2, 10)


def _gp(seed, n, ep):
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(1, n))
    return rng, (random_ep if ep else random_gp)(rng, n, rank)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 9), st.integers(1, 9))
def test_svd_reconstructs(seed, rows, cols):
    m = np.random.default_rng(seed).standard_normal((rows, cols))
    f = jacobi_svd(m)
    s = np.zeros(m.shape)
    s[: f.sigma.size, : f.sigma.size] = np.diag(f.sigma)
    assert np.linalg.norm(m - f.u @ s @ f.v.T, 2) <= 1e-12 * f.sigma[0]


@settings(max_examples=40, deadline=None)
@given(seeds, sizes)
def test_least_squares_optimal(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n + 1, n))
    rhs = rng.standard_normal(n + 1)
    y = pivoted_least_squares(m, rhs)
    best = np.linalg.lstsq(m, rhs, rcond=None)[0]
    assert np.linalg.norm(rhs - m @ y) <= np.linalg.norm(rhs - m @ best) + 1e-10


@settings(max_examples=30, deadline=None)
@given(seeds, sizes, st.booleans())
def test_generalized_inverses(seed, n, ep):
    _, a = _gp(seed, n, ep)
    x = pseudoinverse(a)
    assert max(penrose_residuals(a, x)) <= 1e-9
    g = group_inverse(a)
    scale = np.linalg.norm(a, 2) * np.linalg.norm(g, 2)
    assert np.linalg.norm(a @ g - g @ a, 2) <= 1e-9 * scale


@settings(max_examples=25, deadline=None)
@given(seeds, sizes, st.booleans(), st.booleans())
def test_bounds_never_violated(seed, n, ep, consistent):
    rng, a = _gp(seed, n, ep)
    b = a @ rng.standard_normal(n) if consistent else rng.standard_normal(n)
    p = classify(a)
    t = solution_triple(a, b, profile=p)
    rep = check_bounds(gmres(a, b), p, t, rr_trace=rr_gmres(a, b))
    assert not rep.violations, rep.summary()


@settings(max_examples=25, deadline=None)
@given(seeds, sizes)
def test_gmres_residual_monotone(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    res = gmres(a, rng.standard_normal(n)).column("resnorm_rel")
    assert np.all(np.diff(res) <= 1e-12)
