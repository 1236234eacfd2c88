import itertools
import math

import numpy as np
import pytest

from conftest import rng_for

from biascsp.gadgets import (
    GadgetError,
    GadgetParams,
    RegularGraph,
    TabulatedFunction,
    dictator_long_code,
    dictator_strategy,
    edge_expansion,
    folded_eval,
    hypercube_acceptance_exact,
    hypercube_dictator_acceptance,
    influence,
    mc_acceptance,
    noise_operator,
    sample_correlated,
    sample_noisy_hypercube_edge,
    sse_accepts,
    sse_dictator_acceptance_exact,
    sse_dictator_assignment,
    sse_test_sample,
    two_cliques,
    ug_completeness_bound,
    ug_satisfiable_instance,
    ug_test_accepts,
)


# ---------------------------------------------------------------------------
# influence / noise operator

def dictator_tf(t, mu, coord):
    vals = [(idx >> (t - 1 - coord)) & 1 for idx in range(1 << t)]
    return TabulatedFunction.biased_cube(t, mu, vals)


def test_influence_dictator():
    f = dictator_tf(2, 0.3, 0)
    assert influence(f, 0) == pytest.approx(0.21, abs=1e-12)
    assert influence(f, 1) == pytest.approx(0.0, abs=1e-12)


def test_influence_constant():
    f = TabulatedFunction.biased_cube(3, 0.4, [0.7] * 8)
    assert all(influence(f, i) == pytest.approx(0.0, abs=1e-12) for i in range(3))


def test_noise_identity_and_total_average():
    rng = rng_for(301)
    f = TabulatedFunction.biased_cube(3, 0.3, rng.random(8))
    t1 = noise_operator(f, 1.0)
    assert np.allclose(t1.table, f.table, atol=1e-12)
    t0 = noise_operator(f, 0.0)
    assert np.allclose(t0.table, f.expectation(), atol=1e-12)


def test_noise_preserves_expectation():
    rng = rng_for(303)
    for _ in range(5):
        f = TabulatedFunction.biased_cube(4, 0.3, rng.random(16))
        g = noise_operator(f, 0.6)
        assert g.expectation() == pytest.approx(f.expectation(), abs=1e-12)


def test_noise_semigroup():
    rng = rng_for(307)
    f = TabulatedFunction.biased_cube(4, 0.25, rng.random(16))
    ab = noise_operator(noise_operator(f, 0.7), 0.5)
    direct = noise_operator(f, 0.35)
    assert np.allclose(ab.table, direct.table, atol=1e-12)


def test_bounded_influential_coordinates():
    rng = rng_for(311)
    eta, tau = 0.2, 0.05
    for _ in range(10):
        f = TabulatedFunction.biased_cube(8, 0.3, rng.random(256))
        g = noise_operator(f, 1 - eta)
        count = sum(1 for i in range(8) if influence(g, i) >= tau)
        assert count <= 1 / (eta * tau)


def test_table_cap():
    with pytest.raises(GadgetError):
        TabulatedFunction((2,) * 21, tuple(((0.5, 0.5),) * 21), np.zeros((2,) * 21))


# ---------------------------------------------------------------------------
# correlated tuples

def test_sample_correlated_extremes():
    rng = rng_for(313)
    for _ in range(50):
        t = sample_correlated([0.3, 0.7], 4, 1.0, rng)
        assert len(set(t)) == 1
    draws = [sample_correlated([0.5, 0.5], 2, 0.0, rng) for _ in range(2000)]
    # independent fair bits: the XOR is fair
    xor_mean = np.mean([a ^ b for a, b in draws])
    assert abs(xor_mean - 0.5) < 3 * math.sqrt(0.25 / 2000)


def test_sample_correlated_covariance():
    mu, rho = 0.3, 0.5
    rng = rng_for(317)
    n = 40000
    draws = np.array([sample_correlated([1 - mu, mu], 2, rho, rng) for _ in range(n)])
    cov = np.mean(draws[:, 0] * draws[:, 1]) - np.mean(draws[:, 0]) * np.mean(draws[:, 1])
    target = rho * mu * (1 - mu)
    se = 3 * math.sqrt(1.0 / n)  # crude bound on the covariance estimator noise
    assert abs(cov - target) <= se


# ---------------------------------------------------------------------------
# biased noisy hypercube

def test_hypercube_all_ones_assignment():
    params = GadgetParams(mu=0.2, rho=0.4, r=2, R=4, samples=2000, seed=1)
    est, se = mc_acceptance(
        lambda rng: 1 if np.all(sample_noisy_hypercube_edge(params, rng) >= 0) else 0,
        params)
    assert est == 1.0 and se == 0.0


def test_hypercube_dictator_shared_theta_value():
    params = GadgetParams(mu=0.1, rho=0.5, r=2, R=4, variant="shared-theta")
    assert hypercube_dictator_acceptance(params) == pytest.approx(0.0325, abs=1e-12)


def test_hypercube_exact_matches_closed_form_dictator():
    for variant in ("shared-theta", "independent-copies"):
        params = GadgetParams(mu=0.15, rho=0.45, r=2, R=4, variant=variant)
        f = [(idx >> (params.R - 1)) & 1 for idx in range(1 << params.R)]
        exact = hypercube_acceptance_exact(f, params)
        assert exact == pytest.approx(hypercube_dictator_acceptance(params), abs=1e-12)


def test_hypercube_mc_matches_exact_random_function():
    rng0 = rng_for(331)
    params = GadgetParams(mu=0.3, rho=0.5, r=2, R=4, samples=30000, seed=7,
                          variant="shared-theta")
    f = (rng0.random(1 << params.R) < 0.5).astype(int)
    exact = hypercube_acceptance_exact(f, params)

    def one(rng):
        edge = sample_noisy_hypercube_edge(params, rng)
        rows = [int("".join(str(b) for b in edge[j]), 2) for j in range(params.r)]
        return int(all(f[row] for row in rows))

    est, se = mc_acceptance(one, params)
    assert abs(est - exact) <= 3 * se + 1e-9


def test_hypercube_independent_copies_lower_bound():
    params = GadgetParams(mu=0.2, rho=0.5, r=3, R=5, samples=30000, seed=11,
                          variant="independent-copies")

    def one(rng):
        edge = sample_noisy_hypercube_edge(params, rng)
        return int(all(edge[j][0] == 1 for j in range(params.r)))

    est, se = mc_acceptance(one, params)
    assert est >= params.mu * params.rho ** params.r - 3 * se


def test_hypercube_marginals():
    params = GadgetParams(mu=0.25, rho=0.5, r=2, R=6, seed=3)
    rng = rng_for(337)
    n = 20000
    acc = np.zeros((params.r, params.R))
    for _ in range(n):
        acc += sample_noisy_hypercube_edge(params, rng)
    se = math.sqrt(0.25 / n)
    assert np.all(np.abs(acc / n - params.mu) <= 3 * se + 0.01)


# ---------------------------------------------------------------------------
# SSE-based test

SSE_PARAMS = GadgetParams(mu=0.3, rho=0.4, beta=0.3, eta=0.05, r=2, R=4,
                          samples=20000, seed=5)


def test_two_cliques_expansion_zero():
    G, S = two_cliques(3)
    assert edge_expansion(G, S) == 0.0
    assert G.degree == 2


def test_dictator_strategy_cases():
    S = {0, 1}
    A = [0, 3, 4, 5]
    z = [1, 1, 0, 0]
    Pi, i_star, unique = dictator_strategy(A, z, S)
    assert Pi == (0,) and i_star == 0 and unique
    Pi, i_star, unique = dictator_strategy([3, 3, 3, 3], z, S)
    assert Pi == () and i_star == 0 and not unique
    Pi, i_star, unique = dictator_strategy([0, 1, 4, 5], [1, 1, 1, 1], S)
    assert Pi == (0, 1) and not unique


def test_leakage_identity_when_all_top():
    G, S = two_cliques(3)
    rng = rng_for(341)
    seen = 0
    for _ in range(4000):
        draw = sse_test_sample(G, SSE_PARAMS, rng)
        all_top = draw.z_prime == 1
        assert np.array_equal(draw.B_prime[all_top], draw.B[all_top])
        assert np.array_equal(draw.x_prime[all_top], draw.x_hat[all_top])
        if all_top.all():
            seen += 1
    assert seen > 0


def test_theta_one_eta_zero_copies_equal():
    G, _ = two_cliques(3)
    params = GadgetParams(mu=0.3, rho=0.999, beta=0.3, eta=0.0, r=3, R=4, seed=2)
    rng = rng_for(347)
    for _ in range(200):
        draw = sse_test_sample(G, params, rng)
        shared = draw.theta == 1
        for j in range(params.r):
            assert np.array_equal(draw.x_copies[j][shared], draw.x[shared])
            assert np.array_equal(draw.z_copies[j][shared], draw.z[shared])
            # eta = 0: correlated copies never resample
            assert np.array_equal(draw.x_hat[j], draw.x_copies[j])
            assert np.array_equal(draw.z_prime[j], draw.z_copies[j])


def test_walk_closure_at_eta_zero():
    G, S = two_cliques(4)
    params = GadgetParams(mu=0.3, rho=0.4, beta=0.3, eta=0.0, r=2, R=4, seed=9)
    rng = rng_for(349)
    side = lambda v: 0 if v < 4 else 1
    for _ in range(300):
        draw = sse_test_sample(G, params, rng)
        for j in range(params.r):
            for i in range(params.R):
                assert side(int(draw.B[j][i])) == side(int(draw.A[i]))


def test_pi_invariant_under_leak_rerandomization():
    # Claim: Pi(A', z) = Pi(A, z) with probability 1 when (A', x') ~ M_z(A, x)
    rng = rng_for(353)
    S = {0, 1}
    n_vertices, R = 6, 5
    for _ in range(500):
        A = rng.integers(n_vertices, size=R)
        z = (rng.random(R) < 0.4).astype(int)
        A2 = np.where(z == 1, A, rng.integers(n_vertices, size=R))
        a = dictator_strategy(A, z, S)
        b = dictator_strategy(A2, z, S)
        assert a[0] == b[0]
        if a[2]:
            assert a[1] == b[1]


def test_perm_invariance_when_unique():
    # with all Pi singletons, the dictator value ignores the permutation
    G, S = two_cliques(3)
    params = GadgetParams(mu=0.3, rho=0.4, beta=0.3, eta=0.05, r=2, R=3, seed=13)
    f = sse_dictator_assignment(S)
    rng = rng_for(359)
    checked = 0
    for _ in range(2000):
        draw = sse_test_sample(G, params, rng)
        uniques = [dictator_strategy(draw.B_prime[j], draw.z_prime[j], S)[2]
                   for j in range(params.r)]
        if not all(uniques):
            continue
        checked += 1
        for j in range(params.r):
            base = f(draw.B_prime[j], draw.x_prime[j], draw.z_prime[j])
            for perm in itertools.permutations(range(params.R)):
                p = np.array(perm)
                B_q = np.empty(params.R, dtype=int)
                x_q = np.empty(params.R, dtype=int)
                z_q = np.empty(params.R, dtype=int)
                B_q[p] = draw.B_prime[j]
                x_q[p] = draw.x_prime[j]
                z_q[p] = draw.z_prime[j]
                assert f(B_q, x_q, z_q) == base
    assert checked > 10


def test_sse_marginals():
    G, _ = two_cliques(3)
    rng = rng_for(361)
    n = 8000
    x_acc = np.zeros(SSE_PARAMS.R)
    z_acc = np.zeros(SSE_PARAMS.R)
    for _ in range(n):
        draw = sse_test_sample(G, SSE_PARAMS, rng)
        x_acc += draw.x
        z_acc += draw.z
    se = math.sqrt(0.25 / n)
    assert np.all(np.abs(x_acc / n - SSE_PARAMS.mu) <= 4 * se)
    assert np.all(np.abs(z_acc / n - SSE_PARAMS.beta) <= 4 * se)


def test_sse_dictator_exact_vs_monte_carlo():
    G, S = two_cliques(3)
    params = GadgetParams(mu=0.3, rho=0.4, beta=0.3, eta=0.05, r=2, R=4,
                          samples=20000, seed=17)
    exact = sse_dictator_acceptance_exact(G, S, params)
    f = sse_dictator_assignment(S)
    est, se = mc_acceptance(lambda rng: int(sse_accepts(sse_test_sample(G, params, rng), f)),
                            params)
    assert 0 < exact < 1
    assert abs(est - exact) <= 3 * se + 1e-9


# ---------------------------------------------------------------------------
# UG-based test

def test_dictator_is_folded():
    t, R = 2, 3
    for label in range(t):
        f = dictator_long_code(label, t, R)
        for z in itertools.product(range(R), repeat=t):
            zv = np.array(z)
            assert folded_eval(f, zv, R) == f(zv)


def test_folded_marginals_uniform():
    t, R = 2, 4
    rng = rng_for(367)
    table = rng.integers(R, size=(R,) * t)
    f = lambda zv: int(table[tuple(zv)])
    counts = np.zeros(R)
    for z in itertools.product(range(R), repeat=t):
        counts[folded_eval(f, np.array(z), R)] += 1
    assert np.allclose(counts / R ** t, 1 / R)


def test_ug_perfect_completeness():
    inst, sigma = ug_satisfiable_instance(n=6, t=3, m=24, seed=3)
    assert inst.satisfied_fraction(sigma) == 1.0
    params = GadgetParams(mu=0.3, rho=0.999, beta=0.3, eta=0.0, r=3, R=4,
                          t=3, label_size=4, samples=400, seed=23)
    codes = {v: dictator_long_code(sigma[v], params.t, params.label_size)
             for v in range(inst.n)}
    est, se = mc_acceptance(lambda rng: int(ug_test_accepts(inst, codes, params, rng)),
                            params)
    assert est == 1.0


def test_ug_dictator_completeness_bound():
    inst, sigma = ug_satisfiable_instance(n=8, t=4, m=40, seed=29)
    params = GadgetParams(mu=0.3, rho=0.35, beta=0.3, eta=0.02, r=3, R=4,
                          t=4, label_size=4, samples=30000, seed=31)
    codes = {v: dictator_long_code(sigma[v], params.t, params.label_size)
             for v in range(inst.n)}
    est, se = mc_acceptance(lambda rng: int(ug_test_accepts(inst, codes, params, rng)),
                            params)
    assert est >= ug_completeness_bound(params) - 3 * se


# ---------------------------------------------------------------------------
# Monte Carlo harness

def test_mc_acceptance_constant():
    params = GadgetParams(samples=5000, seed=1)
    est, se = mc_acceptance(lambda rng: 1, params)
    assert est == 1.0 and se == 0.0


def test_mc_acceptance_deterministic():
    params = GadgetParams(mu=0.4, samples=3000, seed=42)
    one = lambda rng: int(rng.random() < 0.37)
    a = mc_acceptance(one, params)
    b = mc_acceptance(one, params)
    assert a == b
