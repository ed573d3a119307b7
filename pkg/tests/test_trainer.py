import math

import numpy as np
import pytest

from dynrep.cluster import kmeans_euclidean
from dynrep.model import Penalties, log_likelihood, penalized_objective
from dynrep.network import from_snapshots
from dynrep.spline import make_basis
from dynrep.synthesis import GeneratorSpec, generate
from dynrep.trainer import TrainConfig, TrainingError, cluster_at_time, fit, init_model

from conftest import random_network

GOLDEN = (math.sqrt(5) - 1) / 2


def golden_section_max(f, lo, hi, tol=1e-10):
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    while b - a > tol:
        if f(c) > f(d):
            b, d = d, c
            c = b - GOLDEN * (b - a)
        else:
            a, c = c, d
            d = a + GOLDEN * (b - a)
    x = 0.5 * (a + b)
    return x, f(x)


def two_node_network(first, second):
    """Links 0->1 at two times; the reverse direction is unobserved."""
    snaps = np.zeros((2, 2, 2), np.uint8)
    snaps[:, 0, 1] = [first, second]
    mask = np.zeros((2, 2, 2), bool)
    mask[:, 0, 1] = True
    return from_snapshots(snaps, [0.0, 1.0], mask=mask)


def sigmoid_log(x):
    return -math.log1p(math.exp(-x)) if x > 0 else x - math.log1p(math.exp(x))


def test_two_node_unpenalized_matches_scalar_oracle():
    # constant basis: eta_01 = gamma_0 * beta_1 is the only free quantity
    net = two_node_network(1, 0)
    bs = make_basis(1.0, 1, 0)
    _, best = golden_section_max(lambda x: sigmoid_log(x) + sigmoid_log(-x), -10, 10)
    cfg = TrainConfig(penalties=Penalties(0, 0, 0, 0, 0), seed=3, init_scale=1.0, tol=1e-12, max_iters=5000)
    _, report = fit(net, cfg, 1, bs, 1, 1)
    assert abs(report.objective_history[-1] - best) < 1e-4


def test_two_node_ridge_profile_matches_scalar_oracle():
    # with ridge weights w on gamma and beta the cheapest way to reach a product
    # x is |gamma| = |beta| = sqrt(|x|), so the profile is 2 log s(x) - 2 w |x|
    w = 0.1
    net = two_node_network(1, 1)
    bs = make_basis(1.0, 1, 0)
    x_star, best = golden_section_max(lambda x: 2 * sigmoid_log(x) - 2 * w * abs(x), 0, 20)
    assert x_star == pytest.approx(math.log(9), abs=1e-6)
    cfg = TrainConfig(penalties=Penalties(0, 0, w, w, 0), seed=1, init_scale=0.5, tol=1e-13, max_iters=20000)
    model, report = fit(net, cfg, 1, bs, 1, 1)
    assert abs(report.objective_history[-1] - best) < 1e-4
    assert model.gamma[0, 0, 0] * model.beta[1, 0] == pytest.approx(x_star, abs=1e-2)


@pytest.fixture(scope="module")
def synthetic():
    return generate(GeneratorSpec(M=16, n=8, R=3, L_out=2, L_in=2, seed=5))


def test_monotone_objective(synthetic):
    for seed in range(3):
        cfg = TrainConfig(seed=seed, max_iters=150, kmeans_every=3)
        _, report = fit(synthetic.network, cfg, 3, synthetic.truth.basis, 2, 2)
        h = np.array(report.objective_history)
        assert np.all(np.diff(h) >= 0.0)
        assert len(h) == report.iterations_run + 1


def test_fit_improves_likelihood(synthetic):
    cfg = TrainConfig(max_iters=200)
    init, _ = init_model(synthetic.network, 3, synthetic.truth.basis, 0, 0.1)
    model, report = fit(synthetic.network, cfg, 3, synthetic.truth.basis, 2, 2)
    assert log_likelihood(model, synthetic.network) > log_likelihood(init, synthetic.network) + 50


def test_report_matches_model(synthetic):
    cfg = TrainConfig(max_iters=40)
    model, report = fit(synthetic.network, cfg, 3, synthetic.truth.basis, 2, 2)
    obj = penalized_objective(model, synthetic.network, cfg.penalties, report.clusters)
    assert obj == pytest.approx(report.objective_history[-1], rel=1e-12)
    assert report.curvature_norm == pytest.approx(
        float(np.einsum("jrd,de,jre->", model.gamma, model.basis.curvature_gram, model.gamma)), rel=1e-12
    )
    d = report.to_dict()
    assert set(d) >= {"objective_history", "iterations_run", "converged", "curvature_norm", "clusters"}


def test_deterministic(synthetic):
    cfg = TrainConfig(max_iters=60, seed=4)
    a, ra = fit(synthetic.network, cfg, 3, synthetic.truth.basis, 2, 2)
    b, rb = fit(synthetic.network, cfg, 3, synthetic.truth.basis, 2, 2)
    assert np.array_equal(a.gamma, b.gamma) and np.array_equal(a.beta, b.beta)
    assert ra.objective_history == rb.objective_history


def test_convergence_flag():
    net = two_node_network(1, 0)
    cfg = TrainConfig(penalties=Penalties(0, 0, 0.1, 0.1, 0), tol=1e-6)
    _, report = fit(net, cfg, 1, make_basis(1.0, 1, 0), 1, 1)
    assert report.converged and report.iterations_run < cfg.max_iters
    _, report = fit(net, TrainConfig(max_iters=1, tol=1e-15), 1, make_basis(1.0, 1, 0), 1, 1)
    assert not report.converged and report.iterations_run == 1


def test_init_statistics():
    net = random_network(np.random.default_rng(0), 300, 2)
    bs = make_basis(1.0, 6, 3)
    model, clusters = init_model(net, 4, bs, seed=2, init_scale=0.3, L_out=3, L_in=2)
    # 7200 and 1200 i.i.d. normal draws: mean within 4 standard errors, sd within 5%
    for x in (model.gamma.ravel(), model.beta.ravel()):
        assert abs(x.mean()) < 4 * 0.3 / math.sqrt(x.size)
        assert x.std() == pytest.approx(0.3, rel=0.05)
    assert clusters.theta.shape == (3, 4, 6) and clusters.zeta.shape == (2, 4)
    assert clusters.assign_out.max() < 3 and clusters.assign_in.max() < 2


def test_curvature_penalty_smooths_jagged_data():
    rng = np.random.default_rng(7)
    n, M = 16, 10
    dens = np.where(np.arange(n) % 2 == 0, 0.85, 0.1)
    snaps = (rng.random((n, M, M)) < dens[:, None, None]).astype(np.uint8)
    net = from_snapshots(snaps, np.linspace(0, 1, n))
    bs = make_basis(1.0, 12, 3)
    _, rough = fit(net, TrainConfig(penalties=Penalties(lam_a2=0.0), max_iters=300), 2, bs, 2, 2)
    _, smooth = fit(net, TrainConfig(max_iters=300), 2, bs, 2, 2)
    assert rough.curvature_norm > smooth.curvature_norm


def test_verbose_trace(capsys):
    net = two_node_network(1, 0)
    fit(net, TrainConfig(max_iters=3, tol=1e-15, verbose=True), 1, make_basis(1.0, 1, 0), 1, 1)
    lines = capsys.readouterr().err.strip().splitlines()
    assert len(lines) == 3 and lines[0].startswith("1,")


def test_errors(synthetic):
    bs = synthetic.truth.basis
    with pytest.raises(ValueError):
        fit(synthetic.network, TrainConfig(max_iters=2), 3, bs, 17, 2)
    with pytest.raises(TrainingError):
        fit(synthetic.network, TrainConfig(init_scale=1e200), 3, bs, 2, 2)
    for bad in ({"a_alpha": 0.0}, {"max_iters": 0}, {"tol": 0.0}, {"kmeans_every": 0}, {"init_scale": -1.0}):
        with pytest.raises(ValueError):
            TrainConfig(**bad)


def test_dynamic_clustering_uses_instantaneous_embeddings(synthetic):
    model = synthetic.truth
    a = cluster_at_time(model, 0.4, 3, restarts=5, seed=1)
    b = kmeans_euclidean(model.alpha(0.4), 3, restarts=5, seed=1)
    assert np.array_equal(a.labels, b.labels)


def test_zero_init_scale_gives_zero_model(synthetic):
    model, clusters = init_model(synthetic.network, 3, synthetic.truth.basis, 0, 0.0, 2, 2)
    assert not model.gamma.any() and not model.beta.any()
    # coincident points: every node lands on the lowest-index center
    assert np.all(clusters.assign_out == clusters.assign_out[0])
    assert clusters.inertia_out == 0.0


def test_init_same_seed_identical(synthetic):
    a, _ = init_model(synthetic.network, 3, synthetic.truth.basis, 9)
    b, _ = init_model(synthetic.network, 3, synthetic.truth.basis, 9)
    assert np.array_equal(a.gamma, b.gamma) and np.array_equal(a.beta, b.beta)


def test_default_init_spread():
    sim = generate(GeneratorSpec(M=50, n=4, seed=0))
    model, _ = init_model(sim.network, 6, sim.truth.basis, seed=0)
    assert 0.08 <= model.gamma.std() <= 0.12


def test_single_tiny_step_stays_at_init(synthetic):
    cfg = TrainConfig(a_alpha=1e-12, a_beta=1e-12, max_iters=1)
    init, _ = init_model(synthetic.network, 3, synthetic.truth.basis, 0, 0.1, 2, 2)
    model, _ = fit(synthetic.network, cfg, 3, synthetic.truth.basis, 2, 2)
    np.testing.assert_allclose(model.gamma, init.gamma, atol=1e-9)
    np.testing.assert_allclose(model.beta, init.beta, atol=1e-9)


def test_dynamic_clustering_edge_cases():
    bs = make_basis(1.0, 6, 3)
    from dynrep.model import EmbeddingModel

    same = EmbeddingModel(bs, np.ones((5, 2, 6)), np.zeros((5, 2)))
    assert cluster_at_time(same, 0.3, 2).inertia == 0.0
    rng = np.random.default_rng(0)
    varied = EmbeddingModel(bs, rng.normal(size=(5, 2, 6)), np.zeros((5, 2)))
    assert cluster_at_time(varied, 0.3, 5).inertia == 0.0
    with pytest.raises(ValueError):
        cluster_at_time(varied, 0.3, 6)


def test_dynamic_clustering_recovers_planted_groups():
    from dynrep.evaluation import adjusted_rand_index

    sim = generate(GeneratorSpec(M=30, n=10, R=3, L_out=2, L_in=2, sigma_alpha=0.05, seed=4))
    res = cluster_at_time(sim.truth, 0.5, 2, seed=0)
    assert adjusted_rand_index(res.labels, sim.labels_out) == 1.0
