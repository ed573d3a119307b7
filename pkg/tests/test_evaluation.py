import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import adjusted_rand_score
from sklearn.metrics import f1_score as sk_f1

from dynrep.evaluation import (
    adjusted_rand_index,
    degree_trajectory,
    derive_seed,
    estimated_connectivity,
    f1_score,
    run_link_holdout,
    run_timepoint_holdout,
    write_trajectory_csv,
)
from dynrep.model import probability_matrix
from dynrep.network import hold_out_links
from dynrep.synthesis import GeneratorSpec, generate
from dynrep.trainer import TrainConfig


def test_f1_hand_values():
    assert f1_score([1, 1, 0, 0], [1, 0, 1, 0]) == pytest.approx(0.5)
    assert f1_score([1, 1, 1], [1, 1, 1]) == 1.0
    assert f1_score([0, 0], [1, 0]) == 0.0
    # precision 2/3, recall 1
    assert f1_score([1, 1, 1, 0], [1, 1, 0, 0]) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        f1_score([], [])


def test_ari_hand_value():
    # contingency [[2, 0, 0], [0, 1, 1]]: index 1, expected 1/3, max 3/2
    assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 1, 2]) == pytest.approx(4 / 7)
    assert adjusted_rand_index([0, 0, 1, 1], [5, 5, 3, 3]) == 1.0
    assert adjusted_rand_index(["a", "b", "c"], [1, 2, 3]) == 1.0


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 4)), min_size=2, max_size=40))
def test_ari_against_reference(pairs):
    a, b = zip(*pairs)
    assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_score(a, b), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=40))
def test_f1_against_reference(pairs):
    p, t = zip(*pairs)
    assert f1_score(p, t) == pytest.approx(sk_f1(t, p, zero_division=0.0), abs=1e-12)


def test_derive_seed():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert len({derive_seed(1, r) for r in range(100)}) == 100
    assert derive_seed(1, 2) != derive_seed(2, 1)


@pytest.fixture(scope="module")
def sim():
    return generate(GeneratorSpec(M=14, n=8, R=2, L_out=2, L_in=2, seed=3))


def truth_fitter(sim):
    return lambda train, seed: sim.truth


def test_link_holdout_scores_by_hand(sim):
    table = run_link_holdout(sim.network, [0.2], 2, seed=5, basis=sim.truth.basis, fitter=truth_fitter(sim))
    for row in table.rows:
        split = hold_out_links(sim.network, 0.2, derive_seed(5, row.rep))
        per_time = []
        for i in np.unique(split.test_entries[:, 0]):
            e = split.entries_at(i)
            p = probability_matrix(sim.truth, sim.network.times[i])[e[:, 1], e[:, 2]]
            per_time.append(sk_f1(e[:, 3], p >= 0.5, zero_division=0.0))
        assert row.f1 == pytest.approx(np.mean(per_time), abs=1e-12)
        assert row.n_test == len(split)


def test_holdout_size_grows_with_fraction(sim):
    table = run_link_holdout(sim.network, [0.1, 0.3, 0.5], 2, basis=sim.truth.basis, fitter=truth_fitter(sim))
    sizes = [s["mean_test_size"] for s in table.summary()]
    assert sizes == sorted(sizes) and sizes[0] < sizes[-1]


def test_holdout_deterministic_and_thread_independent(sim):
    cfg = TrainConfig(max_iters=30)
    kw = dict(basis=sim.truth.basis, R=2, L_out=2, L_in=2)
    a = run_link_holdout(sim.network, [0.1, 0.3], 2, cfg, 7, **kw)
    b = run_link_holdout(sim.network, [0.1, 0.3], 2, cfg, 7, threads=3, **kw)
    assert a.rows == b.rows


def test_timepoint_holdout_reports_train_f1(sim):
    table = run_timepoint_holdout(sim.network, [0.2], 2, basis=sim.truth.basis, fitter=truth_fitter(sim))
    s = table.summary()[0]
    assert s["reps"] == 2 and 0.0 <= s["mean_train_f1"] <= 1.0
    assert all(r.train_f1 is not None for r in table.rows)


def test_fit_failure_names_the_repetition(sim):
    def boom(train, seed):
        raise RuntimeError("diverged")

    with pytest.raises(RuntimeError, match="rep 0"):
        run_link_holdout(sim.network, [0.1], 1, basis=sim.truth.basis, fitter=boom)


def test_outputs(tmp_path, sim):
    table = run_link_holdout(sim.network, [0.1, 0.2], 3, basis=sim.truth.basis, fitter=truth_fitter(sim))
    table.write_csv(tmp_path / "r.csv")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert list(rows[0]) == ["fraction", "rep", "f1"] and len(rows) == 6
    table.write_summary_json(tmp_path / "s.json")
    doc = json.loads((tmp_path / "s.json").read_text())
    f1s = [r.f1 for r in table.rows if r.fraction == 0.1]
    assert doc["summary"][0]["sd_f1"] == pytest.approx(np.std(f1s, ddof=1))


def test_invalid_protocol_arguments(sim):
    with pytest.raises(ValueError):
        run_link_holdout(sim.network, [0.0], 1, basis=sim.truth.basis, fitter=truth_fitter(sim))
    with pytest.raises(ValueError):
        run_link_holdout(sim.network, [0.1], 0, basis=sim.truth.basis, fitter=truth_fitter(sim))


def test_trajectories(tmp_path, sim):
    deg = degree_trajectory(sim.network)
    np.testing.assert_array_equal(deg, sim.network.snapshots.sum(axis=(1, 2)))
    grid = np.array([0.0, 0.5, 1.0])
    conn = estimated_connectivity(sim.truth, grid)
    assert conn[0] == pytest.approx(sim.probabilities[0].sum())
    write_trajectory_csv(tmp_path / "t.csv", {"observed": (sim.network.times, deg), "model": (grid, conn)})
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["t", "value", "series"] and len(rows) == 1 + 8 + 3


def test_f1_closed_form():
    # TP=2, FP=1, FN=1
    assert f1_score([1, 1, 1, 0, 0], [1, 1, 0, 1, 0]) == pytest.approx(2 / 3)


def test_ari_relabeling():
    a = [0, 0, 1, 1, 2, 2]
    assert adjusted_rand_index(a, [2, 2, 0, 0, 1, 1]) == 1.0
    # contingency [[1, 1, 0], [0, 1, 1], [1, 0, 1]]: index 0, expected 3 * 3 / 15, max 3
    assert adjusted_rand_index(a, [0, 1, 1, 2, 2, 0]) == pytest.approx(-0.6 / 2.4)
    with pytest.raises(ValueError):
        adjusted_rand_index([], [])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=30), st.randoms())
def test_f1_permutation_invariant(pairs, rnd):
    shuffled = pairs[:]
    rnd.shuffle(shuffled)
    assert f1_score(*zip(*pairs)) == f1_score(*zip(*shuffled))


def test_truth_model_reference():
    sim = generate(GeneratorSpec(seed=1))
    table = run_link_holdout(sim.network, [0.1], 3, seed=1, basis=sim.truth.basis, fitter=truth_fitter(sim))
    # balanced test set: guessing scores about 0.5
    assert table.summary()[0]["mean_f1"] > 0.6


def test_connectivity_trivia():
    from dynrep.model import EmbeddingModel
    from dynrep.network import from_snapshots
    from dynrep.spline import make_basis

    empty = from_snapshots(np.zeros((3, 4, 4)), [0, 1, 2])
    assert np.all(degree_trajectory(empty) == 0)
    zero = EmbeddingModel(make_basis(1.0, 6, 3), np.zeros((7, 2, 6)), np.zeros((7, 2)))
    np.testing.assert_allclose(estimated_connectivity(zero, [0.0, 0.4, 1.0]), 0.5 * 7 * 6)


def test_fitted_connectivity_tracks_generator():
    from dynrep.trainer import fit

    sim = generate(GeneratorSpec(M=30, n=12, R=3, L_out=2, L_in=3, seed=2))
    model, _ = fit(sim.network, TrainConfig(seed=2), 3, sim.truth.basis, 2, 3)
    grid = np.linspace(0, 1, 101)
    est = estimated_connectivity(model, grid)
    true = estimated_connectivity(sim.truth, grid)
    dev = np.abs(est - true).max()
    print(f"max abs deviation of expected link count: {dev:.2f} (scale {true.mean():.1f})")
    assert dev < 0.1 * true.mean()
