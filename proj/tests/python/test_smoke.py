"""Smoke tests for the nested_sieve extension module."""

import json
import math

import pytest

import nested_sieve as ns


def test_stick_probabilities_conserve_mass():
    ps, residual = ns.stick_probabilities("gem01", seed=7, count=50)
    assert len(ps) == 50
    assert all(0.0 < p < 1.0 for p in ps)
    assert abs(sum(ps) + residual - 1.0) < 1e-12
    again, _ = ns.stick_probabilities("gem01", seed=7, count=50)
    assert again == ps  # bit-for-bit seeding determinism


def test_environment_parsing_errors():
    with pytest.raises(ValueError):
        ns.stick_probabilities("caseC:1.5,0.0", seed=1, count=3)
    with pytest.raises(ValueError):
        ns.rho_generations("gem01", j_max=1, t=0.5, seed=1)


def test_run_occupancy_record():
    record = json.loads(ns.run_occupancy("1e4", "gem01", generations=3, seed=11))
    assert record["n"] == 10000
    gens = record["generations"]
    assert [g["j"] for g in gens] == [1, 2, 3]
    prev = 0
    for g in gens:
        balls = sum(int(r) * c for r, c in g["hist"].items())
        assert balls == 10000
        assert g["K"] >= prev
        prev = g["K"]


def test_rho_mean_close_to_uniform_identity():
    reps = 400
    t = math.exp(6.0)
    total = 0
    for i in range(reps):
        total += ns.rho_generations("gem01", j_max=2, t=t, seed=1000 + i)[1]
    mean = total / reps
    assert abs(mean - 18.0) < 2.0  # (log t)^2 / 2 = 18, sd ~ 8.5/sqrt(400)


def test_branching_walk_and_occupancy_share_the_coupling():
    counts = ns.count_generations("uniform", j_max=2, t=6.0, seed=3)
    assert len(counts) == 2
    points = ns.sample_prw_points("uniform", t_max=6.0, seed=3)
    assert counts[0] == len(points)  # same stream, same first generation


def test_law_constants():
    k = ns.law_constants("beta:2,1")
    assert k["mu"] == pytest.approx(0.5, abs=1e-9)
    assert k["cbar"] == pytest.approx(3.0, abs=1e-8)


def test_renewal_table_uniform_identity():
    table = ns.renewal_table("uniform", step=0.01, t_max=10.0, j_max=2, stationary=True)
    t = table["t"]
    v = table["V"]
    worst = max(abs(vi - ti) for vi, ti in zip(v, t))
    assert worst < 0.02
    v2 = table["Vj"][1]
    assert t[300] == pytest.approx(3.0)
    assert v2[300] == pytest.approx(4.5, abs=1e-3)  # V_2(3) = 3^2/2
    constants = json.loads(table["constants"])
    assert constants["m"] == pytest.approx(1.0, abs=1e-9)


def test_erlang_tail_and_bounds():
    assert ns.erlang_tail(2, 1.0) == pytest.approx(2.0 * math.exp(-1.0), rel=1e-12)
    full, simplified, applicable = ns.expansion_bounds(3, 100.0, 1.0, 1.0)
    assert full == pytest.approx(15301.0)
    assert simplified == pytest.approx(30000.0)
    assert applicable


def test_limit_objects():
    cov = ns.cov_matrix("intermediate", [1.0, 2.0])
    assert cov[0][0] == pytest.approx(0.5)
    assert cov[0][1] == pytest.approx(1.0 / 3.0)
    cov_fixed = ns.cov_matrix("fixed", [1, 2])
    assert cov_fixed[0][1] == pytest.approx(0.5)
    samples = ns.sample_limit("intermediate", [1.0], count=4000, seed=5)
    var = sum(s[0] ** 2 for s in samples) / len(samples)
    assert abs(var - 0.5) < 0.05
    with pytest.raises(ValueError):
        ns.cov_matrix("intermediate", [1.0, 1.0])


def test_normalizers():
    v = ns.normalize_gem01(55.0, math.exp(10.0), 2, 2.0)
    assert v == pytest.approx(0.22360679774997896, rel=1e-12)
    assert ns.normalize_general(55.0, math.exp(10.0), 2, 1.0, 1.0, 2.0) == pytest.approx(v)


def test_parse_ball_count():
    assert ns.parse_ball_count("2.5e10") == 25_000_000_000
    with pytest.raises(ValueError):
        ns.parse_ball_count("1.23e1")


def test_run_experiment_report_roundtrip():
    cfg = {
        "kind": "fixed_gen",
        "env": "gem01",
        "t": 20.0,
        "ell": 2,
        "replicas": 300,
        "seed": 4,
        "tolerances": {"fixed_gen_cov_band": 0.3},
    }
    report = json.loads(ns.run_experiment(json.dumps(cfg)))
    assert report["kind"] == "fixed_gen"
    names = {c["name"] for c in report["checks"]}
    assert "cov_Z1_Z2" in names
    assert report["runtime"]["replicas"] == 300
    # determinism: identical config gives byte-identical reports
    assert ns.run_experiment(json.dumps(cfg)) == ns.run_experiment(json.dumps(cfg))


def test_k_n_s_threshold():
    hist = {10: 3, 5: 2, 12: 1}
    assert ns.k_n_s(hist, 100, 0.5) == 4
    assert ns.k_n_s(hist, 100, 1.0) == 6
    assert ns.k_n_s(hist, 100, 0.0) == 0
