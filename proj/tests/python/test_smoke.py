import json
import math

import pytest

import pendsearch as ps


def short_deviant(n, indices=(0,), length=0.5):
    return ps.Ensemble(n, ps.PendulumSpec(1.0, 1.0), ps.PendulumSpec(1.0, length), list(indices), 16.0, 1.0)


def test_collision_pump():
    assert ps.collision_pump(100) == 6


def test_quantum_peak():
    n = 100
    t_star = 0.5 * math.pi * math.sqrt(n)
    assert ps.full_evolution(n, t_star) > 1.0 - 2.0 / n
    assert ps.full_evolution(n, 0.0) == pytest.approx(1.0 / n)
    assert abs(ps.two_level_probability(n, t_star) - ps.full_evolution(n, t_star)) < 0.1 / math.sqrt(n)


def test_design_and_predicted_beat():
    periods = []
    for n in (256, 1024):
        e = short_deviant(n)
        d = ps.design_support(e, 16.0)
        assert d.branch == ps.Branch.upper
        periods.append(ps.predicted_beat_cycles(ps.apply_design(e, d)))
    assert periods[1] / periods[0] == pytest.approx(2.0, rel=1e-9)


def test_degenerate_is_a_physics_error():
    with pytest.raises(ps.PhysicsError):
        ps.design_support(short_deviant(256, length=1.0), 16.0)


def test_fit_powerlaw():
    rows = [(x, 3.0 * x**0.5) for x in (1.0, 4.0, 16.0, 64.0)]
    slope, intercept, stderr = ps.fit_powerlaw(rows)
    assert slope == pytest.approx(0.5)
    assert math.exp(intercept) == pytest.approx(3.0)
    assert stderr < 1e-9


def test_identify_small():
    r = ps.identify(short_deviant(64, [37]), seed=1)
    assert r.index == 37
    assert len(r.verdicts) == r.presence_tests


def test_run_quantum_scenario(tmp_path):
    manifest = ps.run({"kind": "quantum", "quantum": {"n": 100}}, tmp_path / "q")
    assert manifest["results"]["peak_time"] == pytest.approx(5.0 * math.pi, rel=0.02)
    assert (tmp_path / "q" / "quantum.csv").exists()
    on_disk = json.loads((tmp_path / "q" / "manifest.json").read_text())
    assert on_disk["kind"] == "quantum"


def test_invalid_scenario(tmp_path):
    with pytest.raises(ps.ValidationError, match="n:"):
        ps.run({"kind": "design", "n": 0}, tmp_path / "bad")
    assert not (tmp_path / "bad").exists()
