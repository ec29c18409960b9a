import json

import numpy as np
import pytest

from heatmono.errors import SweepPointError
from heatmono.lattice import generate_params
from heatmono.measure import DiscreteMeasure
from heatmono.spectral import (
    DECREASING_INITIALLY,
    MIXED,
    NONDECREASING,
    QuadratureControl,
    classify,
    linear_grid,
    log_grid,
    q_derivative_scaled,
    sweep,
)
from heatmono.spectral.routes import LogReal
from heatmono.spectral.sweep import StepRecord

DELTA0 = DiscreteMeasure.from_atoms([(0, 1.0)])
FAMILY_A = DiscreteMeasure.from_atoms([(0, 1.0), (7, 0.4), (9, 0.4)])


def step(sign, log_abs, threshold_log=-30.0, kind="resolved"):
    return StepRecord(0, LogReal(sign, log_abs), threshold_log, kind)


class TestClassify:
    def test_all_up(self):
        assert classify([step(1, -5), step(1, -4)]) == NONDECREASING

    def test_noise_level_down_is_not_a_decrease(self):
        assert classify([step(-1, -40), step(-1, -40)]) == NONDECREASING

    def test_initial_prefix(self):
        assert classify([step(-1, -20), step(-1, -20), step(1, -3)]) == DECREASING_INITIALLY

    def test_single_initial_down_is_mixed(self):
        assert classify([step(-1, -20), step(1, -20), step(-1, -20)]) == MIXED

    def test_late_decrease_is_mixed(self):
        assert classify([step(1, -5), step(-1, -5), step(-1, -5)]) == MIXED


class TestGrids:
    def test_log_grid(self):
        g = log_grid(1e-3, 1e-1, 50)
        assert len(g) == 50
        assert g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(1e-1)
        assert all(b > a for a, b in zip(g, g[1:]))

    def test_linear_grid_rejects(self):
        with pytest.raises(ValueError):
            linear_grid(0.0, 1.0, 5)


class TestSweep:
    def test_delta0_constant(self):
        for pq in [(1, 3), (1.5, 3), ("4/3", 4)]:
            rep = sweep(DELTA0, pq, log_grid(0.01, 10, 8))
            assert rep.verdict == NONDECREASING
            assert np.ptp(rep.values) < 1e-10

    def test_family_a_q3_decreases_initially(self):
        rep = sweep(FAMILY_A, (1, 3), log_grid(1e-3, 1e-1, 50))
        assert rep.verdict == DECREASING_INITIALLY
        lo, hi = rep.decreasing_interval
        assert lo == pytest.approx(1e-3) and hi == pytest.approx(1e-1)
        assert all(p.dQq_dt_log.sign < 0 for p in rep.points)

    def test_family_a_q3_turns_around(self):
        rep = sweep(FAMILY_A, (1, 3), log_grid(1e-3, 10, 60))
        assert rep.verdict == DECREASING_INITIALLY
        lo, hi = rep.decreasing_interval
        # the bracket of the derivative changes sign between 0.1 and 1
        assert 0.1 < hi < 1.0
        assert rep.points[-1].dQq_dt > 0

    def test_family_a_q4_nondecreasing(self):
        rep = sweep(FAMILY_A, (1, 4), log_grid(1e-3, 10, 100))
        assert rep.verdict == NONDECREASING

    def test_general_p_even_q(self):
        rep = sweep(FAMILY_A, ("4/3", 4), log_grid(1e-2, 10, 12))
        assert rep.verdict == NONDECREASING
        assert {p.route for p in rep.points} == {"direct"}

    def test_verdict_rederivable(self):
        rep = sweep(FAMILY_A, (1, 3), log_grid(1e-3, 1.0, 20))
        assert classify(rep.steps) == rep.verdict
        data = rep.to_dict()
        assert [s["decrease"] for s in data["steps"]] == [s.decrease for s in rep.steps]

    def test_derivative_column_matches_analytic(self):
        rep = sweep(FAMILY_A, (1, 3), [0.05, 0.5])
        assert rep.points[1].dQq_dt_log == q_derivative_scaled(FAMILY_A, 3, 0.5)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            sweep(FAMILY_A, (1, 3), [0.2, 0.1])
        with pytest.raises(ValueError):
            sweep(FAMILY_A, (1, 3), [0.1])

    def test_point_failure_carries_index(self):
        ctrl = QuadratureControl(max_samples=2**10)
        mu = DiscreteMeasure.from_atoms([(0, 1.0), (400, 1.0)])
        with pytest.raises(SweepPointError) as info:
            sweep(mu, (1.5, 3), [1.0, 2.0], ctrl)
        assert info.value.index == 0

    def test_threads_give_identical_output(self):
        grid = log_grid(0.1, 5, 5)
        family_b = DiscreteMeasure.from_atoms([(0, 1.0), (13, 0.25), (29, 0.25)])
        a = sweep(family_b, (1.5, 3), grid, workers=1)
        b = sweep(family_b, (1.5, 3), grid, workers=4)
        assert a.to_json() == b.to_json()
        assert a.to_csv() == b.to_csv()

    def test_csv_schema(self):
        rep = sweep(DELTA0, (1, 3), [0.5, 1.0])
        lines = rep.to_csv().splitlines()
        assert lines[0] == "t,Q,dQq_dt,route"
        t, Q, d, route = lines[1].split(",")
        assert float(Q) == pytest.approx(3 ** (-1 / 6))
        assert route == "series"

    def test_json_roundtrip_fields(self):
        rep = sweep(FAMILY_A, (1, 3), log_grid(1e-3, 1e-2, 4))
        data = json.loads(rep.to_json())
        assert data["verdict"] == DECREASING_INITIALLY
        assert data["points"][0]["dQq_dt_sign"] == -1
        assert data["points"][0]["dQq_dt_log10_abs"] < -300

    @pytest.mark.parametrize("q", [2, 4, 6])
    def test_even_q_random_measures(self, q):
        rng = np.random.default_rng(q)
        for _ in range(5):
            n = int(rng.integers(1, 6))
            atoms = list(zip(rng.choice(21, n, replace=False).tolist(), rng.uniform(0.1, 2.0, n).tolist()))
            rep = sweep(DiscreteMeasure.from_atoms(atoms), (1, q), log_grid(1e-3, 10, 25))
            assert rep.verdict == NONDECREASING


class TestFamilies:
    @pytest.mark.parametrize("q", [2.5, 4.5, 5.5])
    def test_family_a_other_q(self, q):
        mu = generate_params(q).measure()
        rep = sweep(mu, (1, q), log_grid(1e-3, 5e-2, 10))
        assert rep.verdict == DECREASING_INITIALLY
