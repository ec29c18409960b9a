
import pytest

from heatmono.errors import InvalidExponents
from heatmono.measure import DiscreteMeasure
from heatmono.spectral import gaussian_decay_slope, model_error

FAMILY_B = DiscreteMeasure.from_atoms([(0, 1.0), (13, 0.25), (29, 0.25)])
CLOSE_PAIR = DiscreteMeasure.from_atoms([(0, 1.0), (3, 0.25)])


@pytest.fixture(scope="module")
def family_b_results():
    return [model_error(FAMILY_B, (1.5, 3), t) for t in (0.2, 0.1, 0.05)]


class TestModelError:
    def test_single_atom_is_zero(self):
        for pq in [(1.5, 3), ("4/3", 4), (2, 2)]:
            res = model_error(DiscreteMeasure.from_atoms([(0, 1.0)]), pq, 0.3)
            assert res.value == 0.0 and res.sign == 0

    @pytest.mark.parametrize("t", [0.3, 0.5, 1.0, 1.5])
    def test_split_matches_direct_subtraction(self, t):
        direct = model_error(CLOSE_PAIR, (1.5, 3), t, method="direct")
        split = model_error(CLOSE_PAIR, (1.5, 3), t)
        assert abs(split.value - direct.value) <= direct.noise + 1e-9 * abs(direct.value)

    def test_direct_reports_noise_floor_for_family_b(self):
        res = model_error(FAMILY_B, (1.5, 3), 0.2, method="direct")
        assert res.below_noise

    def test_family_b_gaussian_decay(self, family_b_results):
        results = family_b_results
        logs = [r.log_abs for r in results]
        assert logs[0] > logs[1] > logs[2]
        assert not results[0].underflow
        assert results[1].underflow and results[2].underflow
        assert gaussian_decay_slope(results) < 0

    def test_leading_exponent_tracks_closest_gap(self, family_b_results):
        # log|E| is governed by the overlap of the two closest bumps (gap 13), so the
        # slope against 1/t is of order -pi (13/2)^2 up to p-dependent factors
        slope = gaussian_decay_slope(family_b_results)
        assert -200 < slope < -20

    def test_requires_p_above_one(self):
        with pytest.raises(InvalidExponents):
            model_error(FAMILY_B, (1, 3), 0.1)

    def test_to_dict(self, family_b_results):
        d = family_b_results[1].to_dict()
        assert d["method"] == "split" and d["underflow"] is True
        assert d["value"] == 0.0 and d["log10_abs"] < -300
