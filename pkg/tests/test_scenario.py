import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsleep import defaults
from hetsleep.errors import ParseError, ValidationError
from hetsleep.scenario import (
    db_to_linear,
    distance_order,
    dbm_to_watt,
    is_uniform,
    load_scenario,
    save_scenario,
    sbs_distances,
    scenario_from_dict,
    scenario_to_dict,
)


class TestUnits:
    def test_reference_channel_conversions(self):
        ch = defaults.reference_channel()
        assert ch.d_ref_loss == pytest.approx(10 ** -3.5)
        # -174 dBm/Hz is about 3.98e-21 W/Hz
        assert ch.n0 == pytest.approx(3.981e-21, rel=1e-3)

    def test_db_helpers_invert(self):
        assert db_to_linear(0.0) == 1.0
        assert dbm_to_watt(30.0) == pytest.approx(1.0)


class TestValidation:
    def test_reference_grid_is_valid(self, grid_scenario):
        assert grid_scenario.n_sbs == 144
        assert not is_uniform(grid_scenario)

    def test_overlapping_discs_rejected(self):
        with pytest.raises(ValidationError, match="overlap"):
            defaults.reference_scenario([(50.0, 0.0), (55.0, 0.0)], r_small=10.0)

    def test_disc_outside_macro_cell_rejected(self):
        with pytest.raises(ValidationError, match="exits"):
            defaults.reference_scenario([(495.0, 0.0)], r_small=10.0)

    def test_sbs_at_origin_rejected(self):
        with pytest.raises(ValidationError, match="origin"):
            defaults.reference_scenario([(0.0, 0.0)])

    @pytest.mark.parametrize("lam0, lam", [(0.0, 1e-3), (1e-3, 0.0), (-1e-3, 1e-3)])
    def test_non_positive_density_rejected(self, lam0, lam):
        with pytest.raises(ValidationError):
            defaults.reference_scenario([(100.0, 0.0)], lambda0=lam0, lambdas=[lam])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError, match="one entry per SBS"):
            defaults.reference_scenario([(100.0, 0.0)], lambdas=[1e-3, 1e-3])

    def test_power_params_checked(self):
        with pytest.raises(ValidationError):
            defaults.reference_scenario().with_power(p_sbs_active=2.0)

    def test_uniform_detection(self):
        s = defaults.reference_scenario([(100.0, 0.0), (0.0, 200.0)], lambda0=1e-3,
                                        lambdas=[1e-3, 1e-3 * (1 + 1e-12)])
        assert is_uniform(s)
        assert not is_uniform(s.with_densities(1e-3, [1e-3, 1.1e-3]))


class TestDistances:
    def test_input_order_kept(self, small_scenario):
        assert sbs_distances(small_scenario) == pytest.approx(
            [60.0, 80.0, math.hypot(100, 20), math.hypot(30, 110)])

    def test_ties_broken_by_index(self):
        s = defaults.reference_scenario([(0.0, 100.0), (100.0, 0.0), (50.0, 0.0)])
        assert distance_order(s) == [2, 0, 1]


class TestJson:
    def test_round_trip_is_exact(self, tmp_path, grid_scenario):
        path = tmp_path / "s.json"
        save_scenario(grid_scenario, path)
        back = load_scenario(path)
        assert back == grid_scenario
        assert back.channel.n0 == grid_scenario.channel.n0

    def test_missing_key_is_parse_error(self, grid_scenario):
        doc = scenario_to_dict(grid_scenario)
        del doc["qos"]
        with pytest.raises(ParseError):
            scenario_from_dict(doc)

    def test_bad_json_is_parse_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            load_scenario(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text(json.dumps([1, 2]))
        with pytest.raises(ParseError):
            load_scenario(path)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 12),
       lam0=st.floats(1e-5, 1e-1), d_db=st.floats(-60.0, -10.0))
def test_round_trip_property(tmp_path_factory, seed, m, lam0, d_db):
    rng = np.random.default_rng(seed)
    pos = defaults.random_layout(m, 400.0, 12.0, rng, min_dist=12.0)
    lam = list(rng.uniform(0.5, 2.0, m) * lam0)
    s = defaults.reference_scenario(pos, lam0, lam, r_macro=400.0, r_small=12.0)
    s = s.with_channel(d_ref_loss=db_to_linear(d_db))
    path = tmp_path_factory.mktemp("rt") / "s.json"
    save_scenario(s, path)
    assert load_scenario(path) == s
