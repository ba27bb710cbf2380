"""
Scenario validation and profile construction
"""
import math
from pathlib import Path

import numpy as np
import pytest

from errors import ScenarioError
from scenario import circular_basis, load_scenario, parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / 'scenarios'


def minimal(**overrides):
    data = {'kind': 'free', 'grid': {'n': 8, 'h': 0.5}}
    data.update(overrides)
    return data


def error_key(data) -> str:
    with pytest.raises(ScenarioError) as info:
        parse_scenario(data)
    return info.value.key


class TestValidation:
    def test_defaults(self):
        sc = parse_scenario(minimal())
        assert sc.time_step == pytest.approx(0.125)
        assert sc.order == 2
        assert sc.make_grid().extent == 4.0
        assert sc.medium(0).c == 1.0

    @pytest.mark.parametrize("dt", [0.5, 0.26, 0.0, -0.1])
    def test_rejects_unstable_time_steps(self, dt):
        assert error_key(minimal(dt=dt)) == 'dt'

    def test_accepts_half_a_cell(self):
        assert parse_scenario(minimal(dt=0.25)).time_step == 0.25

    def test_small_grid(self):
        assert error_key(minimal(grid={'n': 4, 'h': 0.5})) == 'grid.n'

    def test_unknown_keys(self):
        assert error_key(minimal(colour='blue')) == 'colour'

    def test_unknown_kind(self):
        assert error_key(minimal(kind='orbit')) == 'kind'

    def test_media_count(self):
        fields = [{}, {}, {}]
        assert error_key(minimal(kind='interact', fields=fields, media=[{}, {}])) == 'media'

    def test_interaction_needs_two_fields(self):
        assert error_key(minimal(kind='interact')) == 'fields'

    def test_background_kind_needs_a_background(self):
        assert error_key(minimal(kind='background')) == 'background'

    def test_lorentz_check_needs_a_boost(self):
        assert error_key(minimal(kind='lorentz_check')) == 'boost'

    @pytest.mark.parametrize("boost, key", [({'v': 1.0}, 'boost.v'), ({'v': 0.5, 'e': [1, 1, 0]}, 'boost.e')])
    def test_boost_validation(self, boost, key):
        assert error_key(minimal(kind='lorentz_check', boost=boost)) == key

    def test_negative_medium(self):
        assert error_key(minimal(media=[{'eps': -1.0}])) == 'media.0.eps'

    def test_wide_gaussian(self):
        fields = [{'charge_current': {'kind': 'gaussian_bump', 'width': 1.0}}]
        assert error_key(minimal(fields=fields)) == 'fields.0.charge_current.width'

    def test_circular_wave_needs_a_mode(self):
        fields = [{'tension': {'kind': 'circular_wave', 'mode': [0, 0, 0]}}]
        assert error_key(minimal(fields=fields)) == 'fields.0.tension.mode'

    def test_root_must_be_a_mapping(self):
        assert error_key(['kind', 'free']) == '<root>'


class TestFiles:
    @pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.glob('*.yaml')))
    def test_shipped_scenarios_are_valid(self, name):
        load_scenario(SCENARIOS / name)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError) as info:
            load_scenario(tmp_path / 'absent.yaml')
        assert info.value.key == '<file>'

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / 'bad.yaml'
        path.write_text("kind: free\ngrid: [n: 8\n", encoding='utf-8')
        with pytest.raises(ScenarioError) as info:
            load_scenario(path)
        assert info.value.key == '<file>'

    def test_scenario_errors_are_value_errors(self, tmp_path):
        path = tmp_path / 'dt.yaml'
        path.write_text("kind: free\ngrid: {n: 8, h: 0.5}\ndt: 0.5\n", encoding='utf-8')
        with pytest.raises(ValueError):
            load_scenario(path)


class TestProfiles:
    def test_circular_basis(self):
        u, w = circular_basis(np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(np.cross(u, w), [1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(u, [0, 1, 0], atol=1e-15)
        with pytest.raises(ValueError):
            circular_basis(np.zeros(3))

    def test_free_circular_initial_data(self):
        sc = load_scenario(SCENARIOS / 'free_circular.yaml')
        system = sc.initial_system()
        A = system.fields[0].A
        x1 = sc.make_grid().coordinates()[0]
        g = np.exp(1j * x1)
        np.testing.assert_allclose(A.vector[1], g, atol=1e-14)
        np.testing.assert_allclose(A.vector[2], 1j * g, atol=1e-14)
        assert system.fields[0].Theta.max_abs() == 0.0

    def test_gaussian_bump_is_centred_and_periodic(self):
        sc = parse_scenario(minimal(fields=[{'charge_current': {
            'kind': 'gaussian_bump', 'amplitude': 2.0, 'polarization': [[0.0, -1.0], 0, 0, 0],
            'center': [0.0, 0.0, 0.0], 'width': 0.4}}]))
        Theta = sc.initial_system().fields[0].Theta
        assert Theta.scalar[0, 0, 0] == pytest.approx(-2j)
        # the image across the seam matches
        assert Theta.scalar[1, 0, 0] == pytest.approx(Theta.scalar[-1, 0, 0])

    def test_random_phases_follow_the_seed(self):
        fields = [{'tension': {'kind': 'plane_wave', 'amplitude': 1.0, 'polarization': [0, 0, 1, 0],
                               'phase': 'random'}}]
        first = parse_scenario(minimal(fields=fields, seed=5)).initial_system().fields[0].A.data
        again = parse_scenario(minimal(fields=fields, seed=5)).initial_system().fields[0].A.data
        other = parse_scenario(minimal(fields=fields, seed=6)).initial_system().fields[0].A.data
        np.testing.assert_array_equal(first, again)
        assert not np.allclose(first, other)

    def test_background_sampler(self):
        sc = load_scenario(SCENARIOS / 'background.yaml')
        system = sc.initial_system()
        bg = system.background(0.3)
        assert bg.shape == (4,) + sc.make_grid().shape
        np.testing.assert_allclose(bg[1], 0.05)

    def test_quadrature_step(self):
        sc = parse_scenario(minimal(dt=0.1))
        assert sc.quadrature_spec().step == pytest.approx(0.05)
        assert math.isclose(parse_scenario(minimal()).quadrature_spec().step, 0.0625)
