import dataclasses

import numpy as np
import pytest

from filmsim.baselines import (
    ArchitectureSpec,
    SingularChannelError,
    build_architecture,
    fit_architecture,
    mimo_zf_baseline,
)
from filmsim.metrics import dbm_to_watt
from filmsim.optimizer import OptimizerConfig
from filmsim.propagation import UserSet
from filmsim.scenario import Scenario

LAM = 10.7e-3


class TestArchitectureSpec:
    def test_defaults_per_kind(self):
        assert ArchitectureSpec(kind="FILM").layers == 2
        assert ArchitectureSpec(kind="SIM").layers == 7
        assert ArchitectureSpec(kind="FIM").layers == 1
        assert ArchitectureSpec(kind="MIMO").layers == 0

    def test_morph_flags(self):
        assert ArchitectureSpec(kind="FILM").morphable() == (True, True)
        assert ArchitectureSpec(kind="SIM").morphable() == (False,) * 7
        assert ArchitectureSpec(kind="FIM").morphable() == (True,)

    def test_invalid_kind(self):
        with pytest.raises(ValueError):
            ArchitectureSpec(kind="RIS")

    def test_sim_needs_depth(self):
        with pytest.raises(ValueError):
            ArchitectureSpec(kind="SIM", layer_count=1)

    def test_rho_range(self):
        with pytest.raises(ValueError):
            ArchitectureSpec(kind="FILM", rho=1.0)

    def test_layer_y_centers(self):
        film = ArchitectureSpec(kind="FILM").layer_y_centers()
        np.testing.assert_allclose(film, [-5e-3, 0.0])
        sim = ArchitectureSpec(kind="SIM").layer_y_centers()
        assert len(sim) == 7
        assert sim[-1] == 0.0
        np.testing.assert_allclose(np.diff(sim), 0.83e-3)
        assert sim[0] == pytest.approx(-4.98e-3)
        assert ArchitectureSpec(kind="FIM").layer_y_centers() == [0.0]


class TestBuildArchitecture:
    def test_film_build(self, table_scenario):
        state, w = build_architecture(ArchitectureSpec(kind="FILM"), table_scenario)
        assert state.n_layers == 2
        assert state.layers[0].geometry.y_center == pytest.approx(-5e-3)
        assert state.layers[1].geometry.y_center == 0.0
        assert state.layers[0].geometry.n_atoms == 100
        assert state.source.positions[0, 1] == pytest.approx(-10e-3)
        assert state.source.n_antennas == 4
        assert w[0].shape == (100, 4)
        assert w[1].shape == (100, 100)
        assert state.alpha == 1.0
        assert np.all(state.layers[0].theta == 0.0)

    def test_sim_build_flat_and_rigid(self, table_scenario):
        state, w = build_architecture(ArchitectureSpec(kind="SIM"), table_scenario)
        assert state.n_layers == 7
        for layer in state.layers:
            assert layer.geometry.y_max == 0.0
            assert np.all(layer.geometry.y_offsets == 0.0)
        assert len(w) == 7

    def test_fim_build(self, table_scenario):
        state, w = build_architecture(ArchitectureSpec(kind="FIM"), table_scenario)
        assert state.n_layers == 1
        assert state.layers[0].geometry.y_center == 0.0
        assert state.layers[0].geometry.y_max == pytest.approx(2.4e-3)

    def test_attenuation_amplitude(self, table_scenario):
        plain, w0 = build_architecture(ArchitectureSpec(kind="FILM"), table_scenario)
        damped, w1 = build_architecture(ArchitectureSpec(kind="FILM", rho=0.19),
                                        table_scenario)
        ratio = np.abs(w1[0].entries) ** 2 / np.abs(w0[0].entries) ** 2
        np.testing.assert_allclose(ratio, 0.81, rtol=1e-12)

    def test_mimo_has_no_cascade(self, table_scenario):
        with pytest.raises(ValueError):
            build_architecture(ArchitectureSpec(kind="MIMO"), table_scenario)

    def test_default_spacing_is_half_wavelength(self, table_scenario):
        state, _ = build_architecture(ArchitectureSpec(kind="FILM"), table_scenario)
        assert state.layers[0].geometry.d_x == pytest.approx(LAM / 2)
        assert state.atom_area == pytest.approx((LAM / 2) ** 2)


class TestFitDispatch:
    def test_film_shapes_off_equals_rigid_two_layer_stack(self, table_scenario):
        cfg = OptimizerConfig(max_iterations=4, eta=1e-4)
        film_off = fit_architecture(
            ArchitectureSpec(kind="FILM", n_x=4, n_z=4), table_scenario,
            dataclasses.replace(cfg, shape_updates=(False, False)))
        sim2 = fit_architecture(
            ArchitectureSpec(kind="SIM", layer_count=2, n_x=4, n_z=4,
                             sim_layer_spacing=5e-3),
            table_scenario, cfg)
        np.testing.assert_array_equal(film_off.j_trace, sim2.j_trace)
        np.testing.assert_array_equal(film_off.nmse_trace, sim2.nmse_trace)
        for l1, l2 in zip(film_off.state.layers, sim2.state.layers):
            np.testing.assert_array_equal(l1.theta, l2.theta)

    def test_sim_fit_runs_phase_only(self, table_scenario):
        res = fit_architecture(ArchitectureSpec(kind="SIM", n_x=3, n_z=3),
                               table_scenario, OptimizerConfig(max_iterations=3))
        assert res.iterations == 3
        for layer in res.state.layers:
            assert np.all(layer.geometry.y_offsets == 0.0)

    def test_fim_fit_morphs(self, table_scenario):
        res = fit_architecture(ArchitectureSpec(kind="FIM", n_x=4, n_z=4),
                               table_scenario, OptimizerConfig(max_iterations=4))
        assert np.any(res.state.layers[0].geometry.y_offsets != 0.0)
        assert np.all(np.abs(res.state.layers[0].geometry.y_offsets) <= 2.4e-3)


class TestMimoZf:
    def test_effective_channel_diagonal(self, table_scenario):
        res = mimo_zf_baseline(table_scenario)
        off = res.g - np.diag(np.diag(res.g))
        assert np.max(np.abs(off)) < 1e-10 * np.max(np.abs(np.diag(res.g)))
        assert res.rates.sum_rate > 0

    def test_single_user_matched_filter(self):
        users = UserSet(theta=[1.0], phi=[1.2], distance=[120.0], exponent=2.5)
        scen = Scenario(wavelength=LAM, users=users, p_total=1.0, noise_power=1e-15)
        res = mimo_zf_baseline(scen)
        assert res.g.shape == (1, 1)
        assert res.alpha == pytest.approx(abs(res.g[0, 0]), rel=1e-12)

    def test_duplicate_users_singular(self):
        users = UserSet(theta=[1.0, 1.0], phi=[1.2, 1.2],
                        distance=[120.0, 120.0], exponent=2.5)
        scen = Scenario(wavelength=LAM, users=users, p_total=1.0, noise_power=1e-15)
        with pytest.raises(SingularChannelError):
            mimo_zf_baseline(scen)

    def test_table_users_need_planar_feed(self, table_scenario):
        # users 1 and 2 share the same elevation; a z-only feed line cannot
        # separate them, the 2x2 panel can
        res = mimo_zf_baseline(table_scenario)
        assert np.isfinite(res.rates.sum_rate)
