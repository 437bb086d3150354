import numpy as np
import pytest

from filmsim.metrics import dbm_to_watt
from filmsim.propagation import UserSet
from filmsim.scenario import Scenario

WAVELENGTH = 10.7e-3
SPACING = WAVELENGTH / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture(scope="session")
def table_users():
    return UserSet(
        theta=[np.pi / 6, np.pi / 6, np.pi / 3, 3 * np.pi / 4],
        phi=[np.pi / 3, 2 * np.pi / 3, np.pi / 4, np.pi / 2],
        distance=[150.0, 150.0, 150.0, 150.0],
        exponent=2.5,
    )


@pytest.fixture(scope="session")
def table_scenario(table_users):
    return Scenario(
        wavelength=WAVELENGTH,
        users=table_users,
        p_total=dbm_to_watt(30.0),
        noise_power=dbm_to_watt(-125.0),
    )


def surrogate_fd_layer1(state, h, n, delta=1e-9):
    """Central difference of the frozen-amplitude objective in y_n of layer 1.

    Coupling amplitudes and obliquity factors stay at their current values;
    only the propagation phase follows the displaced geometry.
    """
    from filmsim.geometry import pairwise_distances

    w = state.w_matrices()
    kc = 2 * np.pi / state.wavelength
    g1, g2 = state.layers[0].geometry, state.layers[1].geometry
    p0, p1, p2 = state.source.positions, g1.positions(), g2.positions()
    target = state.alpha * np.eye(h.shape[0])

    def j_at(d):
        p1d = p1.copy()
        p1d[n, 1] += d
        w1 = w[0].entries * np.exp(1j * kc * (pairwise_distances(p0, p1d)
                                              - pairwise_distances(p0, p1)))
        w2 = w[1].entries * np.exp(1j * kc * (pairwise_distances(p1d, p2)
                                              - pairwise_distances(p1, p2)))
        p = state.layers[1].phi()[:, None] * (w2 @ (state.layers[0].phi()[:, None] * w1))
        return float(np.sum(np.abs(h @ p - target) ** 2))

    return (j_at(delta) - j_at(-delta)) / (2 * delta)


def surrogate_fd_layer2(state, users, h, n, delta=1e-9):
    """Central difference of the frozen-amplitude objective in y_n of layer 2."""
    from filmsim.geometry import pairwise_distances
    from filmsim.propagation import user_channel

    w = state.w_matrices()
    kc = 2 * np.pi / state.wavelength
    g1, g2 = state.layers[0].geometry, state.layers[1].geometry
    p1, p2 = g1.positions(), g2.positions()
    target = state.alpha * np.eye(h.shape[0])
    nn = g2.n_atoms

    def j_at(d):
        p2d = p2.copy()
        p2d[n, 1] += d
        w2 = w[1].entries * np.exp(1j * kc * (pairwise_distances(p1, p2d)
                                              - pairwise_distances(p1, p2)))
        hd = user_channel(users, g2.with_offsets(g2.y_offsets + d * (np.arange(nn) == n)),
                          state.wavelength).H
        p = state.layers[1].phi()[:, None] * (w2 @ (state.layers[0].phi()[:, None] * w[0].entries))
        return float(np.sum(np.abs(hd @ p - target) ** 2))

    return (j_at(delta) - j_at(-delta)) / (2 * delta)


def random_cascade(rng, n_x=2, n_z=2, n_users=2, morph=True):
    """Small randomized two-layer cascade for oracle tests."""
    from filmsim.cascade import CascadeState, Layer
    from filmsim.geometry import build_layer_grid, build_source_array

    n = n_x * n_z
    y_max = 2.4e-3 if morph else 0.0
    g1 = build_layer_grid(n_x, n_z, SPACING, SPACING, -5e-3, y_max)
    g2 = build_layer_grid(n_x, n_z, SPACING, SPACING, 0.0, y_max)
    if morph:
        g1 = g1.with_offsets(rng.uniform(-2e-3, 2e-3, n))
        g2 = g2.with_offsets(rng.uniform(-2e-3, 2e-3, n))
    cx, cz = g1.grid_center_xz()
    src = build_source_array(n_users, SPACING, x=cx, y=-10e-3, z_center=cz)
    users = UserSet(
        theta=rng.uniform(0.2, np.pi - 0.2, n_users),
        phi=rng.uniform(0.2, np.pi - 0.2, n_users),
        distance=rng.uniform(100.0, 200.0, n_users),
        exponent=2.5,
    )
    state = CascadeState(
        source=src,
        layers=[
            Layer(g1, rng.uniform(0, 2 * np.pi, n)),
            Layer(g2, rng.uniform(0, 2 * np.pi, n)),
        ],
        wavelength=WAVELENGTH,
        atom_area=SPACING**2,
        alpha=rng.uniform(1e-6, 1e-4),
    )
    return state, users
