"""Comparison architectures: FILM, rigid SIM stacks, single-layer FIM, and
a conventional digital zero-forcing transmitter."""

import math
from dataclasses import dataclass

import numpy as np

from .cascade import CascadeState, FitResult, Layer
from .geometry import build_layer_grid, build_source_array
from .metrics import RateReport, sum_rate
from .optimizer import OptimizerConfig, ao_fit, optimal_alpha
from .propagation import user_channel
from .scenario import Scenario

KINDS = ("FILM", "SIM", "FIM", "MIMO")


class SingularChannelError(ValueError):
    """The feed-to-user matrix is rank deficient; zero forcing is undefined."""


@dataclass(frozen=True)
class ArchitectureSpec:
    """Which transmitter to build and its geometry knobs.

    Defaults reproduce the desk-scale comparison setup: 10x10 layers at
    half-wavelength pitch, a 5 mm stack ending at y = 0, the feed array at
    y = -10 mm, and a 2.4 mm morphing range where morphing applies.
    """

    kind: str
    n_x: int = 10
    n_z: int = 10
    atom_spacing: float | None = None  # meters; None = half wavelength
    layer_count: int | None = None  # None = 2 (FILM), 7 (SIM), 1 (FIM)
    y_max: float = 2.4e-3  # meters; forced to 0 for SIM
    stack_span: float = 5.0e-3  # input-to-output layer distance (FILM), meters
    sim_layer_spacing: float = 0.83e-3  # adjacent-layer gap for SIM stacks, meters
    bs_y: float = -10.0e-3  # feed-array plane, meters
    rho: float = 0.0  # per-layer power attenuation ratio

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not 0 <= self.rho < 1:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if self.layer_count is not None and self.layer_count < 1:
            raise ValueError("layer_count must be >= 1")
        if self.kind == "SIM" and self.layer_count == 1:
            raise ValueError("a SIM stack needs at least 2 layers")
        if self.kind == "FIM" and self.layers != 1:
            raise ValueError("a FIM has exactly one layer")
        if self.kind == "FILM" and self.layers != 2:
            raise ValueError("a FILM has exactly two layers")

    @property
    def layers(self) -> int:
        if self.layer_count is not None:
            return self.layer_count
        return {"FILM": 2, "SIM": 7, "FIM": 1, "MIMO": 0}[self.kind]

    @property
    def n_atoms(self) -> int:
        return self.n_x * self.n_z

    def morphable(self) -> tuple[bool, ...]:
        if self.kind == "FILM":
            return (True, True)
        if self.kind == "FIM":
            return (True,)
        return (False,) * self.layers

    def layer_y_centers(self) -> list[float]:
        """Rest-plane y of each layer, output layer always at y = 0."""
        l = self.layers
        if self.kind == "SIM":
            return [-(l - 1 - i) * self.sim_layer_spacing for i in range(l)]
        if self.kind == "FILM":
            return [-self.stack_span, 0.0]
        if self.kind == "FIM":
            return [0.0]
        raise ValueError(f"{self.kind} has no metasurface layers")


def build_architecture(
    spec: ArchitectureSpec, scenario: Scenario
) -> tuple[CascadeState, list]:
    """Assemble the cascade for a metasurface architecture.

    Phases start at zero (identity transmission) and the gain at 1. Each
    traversed layer's coupling matrix carries the sqrt(1 - rho) amplitude.
    Returns the state and its diffraction matrices.
    """
    if spec.kind == "MIMO":
        raise ValueError("MIMO has no metasurface cascade; use mimo_zf_baseline")
    spacing = spec.atom_spacing if spec.atom_spacing is not None else scenario.wavelength / 2
    y_max = 0.0 if spec.kind == "SIM" else spec.y_max
    layers = []
    for y_center in spec.layer_y_centers():
        geom = build_layer_grid(spec.n_x, spec.n_z, spacing, spacing, y_center, y_max)
        layers.append(Layer(geometry=geom, theta=np.zeros(geom.n_atoms)))
    cx, cz = layers[0].geometry.grid_center_xz()
    source = build_source_array(
        scenario.n_feeds, scenario.wavelength / 2, x=cx, y=spec.bs_y, z_center=cz
    )
    state = CascadeState(
        source=source,
        layers=layers,
        wavelength=scenario.wavelength,
        atom_area=spacing * spacing,
        alpha=1.0,
        amplitude_factor=math.sqrt(1.0 - spec.rho),
    )
    return state, state.w_matrices()


def fit_architecture(
    spec: ArchitectureSpec, scenario: Scenario, config: OptimizerConfig
) -> FitResult:
    """Build and fit one architecture with the alternating optimizer."""
    state, _ = build_architecture(spec, scenario)
    if config.shape_updates is None:
        config = OptimizerConfig(
            max_iterations=config.max_iterations,
            epsilon=config.epsilon,
            eta=config.eta,
            seed=config.seed,
            shape_updates=spec.morphable(),
            incremental_sweep=config.incremental_sweep,
            record_substeps=config.record_substeps,
        )
    return ao_fit(scenario, state, config)


@dataclass(frozen=True)
class MimoZfResult:
    """Effective channel of the digital zero-forcing transmitter."""

    g: np.ndarray  # (K, K) effective channel, diagonal when well conditioned
    alpha: float  # common-gain fit of g, for the shared metrics
    rates: RateReport


def _feed_panel_shape(m: int) -> tuple[int, int]:
    """Near-square n_x x n_z factorization of the antenna count."""
    n_x = 1
    for d in range(1, int(math.isqrt(m)) + 1):
        if m % d == 0:
            n_x = d
    return n_x, m // n_x


def mimo_zf_baseline(scenario: Scenario, spec: ArchitectureSpec | None = None) -> MimoZfResult:
    """Digital zero-forcing over the direct feed-to-user steering channel.

    The M = K feed antennas form a near-square half-wavelength panel. The
    precoder is the right pseudo-inverse with unit-norm columns and uniform
    per-stream power; rates come from the shared channel-deviation metrics.
    """
    m = scenario.n_feeds
    bs_y = spec.bs_y if spec is not None else -10.0e-3
    n_x, n_z = _feed_panel_shape(m)
    panel = build_layer_grid(
        n_x, n_z, scenario.wavelength / 2, scenario.wavelength / 2, bs_y, 0.0
    )
    h = user_channel(scenario.users, panel, scenario.wavelength).H
    gram = h @ h.conj().T
    if np.linalg.cond(gram) > 1e12:
        raise SingularChannelError("feed-to-user channel is rank deficient")
    f = h.conj().T @ np.linalg.inv(gram)
    f = f / np.linalg.norm(f, axis=0, keepdims=True)
    g = h @ f
    alpha = optimal_alpha(g)
    rates = sum_rate(g, alpha, scenario.uniform_budget())
    return MimoZfResult(g=g, alpha=alpha, rates=rates)
