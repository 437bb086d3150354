"""Alternating optimization of phases, layer shapes, and channel gain.

Each iteration runs Gauss-Seidel closed-form phase sweeps over every layer,
one projected-gradient shape step per morphable layer (Jacobi within a
layer, with diffraction matrices rebuilt after each step), and finishes
with the closed-form gain update.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import core
from .cascade import (
    CascadeState,
    FitResult,
    beamformer,
    end_to_end,
    equivalent_channels,
    objective,
    wrap_phase,
)
from .geometry import pairwise_distances, project_offsets
from .propagation import direction_cosines, user_channel
from .scenario import Scenario


class DegenerateStationaryError(ValueError):
    """The objective is flat in this phase coordinate (e + f = g - h = 0)."""


class NonFiniteObjectiveError(RuntimeError):
    """The objective left the finite range; the fit cannot continue."""


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 20
    epsilon: float = 0.0  # stop once an iteration reduces J by less than this
    eta: float = 1e-4  # shape step size
    seed: int = 0
    shape_updates: tuple[bool, ...] | None = None  # per layer; None = morph where y_max > 0
    incremental_sweep: bool = False  # O(K^2) per-atom refresh instead of full recompute
    record_substeps: bool = False  # log J around every phase/gain update (slow)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass(frozen=True)
class PhaseCoefficients:
    """Scalars e, f, g, h of the per-atom objective J(theta) = const
    + 2 [(g - h) cos(theta) + (e + f) sin(theta)]."""

    e: float
    f: float
    g: float
    h: float


def phase_coefficients(a_l, b_l, target, theta, n) -> PhaseCoefficients:
    """Coefficients of the objective restricted to atom n's phase.

    a_l, b_l are the layer's equivalent channels (K x N and N x K), target is
    the K x K matrix being fitted, theta the layer's current phases.
    """
    a_l = np.asarray(a_l)
    b_l = np.asarray(b_l)
    target = np.asarray(target)
    theta = np.asarray(theta, dtype=float)
    ln = np.outer(a_l[:, n], b_l[n, :])
    keep = np.arange(a_l.shape[1]) != n
    m = (a_l[:, keep] * np.exp(1j * theta[keep])[None, :]) @ b_l[keep, :]
    ge = np.vdot(ln, m)
    hf = np.sum(ln * target.conj())
    return PhaseCoefficients(e=ge.imag, f=hf.imag, g=ge.real, h=hf.real)


def phase_objective_term(coeffs: PhaseCoefficients, theta) -> np.ndarray | float:
    """The theta-dependent part of J: 2 [(g - h) cos(theta) + (e + f) sin(theta)]."""
    x = coeffs.g - coeffs.h
    y = coeffs.e + coeffs.f
    return 2.0 * (x * np.cos(theta) + y * np.sin(theta))


def closed_form_phase(coeffs: PhaseCoefficients, j_evaluator) -> float:
    """Stationary-point candidates arctan((e+f)/(g-h)) and +pi, picked by J.

    Raises DegenerateStationaryError when J does not depend on this phase;
    the caller should then keep the current value.
    """
    x = coeffs.g - coeffs.h
    y = coeffs.e + coeffs.f
    if x == 0.0 and y == 0.0:
        raise DegenerateStationaryError("objective is constant in this phase")
    theta1 = np.pi / 2.0 if x == 0.0 else float(np.arctan(y / x))
    theta1 = float(wrap_phase(theta1))
    theta2 = float(wrap_phase(theta1 + np.pi))
    return theta1 if j_evaluator(theta1) <= j_evaluator(theta2) else theta2


def optimal_alpha(g: np.ndarray) -> float:
    """Closed-form gain minimizing ||G - alpha I||_F^2: the mean of Re diag(G)."""
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"G must be square, got {g.shape}")
    return float(np.trace(g + g.conj().T).real / (2.0 * g.shape[0]))


def gd_step(y_offsets, gradients, eta, y_max) -> np.ndarray:
    """One projected descent step y <- clip(y - eta * grad, +-y_max).

    Non-finite gradients skip the step with a warning.
    """
    y_offsets = np.asarray(y_offsets, dtype=float)
    gradients = np.asarray(gradients, dtype=float)
    if not np.all(np.isfinite(gradients)):
        warnings.warn("non-finite shape gradient; skipping this step", RuntimeWarning)
        return y_offsets.copy()
    return project_offsets(y_offsets - eta * gradients, y_max)


def sweep_phases(state: CascadeState, h, w_list=None, layer: int = 1,
                 incremental: bool = False) -> None:
    """Run one Gauss-Seidel phase sweep over layer `layer` (1-based), in place."""
    if w_list is None:
        w_list = state.w_matrices()
    a, b = equivalent_channels(state, h, w_list, layer)
    theta = state.layers[layer - 1].theta.copy()
    core.sweep_phases(
        np.ascontiguousarray(a), np.ascontiguousarray(b), state.alpha, theta,
        incremental,
    )
    state.set_phases(layer - 1, theta)


# ---------------------------------------------------------------------------
# Shape gradients


def _row_distance_factor(state: CascadeState, layer: int) -> np.ndarray:
    """k_c * (y_dst - y_src) / d for the coupling into layer `layer` (1-based)."""
    k_c = 2.0 * np.pi / state.wavelength
    if layer == 1:
        src = state.source.positions
    else:
        src = state.layers[layer - 2].geometry.positions()
    dst = state.layers[layer - 1].geometry.positions()
    d = pairwise_distances(src, dst)
    return k_c * (dst[:, None, 1] - src[None, :, 1]) / d


def _user_vy(users) -> np.ndarray:
    _, u_y, _ = direction_cosines(users.theta, users.phi)
    return np.atleast_1d(u_y)


def shape_gradient_layer1(state: CascadeState, h, w_list=None, n: int = 0) -> float:
    """d J / d y_n for atom n of the inner layer of a two-layer cascade.

    Uses the frozen-amplitude approximation: only the propagation phase of
    the coupling coefficients varies with the displacement.
    """
    if state.n_layers != 2:
        raise ValueError("layer-1 gradient is defined for a two-layer cascade")
    if w_list is None:
        w_list = state.w_matrices()
    w1 = np.asarray(w_list[0].entries if hasattr(w_list[0], "entries") else w_list[0])
    w2 = np.asarray(w_list[1].entries if hasattr(w_list[1], "entries") else w_list[1])
    grads = core.get_backend("python").shape_grads_film_layer1(
        np.asarray(h),
        state.layers[1].phi(),
        w2,
        state.layers[0].phi(),
        w1,
        _row_distance_factor(state, 2),
        _row_distance_factor(state, 1),
        state.alpha,
        atoms=[n],
    )
    return float(grads[n])


def shape_gradient_layer2(state: CascadeState, h, w_list, users, n: int = 0) -> float:
    """d J / d y_n for atom n of the output layer of a two-layer cascade.

    The far-field steering term is exact; the inter-layer coupling term uses
    the frozen-amplitude approximation.
    """
    if state.n_layers != 2:
        raise ValueError("layer-2 gradient is defined for a two-layer cascade")
    if w_list is None:
        w_list = state.w_matrices()
    w1 = np.asarray(w_list[0].entries if hasattr(w_list[0], "entries") else w_list[0])
    w2 = np.asarray(w_list[1].entries if hasattr(w_list[1], "entries") else w_list[1])
    grads = core.get_backend("python").shape_grads_film_layer2(
        np.asarray(h),
        _user_vy(users),
        2.0 * np.pi / state.wavelength,
        state.layers[1].phi(),
        w2,
        state.layers[0].phi(),
        w1,
        _row_distance_factor(state, 2),
        state.alpha,
        atoms=[n],
    )
    return float(grads[n])


def _layer_shape_gradients(state: CascadeState, h, users, layer: int) -> np.ndarray:
    """All-atom gradient vector for one morphable layer (1-based index)."""
    w_list = state.w_matrices()
    w = [np.asarray(x.entries) for x in w_list]
    l_count = state.n_layers
    if l_count == 1:
        return core.shape_grads_fim(
            np.ascontiguousarray(h),
            _user_vy(users),
            2.0 * np.pi / state.wavelength,
            state.layers[0].phi(),
            np.ascontiguousarray(w[0]),
            np.ascontiguousarray(_row_distance_factor(state, 1)),
            state.alpha,
        )
    if l_count == 2 and layer == 1:
        return core.shape_grads_film_layer1(
            np.ascontiguousarray(h),
            state.layers[1].phi(),
            np.ascontiguousarray(w[1]),
            state.layers[0].phi(),
            np.ascontiguousarray(w[0]),
            np.ascontiguousarray(_row_distance_factor(state, 2)),
            np.ascontiguousarray(_row_distance_factor(state, 1)),
            state.alpha,
        )
    if l_count == 2 and layer == 2:
        return core.shape_grads_film_layer2(
            np.ascontiguousarray(h),
            _user_vy(users),
            2.0 * np.pi / state.wavelength,
            state.layers[1].phi(),
            np.ascontiguousarray(w[1]),
            state.layers[0].phi(),
            np.ascontiguousarray(w[0]),
            np.ascontiguousarray(_row_distance_factor(state, 2)),
            state.alpha,
        )
    raise NotImplementedError(
        f"shape gradients for layer {layer} of an {l_count}-layer cascade"
    )


# ---------------------------------------------------------------------------
# The alternating-optimization loop


@dataclass
class SubstepLog:
    """J before/after every phase and gain update, for monotonicity audits."""

    kinds: list[str] = field(default_factory=list)
    j_before: list[float] = field(default_factory=list)
    j_after: list[float] = field(default_factory=list)

    def add(self, kind: str, before: float, after: float) -> None:
        self.kinds.append(kind)
        self.j_before.append(before)
        self.j_after.append(after)


def _recorded_sweep(state: CascadeState, h, layer: int, log: SubstepLog) -> None:
    """Reference phase sweep that logs the exact J around every atom update."""
    a, b = equivalent_channels(state, h, None, layer)
    theta = state.layers[layer - 1].theta.copy()
    alpha = state.alpha
    target = alpha * np.eye(a.shape[0])

    def full_j(t):
        g = (a * np.exp(1j * t)[None, :]) @ b
        return float(np.sum(np.abs(g - target) ** 2))

    j_cur = full_j(theta)
    for n in range(theta.shape[0]):
        coeffs = phase_coefficients(a, b, target, theta, n)
        try:
            new = closed_form_phase(coeffs, lambda t: phase_objective_term(coeffs, t))
        except DegenerateStationaryError:
            continue
        theta[n] = new
        j_new = full_j(theta)
        log.add(f"phase[l={layer},n={n}]", j_cur, j_new)
        j_cur = j_new
    state.set_phases(layer - 1, theta)


def ao_fit(scenario: Scenario, state: CascadeState, config: OptimizerConfig) -> FitResult:
    """Fit the cascade to a scaled identity channel by alternating updates.

    Per iteration: phase sweeps over layers 1..L, then a projected-gradient
    shape step per morphable layer (rebuilding diffraction matrices, and the
    user channel when the output layer moves), then the closed-form gain.
    Stops after `max_iterations`, or earlier once an iteration's reduction of
    J drops below epsilon.

    The raw shape gradients are normalized by max(alpha^2 K, mean(beta^2) N)
    before the step, so that the Table-scale step size eta acts on a
    scale-free objective: J / ||alpha I||_F^2 once the gain is fitted, with
    the channel-power floor mean(beta^2) N keeping steps bounded while the
    gain is still collapsing or far from its working scale. See the README.
    """
    users = scenario.users
    k = users.n_users
    morphable = config.shape_updates
    if morphable is None:
        morphable = tuple(layer.geometry.y_max > 0 for layer in state.layers)
    if len(morphable) != state.n_layers:
        raise ValueError("shape_updates must carry one flag per layer")

    chan = user_channel(users, state.layers[-1].geometry, scenario.wavelength)
    h = chan.H
    # invariant under morphing: ||H||_F^2 / K, the channel power scale
    beta2n = float(np.mean(chan.beta**2)) * state.layers[-1].geometry.n_atoms
    log = SubstepLog() if config.record_substeps else None

    j_trace = np.empty(config.max_iterations)
    nmse_trace = np.empty(config.max_iterations)
    alpha_trace = np.empty(config.max_iterations)
    j_prev = None
    converged = False
    iterations = 0

    for it in range(config.max_iterations):
        for layer in range(1, state.n_layers + 1):
            if log is not None:
                _recorded_sweep(state, h, layer, log)
            else:
                sweep_phases(state, h, None, layer, config.incremental_sweep)

        for layer in range(1, state.n_layers + 1):
            if not morphable[layer - 1]:
                continue
            geom = state.layers[layer - 1].geometry
            grads = _layer_shape_gradients(state, h, users, layer)
            scale = max(state.alpha * state.alpha * k, beta2n)
            if scale > 0:
                grads = grads / scale
            state.set_offsets(
                layer - 1, gd_step(geom.y_offsets, grads, config.eta, geom.y_max)
            )
            if layer == state.n_layers:
                chan = user_channel(users, state.layers[-1].geometry, scenario.wavelength)
                h = chan.H

        g = end_to_end(h, beamformer(state))
        alpha_new = optimal_alpha(g)
        if log is not None:
            log.add("alpha", objective(g, state.alpha), objective(g, alpha_new))
        state.alpha = alpha_new

        j = objective(g, state.alpha)
        if not np.isfinite(j):
            raise NonFiniteObjectiveError(
                f"objective became non-finite at iteration {it + 1}"
            )
        j_trace[it] = j
        nmse_trace[it] = j / (state.alpha * state.alpha * k) if state.alpha != 0 else np.inf
        alpha_trace[it] = state.alpha
        iterations = it + 1
        if j_prev is not None and 0.0 <= j_prev - j < config.epsilon:
            converged = True
            break
        j_prev = j

    return FitResult(
        state=state,
        j_trace=j_trace[:iterations].copy(),
        nmse_trace=nmse_trace[:iterations].copy(),
        alpha_trace=alpha_trace[:iterations].copy(),
        iterations=iterations,
        converged=converged,
        substep_log=log,
    )
