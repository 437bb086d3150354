"""End-to-end beamformer assembly and the channel-fitting objective.

A cascade is the feed array followed by L phase-shifting layers. The
beamformer is P = Phi^L W^L ... Phi^1 W^1, where W^l couples layer l-1
(layer 0 being the feed array) to layer l and Phi^l holds layer l's
unit-modulus transmission coefficients.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import LayerGeometry, SourceArray
from .propagation import DiffractionMatrix, diffraction_matrix


def _entries(w) -> np.ndarray:
    return w.entries if isinstance(w, DiffractionMatrix) else np.asarray(w)


def wrap_phase(theta: np.ndarray) -> np.ndarray:
    """Wrap angles into [0, 2*pi)."""
    return np.mod(theta, 2.0 * np.pi)


@dataclass
class Layer:
    geometry: LayerGeometry
    theta: np.ndarray  # (N,) phase shifts, radians in [0, 2*pi)

    def __post_init__(self):
        self.theta = wrap_phase(np.asarray(self.theta, dtype=float))
        if self.theta.shape != (self.geometry.n_atoms,):
            raise ValueError(
                f"theta has shape {self.theta.shape}, expected ({self.geometry.n_atoms},)"
            )

    def phi(self) -> np.ndarray:
        """Diagonal of the layer's transmission matrix, e^{j theta}."""
        return np.exp(1j * self.theta)


@dataclass
class CascadeState:
    """Mutable state of the whole beamformer: geometries, phases, and gain.

    Diffraction matrices are cached and rebuilt lazily whenever a layer
    geometry changes; phase updates never invalidate them.
    """

    source: SourceArray
    layers: list[Layer]
    wavelength: float
    atom_area: float
    alpha: float = 1.0
    amplitude_factor: float = 1.0  # per-traversed-layer amplitude, sqrt(1 - rho)
    _w_cache: list[DiffractionMatrix] | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.layers) < 1:
            raise ValueError("cascade needs at least one layer")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def w_matrices(self) -> list[DiffractionMatrix]:
        """Diffraction matrices [W^1, ..., W^L], rebuilt if stale."""
        if self._w_cache is None:
            self._w_cache = self._build_w()
        return self._w_cache

    def _build_w(self) -> list[DiffractionMatrix]:
        out = []
        src = self.source.positions
        for layer in self.layers:
            dst = layer.geometry.positions()
            out.append(
                diffraction_matrix(
                    src, dst, self.wavelength, self.atom_area, self.amplitude_factor
                )
            )
            src = dst
        return out

    def set_phases(self, layer_index: int, theta: np.ndarray) -> None:
        """Replace layer phases (0-based index). Leaves the W cache intact."""
        layer = self.layers[layer_index]
        layer.theta = wrap_phase(np.asarray(theta, dtype=float))

    def set_offsets(self, layer_index: int, y_offsets: np.ndarray) -> None:
        """Replace a layer's y displacements and invalidate cached W matrices."""
        layer = self.layers[layer_index]
        self.layers[layer_index] = Layer(
            geometry=layer.geometry.with_offsets(y_offsets), theta=layer.theta
        )
        self._w_cache = None

    def verify_cache(self, tol: float = 1e-12) -> float:
        """Max deviation between cached and freshly built W matrices."""
        cached = self.w_matrices()
        fresh = self._build_w()
        worst = 0.0
        for wc, wf in zip(cached, fresh):
            scale = max(np.max(np.abs(wf.entries)), 1.0)
            worst = max(worst, float(np.max(np.abs(wc.entries - wf.entries))) / scale)
        if worst > tol:
            raise AssertionError(f"stale diffraction cache: deviation {worst:g} > {tol:g}")
        return worst

    def snapshot(self) -> "CascadeState":
        """Independent value copy safe for concurrent read-only evaluation."""
        return CascadeState(
            source=self.source,
            layers=[Layer(l.geometry, l.theta.copy()) for l in self.layers],
            wavelength=self.wavelength,
            atom_area=self.atom_area,
            alpha=self.alpha,
            amplitude_factor=self.amplitude_factor,
            _w_cache=self._w_cache,
        )


@dataclass
class FitResult:
    """Converged cascade plus per-iteration traces."""

    state: CascadeState
    j_trace: np.ndarray
    nmse_trace: np.ndarray
    alpha_trace: np.ndarray
    iterations: int
    converged: bool  # True when the epsilon rule stopped the loop early
    substep_log: object = None  # per-update J audit when requested


def beamformer(state: CascadeState, w_list=None) -> np.ndarray:
    """Wave-domain beamforming matrix P = Phi^L W^L ... Phi^1 W^1."""
    if w_list is None:
        w_list = state.w_matrices()
    if len(w_list) != state.n_layers:
        raise ValueError(f"need {state.n_layers} W matrices, got {len(w_list)}")
    p = None
    for layer, w in zip(state.layers, w_list):
        w = _entries(w)
        if p is None:
            p = layer.phi()[:, None] * w
        else:
            if w.shape[1] != p.shape[0]:
                raise ValueError(f"dimension mismatch: W is {w.shape}, P is {p.shape}")
            p = layer.phi()[:, None] * (w @ p)
    return p


def end_to_end(h: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Equivalent channel G = H P."""
    h = np.asarray(h)
    p = np.asarray(p)
    if h.shape[1] != p.shape[0]:
        raise ValueError(f"dimension mismatch: H is {h.shape}, P is {p.shape}")
    return h @ p


def objective(g: np.ndarray, alpha: float) -> float:
    """Channel-fitting objective J = ||G - alpha I||_F^2."""
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"G must be square, got {g.shape}")
    c = g - alpha * np.eye(g.shape[0])
    return float(np.sum(np.abs(c) ** 2))


def equivalent_channels(
    state: CascadeState, h: np.ndarray, w_list=None, layer: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Per-layer factorization (A^l, B^l) with A^l Phi^l B^l = G.

    `layer` is 1-based. A^l collects everything between layer l's phases and
    the users (A^L = H); B^l collects everything from the feed array up to and
    including W^l (B^1 = W^1).
    """
    if w_list is None:
        w_list = state.w_matrices()
    l_count = state.n_layers
    if not 1 <= layer <= l_count:
        raise IndexError(f"layer {layer} out of range [1, {l_count}]")
    w = [_entries(x) for x in w_list]
    a = np.asarray(h)
    for j in range(l_count - 1, layer - 1, -1):
        a = (a * state.layers[j].phi()[None, :]) @ w[j]
    b = w[0]
    for j in range(1, layer):
        b = w[j] @ (state.layers[j - 1].phi()[:, None] * b)
    return a, b
