"""FD-check the single-layer (FIM) gradient kernel + study FIM fit dynamics."""
import numpy as np
from filmsim import core
from filmsim.cascade import CascadeState, Layer, beamformer, end_to_end, objective
from filmsim.geometry import build_layer_grid, build_source_array, pairwise_distances
from filmsim.optimizer import OptimizerConfig, ao_fit, _row_distance_factor, _user_vy
from filmsim.propagation import UserSet, user_channel
from filmsim.scenario import Scenario
from filmsim.metrics import dbm_to_watt
from filmsim.baselines import ArchitectureSpec, build_architecture

rng = np.random.default_rng(3)
lam = 10.7e-3
spacing = lam / 2

# small FIM instance
g1 = build_layer_grid(3, 3, spacing, spacing, 0.0, 2.4e-3).with_offsets(rng.uniform(-2e-3, 2e-3, 9))
src = build_source_array(2, spacing, x=spacing, y=-10e-3, z_center=spacing)
users = UserSet(theta=[np.pi/6, 2.2], phi=[np.pi/3, 1.1], distance=[150.0, 120.0], exponent=2.5)
state = CascadeState(source=src, layers=[Layer(g1, rng.uniform(0, 2*np.pi, 9))],
                     wavelength=lam, atom_area=spacing**2, alpha=2e-5)
H = user_channel(users, g1, lam).H
W = state.w_matrices()
kc = 2 * np.pi / lam

def surrogate_J(delta, n):
    p1 = g1.positions(); p1n = p1.copy(); p1n[n, 1] += delta
    p0 = src.positions
    d0 = pairwise_distances(p0, p1); d1 = pairwise_distances(p0, p1n)
    W1 = W[0].entries * np.exp(1j * kc * (d1 - d0))
    g1n = g1.with_offsets(g1.y_offsets + delta * (np.arange(9) == n))
    Hn = user_channel(users, g1n, lam).H
    G = Hn @ (state.layers[0].phi()[:, None] * W1)
    return float(np.sum(np.abs(G - state.alpha * np.eye(2)) ** 2))

args = (np.ascontiguousarray(H), _user_vy(users), kc, state.layers[0].phi(),
        np.ascontiguousarray(W[0].entries),
        np.ascontiguousarray(_row_distance_factor(state, 1)), state.alpha)
gpy = core.get_backend("python").shape_grads_fim(*args)
gcy = core.get_backend("compiled").shape_grads_fim(*args)
print("fim kernel py-vs-cy:", np.max(np.abs(gpy - gcy)))
for n in (0, 4, 8):
    h_ = 1e-9
    fd = (surrogate_J(h_, n) - surrogate_J(-h_, n)) / (2 * h_)
    print(f"fim grad atom {n}: FD={fd:.6e} analytic={gpy[n]:.6e} rel={abs(fd-gpy[n])/max(abs(fd),1e-300):.2e}")

# --- now study the full-size FIM fit dynamics
users4 = UserSet(theta=[np.pi/6, np.pi/6, np.pi/3, 3*np.pi/4],
                 phi=[np.pi/3, 2*np.pi/3, np.pi/4, np.pi/2],
                 distance=[150.0]*4, exponent=2.5)
scen = Scenario(wavelength=lam, users=users4, p_total=dbm_to_watt(30.0),
                noise_power=dbm_to_watt(-125.0))

fim = ArchitectureSpec(kind="FIM")
res = ao_fit(scen, build_architecture(fim, scen)[0],
             OptimizerConfig(max_iterations=20, eta=1e-4, shape_updates=(True,)))
print("FIM nmse trace:", " ".join(f"{v:.2e}" for v in res.nmse_trace))
print("FIM alpha trace:", " ".join(f"{v:.2e}" for v in res.alpha_trace))
off = res.state.layers[0].geometry.y_offsets
print(f"FIM |y|: max={np.max(np.abs(off))*1e3:.3f}mm mean={np.mean(np.abs(off))*1e3:.3f}mm")

# phase-only FIM for reference
res0 = ao_fit(scen, build_architecture(fim, scen)[0],
              OptimizerConfig(max_iterations=20, eta=1e-4, shape_updates=(False,)))
print("FIM phase-only nmse:", " ".join(f"{v:.2e}" for v in res0.nmse_trace[-5:]))
