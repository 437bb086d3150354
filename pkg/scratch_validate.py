"""Scratch validation of the core math before freezing tests."""
import numpy as np
import filmsim
from filmsim import core
from filmsim.cascade import CascadeState, Layer, beamformer, end_to_end, objective, equivalent_channels
from filmsim.geometry import build_layer_grid, build_source_array
from filmsim.optimizer import (phase_coefficients, closed_form_phase, phase_objective_term,
                               optimal_alpha, shape_gradient_layer1, shape_gradient_layer2,
                               _layer_shape_gradients, _row_distance_factor, _user_vy)
from filmsim.propagation import UserSet, user_channel, diffraction_matrix
from filmsim.scenario import Scenario

rng = np.random.default_rng(7)

# ---- 1. phase coefficients vs finite difference of J(theta_n)
K, N = 3, 6
A = rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))
B = rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))
alpha = 0.7
target = alpha * np.eye(K)
theta = rng.uniform(0, 2 * np.pi, N)

def J_of(theta_vec):
    g = (A * np.exp(1j * theta_vec)[None, :]) @ B
    return float(np.sum(np.abs(g - target) ** 2))

n = 2
co = phase_coefficients(A, B, target, theta, n)
h = 1e-6
tp, tm = theta.copy(), theta.copy()
tp[n] += h; tm[n] -= h
fd = (J_of(tp) - J_of(tm)) / (2 * h)
analytic = 2 * ((co.e + co.f) * np.cos(theta[n]) - (co.g - co.h) * np.sin(theta[n]))
print(f"1. dJ/dtheta FD={fd:.9f} analytic={analytic:.9f} relerr={abs(fd-analytic)/abs(fd):.2e}")

# check J(theta) = const + term
base = J_of(theta)
t2 = theta.copy(); t2[n] = 1.234
delta_pred = phase_objective_term(co, 1.234) - phase_objective_term(co, theta[n])
delta_true = J_of(t2) - base
print(f"   delta J pred={delta_pred:.9f} true={delta_true:.9f}")

# ---- 2. closed form vs dense grid
grid = np.linspace(0, 2 * np.pi, 100001)[:-1]
best_grid = None
tt = theta.copy()
vals = []
for g_ in (grid,):
    gph = np.exp(1j * g_)
    # J over grid using factorized form
    Tn = (A * np.exp(1j * theta)[None,:]) @ B - np.outer(A[:, n], B[n, :]) * np.exp(1j*theta[n])
    Ln = np.outer(A[:, n], B[n, :])
    Jg = np.array([float(np.sum(np.abs(Tn + Ln*p - target)**2)) for p in gph[::1000]])  # coarse check
star = closed_form_phase(co, lambda t: phase_objective_term(co, t))
tstar = theta.copy(); tstar[n] = star
grid_best_val = min(J_of(np.concatenate([theta[:n], [g_], theta[n+1:]])) for g_ in grid[::100])
print(f"2. closed-form J={J_of(tstar):.9f} coarse-grid best={grid_best_val:.9f} (closed <= grid? {J_of(tstar) <= grid_best_val + 1e-9})")

# ---- 3. optimal alpha vs grid
G = rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))
a_star = optimal_alpha(G)
agrid = np.linspace(a_star - 2, a_star + 2, 200001)
jvals = [objective(G, a) for a in agrid[::1000]]
print(f"3. alpha*={a_star:.6f}; J(alpha*)={objective(G, a_star):.6f} <= grid min {min(jvals):.6f}")

# ---- 4. sweep monotonicity + backend equivalence
theta_py = theta.copy()
theta_cy = theta.copy()
core.get_backend("python").sweep_phases(A, B, alpha, theta_py)
core.get_backend("compiled").sweep_phases(A, B, alpha, theta_cy)
print(f"4. sweep backends max|dtheta| = {np.max(np.abs(theta_py - theta_cy)):.3e}; J before={J_of(theta):.6f} after={J_of(theta_py):.6f}")
theta_inc = theta.copy()
core.get_backend("python").sweep_phases(A, B, alpha, theta_inc, True)
print(f"   incremental vs full max|dtheta| = {np.max(np.abs(theta_py - theta_inc)):.3e}")

# ---- 5. small FILM cascade: A^l Phi B^l = G identity, shape gradient FD checks
lam = 10.7e-3
spacing = lam / 2
g1 = build_layer_grid(2, 2, spacing, spacing, -5e-3, 2.4e-3)
g2 = build_layer_grid(2, 2, spacing, spacing, 0.0, 2.4e-3)
g1 = g1.with_offsets(rng.uniform(-2e-3, 2e-3, 4))
g2 = g2.with_offsets(rng.uniform(-2e-3, 2e-3, 4))
src = build_source_array(2, spacing, x=spacing/2, y=-10e-3, z_center=spacing/2)
users = UserSet(theta=[np.pi/6, np.pi/3], phi=[np.pi/3, np.pi/4], distance=[150.0, 150.0], exponent=2.5)
state = CascadeState(source=src,
                     layers=[Layer(g1, rng.uniform(0, 2*np.pi, 4)), Layer(g2, rng.uniform(0, 2*np.pi, 4))],
                     wavelength=lam, atom_area=spacing**2, alpha=3e-5)
H = user_channel(users, g2, lam).H
W = state.w_matrices()
G = end_to_end(H, beamformer(state, W))
for l in (1, 2):
    Al, Bl = equivalent_channels(state, H, W, l)
    recon = (Al * state.layers[l-1].phi()[None, :]) @ Bl
    print(f"5. A^{l} Phi B^{l} vs G rel err = {np.linalg.norm(recon - G)/np.linalg.norm(G):.2e}")

# frozen-amplitude surrogate FD for layer-1 gradient
kc = 2*np.pi/lam
def surrogate_J_layer1(delta, n):
    """Move atom n of layer 1 by delta; W amplitudes frozen, phases exact."""
    p1 = g1.positions(); p1n = p1.copy(); p1n[n,1] += delta
    p0 = src.positions; p2 = g2.positions()
    import filmsim.geometry as geo
    d01_0 = geo.pairwise_distances(p0, p1); d01_1 = geo.pairwise_distances(p0, p1n)
    d12_0 = geo.pairwise_distances(p1, p2); d12_1 = geo.pairwise_distances(p1n, p2)
    W1 = W[0].entries * np.exp(1j*kc*(d01_1 - d01_0))
    W2 = W[1].entries * np.exp(1j*kc*(d12_1 - d12_0))
    P = state.layers[1].phi()[:,None] * (W2 @ (state.layers[0].phi()[:,None] * W1))
    Gd = H @ P
    return float(np.sum(np.abs(Gd - state.alpha*np.eye(2))**2))

for n in (0, 3):
    h_ = 1e-9
    fd = (surrogate_J_layer1(h_, n) - surrogate_J_layer1(-h_, n)) / (2*h_)
    an = shape_gradient_layer1(state, H, W, n)
    print(f"6. layer1 grad atom {n}: FD={fd:.6e} analytic={an:.6e} rel={abs(fd-an)/max(abs(fd),1e-300):.2e}")

def surrogate_J_layer2(delta, n):
    p2 = g2.positions(); p2n = p2.copy(); p2n[n,1] += delta
    p1 = g1.positions()
    import filmsim.geometry as geo
    d12_0 = geo.pairwise_distances(p1, p2); d12_1 = geo.pairwise_distances(p1, p2n)
    W2 = W[1].entries * np.exp(1j*kc*(d12_1 - d12_0))
    g2n = g2.with_offsets(g2.y_offsets + delta*(np.arange(4)==n))
    Hn = user_channel(users, g2n, lam).H
    P = state.layers[1].phi()[:,None] * (W2 @ (state.layers[0].phi()[:,None] * W[0].entries))
    Gd = Hn @ P
    return float(np.sum(np.abs(Gd - state.alpha*np.eye(2))**2))

for n in (1, 2):
    h_ = 1e-9
    fd = (surrogate_J_layer2(h_, n) - surrogate_J_layer2(-h_, n)) / (2*h_)
    an = shape_gradient_layer2(state, H, W, users, n)
    print(f"7. layer2 grad atom {n}: FD={fd:.6e} analytic={an:.6e} rel={abs(fd-an)/max(abs(fd),1e-300):.2e}")

# backend equivalence for gradient kernels
for name, fn in [("layer1", "shape_grads_film_layer1"), ("layer2", "shape_grads_film_layer2")]:
    if name == "layer1":
        args = (np.ascontiguousarray(H), state.layers[1].phi(), np.ascontiguousarray(W[1].entries),
                state.layers[0].phi(), np.ascontiguousarray(W[0].entries),
                np.ascontiguousarray(_row_distance_factor(state, 2)),
                np.ascontiguousarray(_row_distance_factor(state, 1)), state.alpha)
    else:
        args = (np.ascontiguousarray(H), _user_vy(users), kc, state.layers[1].phi(),
                np.ascontiguousarray(W[1].entries), state.layers[0].phi(),
                np.ascontiguousarray(W[0].entries),
                np.ascontiguousarray(_row_distance_factor(state, 2)), state.alpha)
    gpy = getattr(core.get_backend("python"), fn)(*args)
    gcy = getattr(core.get_backend("compiled"), fn)(*args)
    rel = np.max(np.abs(gpy - gcy)) / max(np.max(np.abs(gpy)), 1e-300)
    print(f"8. {name} kernel python vs compiled rel = {rel:.2e}")
