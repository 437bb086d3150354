"""Test hybrid step scale max(alpha^2 K, beta^2 N) and N-sweep behavior."""
import time
import numpy as np
import filmsim.optimizer as o
import filmsim.propagation as prop
from filmsim.baselines import ArchitectureSpec, build_architecture
from filmsim.metrics import dbm_to_watt
from filmsim.optimizer import OptimizerConfig, ao_fit
from filmsim.propagation import UserSet
from filmsim.scenario import Scenario

lam = 10.7e-3
users4 = UserSet(theta=[np.pi/6, np.pi/6, np.pi/3, 3*np.pi/4],
                 phi=[np.pi/3, 2*np.pi/3, np.pi/4, np.pi/2],
                 distance=[150.0]*4, exponent=2.5)
scen = Scenario(wavelength=lam, users=users4, p_total=dbm_to_watt(30.0),
                noise_power=dbm_to_watt(-125.0))
beta = prop.path_loss_amplitude(150.0, 2.5, lam)

orig = o._layer_shape_gradients

def make_patched(n_out, k):
    def patched(st, h, us, layer):
        g = orig(st, h, us, layer)
        s = max(st.alpha ** 2 * k, beta ** 2 * n_out)
        return g * (st.alpha ** 2 * k) / s
    return patched

def run(kind, n_side=10, iters=20, shape=None):
    spec = ArchitectureSpec(kind=kind, n_x=n_side, n_z=n_side)
    state, _ = build_architecture(spec, scen)
    o._layer_shape_gradients = make_patched(state.layers[-1].geometry.n_atoms, 4)
    try:
        t0 = time.perf_counter()
        res = ao_fit(scen, state, OptimizerConfig(
            max_iterations=iters, eta=1e-4,
            shape_updates=shape if shape is not None else spec.morphable()))
        dt = time.perf_counter() - t0
    finally:
        o._layer_shape_gradients = orig
    off = np.concatenate([l.geometry.y_offsets for l in res.state.layers])
    return res, float(np.max(np.abs(off))) * 1e3, dt

for kind in ("FILM", "FIM"):
    res, ymax, dt = run(kind)
    tr = res.nmse_trace
    print(f"{kind} hybrid: nmse@3={tr[2]:.2e} @10={tr[9]:.2e} @20={tr[-1]:.2e} "
          f"|y|max={ymax:.3f}mm alpha={res.alpha_trace[-1]:.2e} t={dt:.2f}s")

print()
for n_side in (4, 6, 8, 10):
    res, ymax, dt = run("FILM", n_side=n_side)
    print(f"FILM N={n_side*n_side:4d}: final nmse={res.nmse_trace[-1]:.3e} alpha={res.alpha_trace[-1]:.2e} t={dt:.2f}s per-iter={dt/20*1000:.1f}ms")

print()
# phase-only at several N (criterion-2-adjacent behavior)
for n_side in (4, 6, 8, 10):
    res, ymax, dt = run("FILM", n_side=n_side, shape=(False, False))
    print(f"SIM-2 N={n_side*n_side:4d}: final nmse={res.nmse_trace[-1]:.3e}")

print()
# criterion 10 raw data: per-iteration time across N
for n_side in (5, 10, 15, 20):
    _, _, t1 = run("FILM", n_side=n_side, iters=1)
    _, _, t3 = run("FILM", n_side=n_side, iters=3)
    per = (t3 - t1) / 2
    print(f"N={n_side*n_side:4d}: t1={t1:.3f}s t3={t3:.3f}s per-iter={per*1000:.1f}ms")
