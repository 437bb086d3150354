"""Compare shape-step normalizations on FILM and FIM dynamics."""
import numpy as np
import filmsim.optimizer as opt
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

# monkeypatch the normalization inside ao_fit by editing a module-level hook
import filmsim.propagation as prop

def run(kind, mode, iters=20):
    spec = ArchitectureSpec(kind=kind)
    state, _ = build_architecture(spec, scen)
    beta = prop.path_loss_amplitude(users4.distance, users4.exponent, lam)
    n_out = state.layers[-1].geometry.n_atoms
    k = users4.n_users
    import filmsim.optimizer as o

    orig = o._layer_shape_gradients
    def patched(st, h, us, layer):
        g = orig(st, h, us, layer)
        if mode == "alpha2K":
            s = st.alpha ** 2 * k
        elif mode == "beta2N":
            s = float(np.mean(beta ** 2)) * n_out
        elif mode == "beta2NK":
            s = float(np.mean(beta ** 2)) * n_out * k
        else:
            s = 1.0
        return g * (st.alpha ** 2 * k) / s  # undo ao_fit's alpha2K, apply s
    o._layer_shape_gradients = patched
    try:
        res = ao_fit(scen, state, OptimizerConfig(max_iterations=iters, eta=1e-4,
                                                  shape_updates=spec.morphable()))
    finally:
        o._layer_shape_gradients = orig
    off = np.concatenate([l.geometry.y_offsets for l in res.state.layers])
    return res, float(np.max(np.abs(off))) * 1e3

for mode in ("alpha2K", "beta2N", "beta2NK"):
    res, ymax = run("FILM", mode)
    tr = res.nmse_trace
    print(f"FILM {mode:8s}: nmse@3={tr[2]:.2e} @10={tr[9]:.2e} @20={tr[-1]:.2e} |y|max={ymax:.3f}mm")
for mode in ("alpha2K", "beta2N", "beta2NK"):
    res, ymax = run("FIM", mode)
    tr = res.nmse_trace
    print(f"FIM  {mode:8s}: nmse@3={tr[2]:.2e} @10={tr[9]:.2e} @20={tr[-1]:.2e} |y|max={ymax:.3f}mm  alpha={res.alpha_trace[-1]:.2e}")
