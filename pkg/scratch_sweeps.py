"""Pin down y_max monotonicity + attenuation ordering before freezing tests."""
import numpy as np
import filmsim.optimizer as o
import filmsim.propagation as prop
from filmsim.baselines import ArchitectureSpec, build_architecture, mimo_zf_baseline
from filmsim.cascade import beamformer, end_to_end
from filmsim.metrics import dbm_to_watt, sum_rate
from filmsim.optimizer import OptimizerConfig, ao_fit
from filmsim.propagation import UserSet, user_channel
from filmsim.scenario import Scenario

lam = 10.7e-3
users4 = UserSet(theta=[np.pi/6, np.pi/6, np.pi/3, 3*np.pi/4],
                 phi=[np.pi/3, 2*np.pi/3, np.pi/4, np.pi/2],
                 distance=[150.0]*4, exponent=2.5)
scen = Scenario(wavelength=lam, users=users4, p_total=dbm_to_watt(30.0),
                noise_power=dbm_to_watt(-125.0))
beta = prop.path_loss_amplitude(150.0, 2.5, lam)
orig = o._layer_shape_gradients

def hybrid(n_out, k):
    def patched(st, h, us, layer):
        g = orig(st, h, us, layer)
        s = max(st.alpha ** 2 * k, beta ** 2 * n_out)
        return g * (st.alpha ** 2 * k) / s
    return patched

def fit(spec, shape=None):
    state, _ = build_architecture(spec, scen)
    o._layer_shape_gradients = hybrid(state.layers[-1].geometry.n_atoms, 4)
    try:
        res = ao_fit(scen, state, OptimizerConfig(max_iterations=20, eta=1e-4,
                     shape_updates=shape if shape is not None else spec.morphable()))
    finally:
        o._layer_shape_gradients = orig
    return res

def rate_of(res):
    h = user_channel(users4, res.state.layers[-1].geometry, lam).H
    g = end_to_end(h, beamformer(res.state))
    return sum_rate(g, res.state.alpha, scen.uniform_budget()).sum_rate

print("y_max sweep (FILM, N=100):")
for ym in (0.0, 0.6e-3, 1.2e-3, 2.4e-3):
    res = fit(ArchitectureSpec(kind="FILM", y_max=ym),
              shape=(ym > 0, ym > 0))
    print(f"  y_max={ym*1e3:.1f}mm: nmse={res.nmse_trace[-1]:.3e} rate={rate_of(res):.2f}")

print("\nattenuation (rho=0 vs 0.1):")
for kind in ("FILM", "SIM", "FIM"):
    r0 = fit(ArchitectureSpec(kind=kind, rho=0.0))
    r1 = fit(ArchitectureSpec(kind=kind, rho=0.1))
    print(f"  {kind}: rate(rho=0)={rate_of(r0):.2f} rate(rho=0.1)={rate_of(r1):.2f} "
          f"loss={rate_of(r0)-rate_of(r1):.2f} nmse0={r0.nmse_trace[-1]:.1e} nmse1={r1.nmse_trace[-1]:.1e}")
mimo = mimo_zf_baseline(scen)
print(f"  MIMO: rate={mimo.rates.sum_rate:.2f} (rho-independent)")
