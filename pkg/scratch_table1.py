"""Empirical check of the Table-scale FILM scenario: convergence + scaling."""
import time
import numpy as np
from filmsim.baselines import ArchitectureSpec, build_architecture, fit_architecture, mimo_zf_baseline
from filmsim.optimizer import OptimizerConfig, ao_fit
from filmsim.propagation import UserSet
from filmsim.scenario import Scenario
from filmsim.metrics import dbm_to_watt, sum_rate, uniform_budget

lam = 10.7e-3
users = UserSet(
    theta=[np.pi/6, np.pi/6, np.pi/3, 3*np.pi/4],
    phi=[np.pi/3, 2*np.pi/3, np.pi/4, np.pi/2],
    distance=[150.0]*4,
    exponent=2.5,
)
scen = Scenario(wavelength=lam, users=users, p_total=dbm_to_watt(30.0),
                noise_power=dbm_to_watt(-125.0))

cfg = OptimizerConfig(max_iterations=20, eta=1e-4)

t0 = time.perf_counter()
film = fit_architecture(ArchitectureSpec(kind="FILM"), scen, cfg)
t1 = time.perf_counter()
print(f"FILM fit: {t1-t0:.2f}s  iters={film.iterations}")
print("  nmse trace:", " ".join(f"{v:.3e}" for v in film.nmse_trace))
print("  alpha trace:", " ".join(f"{v:.3e}" for v in film.alpha_trace[:6]), "...")
print(f"  final J={film.j_trace[-1]:.3e} nmse={film.nmse_trace[-1]:.3e} alpha={film.alpha_trace[-1]:.3e}")
off = np.concatenate([l.geometry.y_offsets for l in film.state.layers])
print(f"  |y| stats: max={np.max(np.abs(off))*1e3:.3f}mm mean={np.mean(np.abs(off))*1e3:.3f}mm")

# two-layer phase-only baseline (shapes off)
t0 = time.perf_counter()
sim2 = fit_architecture(ArchitectureSpec(kind="FILM"), scen,
                        OptimizerConfig(max_iterations=20, eta=1e-4, shape_updates=(False, False)))
t1 = time.perf_counter()
print(f"SIM-2 (phase-only) fit: {t1-t0:.2f}s final nmse={sim2.nmse_trace[-1]:.3e}")

# FIM
t0 = time.perf_counter()
fim = fit_architecture(ArchitectureSpec(kind="FIM"), scen, cfg)
t1 = time.perf_counter()
print(f"FIM fit: {t1-t0:.2f}s final nmse={fim.nmse_trace[-1]:.3e} alpha={fim.alpha_trace[-1]:.3e}")

# SIM-7
t0 = time.perf_counter()
sim7 = fit_architecture(ArchitectureSpec(kind="SIM"), scen, cfg)
t1 = time.perf_counter()
print(f"SIM-7 fit: {t1-t0:.2f}s final nmse={sim7.nmse_trace[-1]:.3e} alpha={sim7.alpha_trace[-1]:.3e}")

# MIMO
mimo = mimo_zf_baseline(scen)
print(f"MIMO-ZF: alpha={mimo.alpha:.3e} sum_rate={mimo.rates.sum_rate:.2f} bound={mimo.rates.upper_bound:.2f}")

# sum rates
budget = scen.uniform_budget()
from filmsim.cascade import beamformer, end_to_end
for name, fit in [("FILM", film), ("SIM-2", sim2), ("FIM", fim), ("SIM-7", sim7)]:
    G = end_to_end(
        __import__("filmsim.propagation", fromlist=["user_channel"]).user_channel(
            users, fit.state.layers[-1].geometry, lam).H,
        beamformer(fit.state))
    rep = sum_rate(G, fit.state.alpha, budget)
    print(f"  {name}: sum_rate={rep.sum_rate:.2f} bound={rep.upper_bound:.2f} nmse={fit.nmse_trace[-1]:.2e} alpha={fit.state.alpha:.3e}")
