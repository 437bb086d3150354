"""Link-level evaluation: fitting error, achievable rates, and QPSK BER.

All metrics treat the fitted end-to-end channel G against the scaled
identity alpha*I: the k-th row of C = G - alpha*I carries user k's gain
mismatch and inter-stream interference.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, per-user noise powers, and the per-stream allocation."""

    p_total: float  # total transmit power, watts
    sigma2: np.ndarray  # (K,) per-user noise powers, watts
    powers: np.ndarray  # (K,) per-stream transmit powers, watts

    def __post_init__(self):
        sigma2 = np.atleast_1d(np.asarray(self.sigma2, dtype=float))
        powers = np.atleast_1d(np.asarray(self.powers, dtype=float))
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "powers", powers)
        if sigma2.shape != powers.shape:
            raise ValueError("sigma2 and powers must share length K")
        if np.any(sigma2 < 0) or np.any(powers < 0):
            raise ValueError("powers and noise powers must be >= 0")
        if powers.sum() > self.p_total + 1e-12:
            raise ValueError("per-stream powers exceed the total budget")

    @property
    def n_users(self) -> int:
        return self.sigma2.shape[0]


@dataclass(frozen=True)
class RateReport:
    per_user_rates: np.ndarray  # bits/s/Hz, (K,)
    sum_rate: float  # bits/s/Hz
    upper_bound: float  # bits/s/Hz, deviation-free value


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def uniform_budget(p_total: float, sigma2: float | np.ndarray, n_users: int) -> LinkBudget:
    """Equal per-stream split of the total power."""
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (n_users,)).copy()
    return LinkBudget(
        p_total=p_total, sigma2=sigma2, powers=np.full(n_users, p_total / n_users)
    )


def nmse(g: np.ndarray, alpha: float) -> float:
    """Fitting error ||G - alpha I||_F^2 normalized by ||alpha I||_F^2."""
    if alpha == 0:
        raise ValueError("nmse is undefined for alpha = 0")
    g = np.asarray(g)
    k = g.shape[0]
    c = g - alpha * np.eye(k)
    return float(np.sum(np.abs(c) ** 2) / (alpha * alpha * k))


def sum_rate(g: np.ndarray, alpha: float, budget: LinkBudget) -> RateReport:
    """Achievable per-user and sum rates under imperfect channel fitting.

    User k's rate is log2(1 + alpha^2 P_k / (||c_k||^2 + sigma_k^2)), where
    c_k is the full k-th row of C = G - alpha I. The upper bound is the
    deviation-free (C = 0) value with the same power allocation.
    """
    g = np.asarray(g)
    k = g.shape[0]
    if budget.n_users != k:
        raise ValueError(f"budget is for {budget.n_users} users, channel has {k}")
    c = g - alpha * np.eye(k)
    row_power = np.sum(np.abs(c) ** 2, axis=1)
    signal = alpha * alpha * budget.powers
    rates = np.log2(1.0 + signal / (row_power + budget.sigma2))
    bound = float(np.sum(np.log2(1.0 + signal / budget.sigma2)))
    return RateReport(per_user_rates=rates, sum_rate=float(rates.sum()), upper_bound=bound)


def water_filling(alpha: float, sigma2: np.ndarray, p_total: float) -> np.ndarray:
    """Per-stream powers maximizing the deviation-free sum rate.

    Solves P_k = max(0, mu - sigma_k^2 / alpha^2) with the water level mu
    chosen by bisection so that sum(P_k) = p_total.

    Parameters
    ----------
    alpha : float
        Common channel gain (nonzero).
    sigma2 : np.ndarray
        (K,) per-user noise powers, watts.
    p_total : float
        Total transmit power, watts.

    Returns
    -------
    np.ndarray
        (K,) nonnegative powers summing to p_total.
    """
    if p_total <= 0:
        raise ValueError("p_total must be positive")
    if alpha == 0:
        raise ValueError("water filling is undefined for alpha = 0")
    ratio = np.atleast_1d(np.asarray(sigma2, dtype=float)) / (alpha * alpha)
    lo = float(ratio.min())
    hi = lo + p_total
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        total = np.maximum(0.0, mu - ratio).sum()
        if total > p_total:
            hi = mu
        else:
            lo = mu
    powers = np.maximum(0.0, mu - ratio)
    active = powers > 0
    # distribute the bisection residual as a uniform water-level shift
    powers[active] += (p_total - powers.sum()) / active.sum()
    return powers


_QPSK_SCALE = 1.0 / np.sqrt(2.0)
_BER_CHUNK = 1 << 18  # symbols per substream; fixed so results never depend on worker count


def ber_monte_carlo(
    g: np.ndarray,
    alpha: float,
    budget: LinkBudget,
    n_symbols: int,
    seed: int,
    equalize_by: str = "alpha",
) -> tuple[np.ndarray, float]:
    """Monte Carlo QPSK bit error rate over the fitted channel.

    Each trial sends one Gray-mapped unit-energy QPSK symbol per stream with
    powers from the budget through G, adds circularly-symmetric Gaussian
    noise, equalizes user k by the known scalar alpha*sqrt(P_k) (or by the
    realized diagonal G_kk when equalize_by='realized'), and slices.

    Trials are generated in fixed-size substreams seeded by spawning from
    `seed`, so results are identical no matter how the work is partitioned.

    Returns
    -------
    (np.ndarray, float)
        Per-user BERs, shape (K,), and their average.
    """
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    if equalize_by not in ("alpha", "realized"):
        raise ValueError(f"unknown equalizer {equalize_by!r}")
    g = np.asarray(g, dtype=complex)
    k = g.shape[0]
    if budget.n_users != k:
        raise ValueError(f"budget is for {budget.n_users} users, channel has {k}")
    amp = np.sqrt(budget.powers)
    gain = np.diag(g) if equalize_by == "realized" else np.full(k, alpha, dtype=complex)
    eq = gain * amp
    if np.any(eq == 0):
        raise ValueError("zero equalizer gain; cannot slice")
    noise_amp = np.sqrt(budget.sigma2 / 2.0)
    gt = (g * amp[None, :]).T  # (j, k): symbol j scaled, received at user k

    n_chunks = (n_symbols + _BER_CHUNK - 1) // _BER_CHUNK
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    errors = np.zeros(k, dtype=np.int64)
    remaining = n_symbols
    for ss in streams:
        n = min(_BER_CHUNK, remaining)
        remaining -= n
        rng = np.random.default_rng(ss)
        bits = rng.integers(0, 2, size=(n, k, 2), dtype=np.int8)
        symbols = ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) * _QPSK_SCALE
        received = symbols @ gt
        received += rng.standard_normal((n, k)) * noise_amp
        received += 1j * rng.standard_normal((n, k)) * noise_amp
        est = received / eq
        errors += np.sum((est.real < 0) != bits[..., 0], axis=0)
        errors += np.sum((est.imag < 0) != bits[..., 1], axis=0)
    per_user = errors / (2.0 * n_symbols)
    return per_user, float(per_user.mean())
