"""Top-level experiment description shared by the optimizer, baselines and CLI."""

from dataclasses import dataclass

import numpy as np

from .metrics import LinkBudget
from .propagation import UserSet


@dataclass(frozen=True)
class Scenario:
    """Carrier, user set, and link powers for one experiment."""

    wavelength: float  # meters
    users: UserSet
    p_total: float  # total transmit power, watts
    noise_power: float | np.ndarray  # per-user noise power(s), watts

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.p_total <= 0:
            raise ValueError("p_total must be positive")

    @property
    def n_users(self) -> int:
        return self.users.n_users

    @property
    def n_feeds(self) -> int:
        # one RF chain per user throughout
        return self.users.n_users

    def noise_vector(self) -> np.ndarray:
        return np.broadcast_to(
            np.asarray(self.noise_power, dtype=float), (self.n_users,)
        ).copy()

    def uniform_budget(self) -> LinkBudget:
        k = self.n_users
        return LinkBudget(
            p_total=self.p_total,
            sigma2=self.noise_vector(),
            powers=np.full(k, self.p_total / k),
        )
