"""Channel construction: near-field layer coupling and far-field user links.

Adjacent planes are coupled by scalar Rayleigh-Sommerfeld diffraction
coefficients; users see a pure line-of-sight steering channel from the
output layer, scaled by a log-distance path loss.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import LayerGeometry, pairwise_distances

_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class DiffractionMatrix:
    """Complex coupling coefficients between two planes.

    Rows index destination atoms, columns index source elements.
    """

    entries: np.ndarray
    wavelength: float  # meters
    atom_area: float  # m^2

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class UserSet:
    """Downlink users given by direction, range, and a shared path-loss exponent."""

    theta: np.ndarray  # elevation angles, radians, each in [0, pi]
    phi: np.ndarray  # azimuth angles, radians, each in [0, pi]
    distance: np.ndarray  # ranges from the output layer, meters
    exponent: float  # path-loss exponent b

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        distance = np.atleast_1d(np.asarray(self.distance, dtype=float))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "distance", distance)
        k = theta.shape[0]
        if k < 1 or phi.shape[0] != k or distance.shape[0] != k:
            raise ValueError("theta, phi, distance must share a common length K >= 1")
        if np.any((theta < 0) | (theta > np.pi)) or np.any((phi < 0) | (phi > np.pi)):
            raise ValueError("angles must lie in [0, pi]")
        if np.any(distance <= 0):
            raise ValueError("user distances must be positive")

    @property
    def n_users(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class UserChannel:
    """Far-field channel H = diag(beta) A^H from the output layer to the users."""

    H: np.ndarray  # (K, N) complex
    beta: np.ndarray  # (K,) real amplitude gains


def diffraction_matrix(
    src: np.ndarray,
    dst: np.ndarray,
    wavelength: float,
    atom_area: float,
    amplitude_factor: float = 1.0,
    normal_axis: str = "y",
) -> DiffractionMatrix:
    """Rayleigh-Sommerfeld coupling between a source plane and a destination plane.

    Entry (n, m) is  factor * (A_t cos(chi) / d) * (1/(2 pi d) - j/lambda) * exp(j 2 pi d / lambda)
    where d is the source-to-destination distance and cos(chi) = |delta along the
    plane normal| / d. The planes are normal to `normal_axis`.

    Parameters
    ----------
    src : np.ndarray
        (S, 3) source element coordinates, meters.
    dst : np.ndarray
        (D, 3) destination atom coordinates, meters.
    wavelength : float
        Carrier wavelength, meters.
    atom_area : float
        Area A_t occupied by one meta-atom, m^2.
    amplitude_factor : float
        Extra real amplitude applied to every entry; sqrt(1 - rho) models a
        per-layer power attenuation ratio rho. Must lie in (0, 1].
    normal_axis : str
        Axis normal to both planes ('x', 'y' or 'z').
    """
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    if atom_area <= 0:
        raise ValueError(f"atom_area must be positive, got {atom_area}")
    if not 0 < amplitude_factor <= 1:
        raise ValueError(f"amplitude_factor must be in (0, 1], got {amplitude_factor}")
    axis = _AXIS_INDEX[normal_axis]
    src = np.atleast_2d(np.asarray(src, dtype=float))
    dst = np.atleast_2d(np.asarray(dst, dtype=float))
    d = pairwise_distances(src, dst)
    cos_chi = np.abs(dst[:, None, axis] - src[None, :, axis]) / d
    w = (
        amplitude_factor
        * (atom_area * cos_chi / d)
        * (1.0 / (2.0 * np.pi * d) - 1j / wavelength)
        * np.exp(2j * np.pi * d / wavelength)
    )
    return DiffractionMatrix(entries=w, wavelength=wavelength, atom_area=atom_area)


def direction_cosines(
    theta: float | np.ndarray, phi: float | np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit propagation-direction components (u_x, u_y, u_z) for given angles."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sin_t = np.sin(theta)
    return sin_t * np.cos(phi), sin_t * np.sin(phi), np.cos(theta)


def steering_vector(
    theta: float, phi: float, geom: LayerGeometry, wavelength: float
) -> np.ndarray:
    """Transmit steering vector from a layer toward direction (theta, phi).

    Factorizes as (a_z kron a_x) * a_y elementwise: the x and z progressions use
    the grid spacings, while a_y carries the per-atom absolute y-coordinates, so
    morphing the layer reshapes only a_y. Every entry has unit modulus.
    """
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    k_c = 2.0 * np.pi / wavelength
    u_x, u_y, u_z = direction_cosines(theta, phi)
    v_x = geom.d_x * u_x
    v_z = geom.d_z * u_z
    a_x = np.exp(-1j * k_c * v_x * np.arange(geom.n_x))
    a_z = np.exp(-1j * k_c * v_z * np.arange(geom.n_z))
    a_y = np.exp(-1j * k_c * u_y * geom.y_coords())
    return np.kron(a_z, a_x) * a_y


def array_response(users: UserSet, geom: LayerGeometry, wavelength: float) -> np.ndarray:
    """(N, K) matrix whose k-th column is the steering vector toward user k."""
    cols = [
        steering_vector(users.theta[k], users.phi[k], geom, wavelength)
        for k in range(users.n_users)
    ]
    return np.column_stack(cols)


def path_loss_amplitude(
    distance: float | np.ndarray, exponent: float, wavelength: float
) -> float | np.ndarray:
    """Linear amplitude gain beta for a log-distance path loss.

    The loss in dB is -20*log10(4 pi / lambda) - 10*b*log10(d); the returned
    amplitude is 10^(dB/20).
    """
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("distance must be positive")
    pl_db = -20.0 * np.log10(4.0 * np.pi / wavelength) - 10.0 * exponent * np.log10(distance)
    beta = 10.0 ** (pl_db / 20.0)
    return float(beta) if beta.ndim == 0 else beta


def user_channel(users: UserSet, geom: LayerGeometry, wavelength: float) -> UserChannel:
    """Assemble H = diag(beta) A^H from the output layer to all users."""
    a = array_response(users, geom, wavelength)
    beta = np.atleast_1d(path_loss_amplitude(users.distance, users.exponent, wavelength))
    return UserChannel(H=beta[:, None] * a.conj().T, beta=beta)
