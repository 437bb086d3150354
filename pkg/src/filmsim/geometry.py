"""Spatial layouts of the feed array and metasurface layers.

Meta-atoms sit on a fixed x-z grid; only their y-coordinate is tunable
(the morphing axis). All lengths are stored in meters.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np


class CoincidentPointsError(ValueError):
    """Two points at zero distance, which the propagation model cannot handle."""


class Position(NamedTuple):
    x: float  # meters
    y: float  # meters
    z: float  # meters


@dataclass(frozen=True)
class LayerGeometry:
    """One metasurface layer: a rigid x-z grid with per-atom y displacements.

    Atom ordering is row-major with x fastest: atom n has grid indices
    ix = n % n_x, iz = n // n_x, so x = ix*d_x and z = iz*d_z.
    """

    n_x: int
    n_z: int
    d_x: float  # atom spacing along x (meters)
    d_z: float  # atom spacing along z (meters)
    y_center: float  # rest-plane y-coordinate (meters)
    y_max: float  # maximum |displacement| from the rest plane (meters)
    y_offsets: np.ndarray = field(repr=False)  # shape (N,), meters

    def __post_init__(self):
        if self.n_x < 1 or self.n_z < 1:
            raise ValueError(f"grid counts must be >= 1, got {self.n_x}x{self.n_z}")
        if self.d_x <= 0 or self.d_z <= 0:
            raise ValueError(f"spacings must be positive, got d_x={self.d_x}, d_z={self.d_z}")
        if self.y_max < 0:
            raise ValueError(f"y_max must be >= 0, got {self.y_max}")
        offsets = np.asarray(self.y_offsets, dtype=float)
        object.__setattr__(self, "y_offsets", offsets)
        if offsets.shape != (self.n_atoms,):
            raise ValueError(
                f"y_offsets has length {offsets.shape}, expected ({self.n_atoms},)"
            )
        if np.any(np.abs(offsets) > self.y_max + 1e-15):
            raise ValueError("y_offsets exceed the morphing bound y_max")

    @property
    def n_atoms(self) -> int:
        return self.n_x * self.n_z

    def grid_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """(ix, iz) index arrays for all atoms in storage order."""
        n = np.arange(self.n_atoms)
        return n % self.n_x, n // self.n_x

    def positions(self) -> np.ndarray:
        """(N, 3) array of atom coordinates in meters."""
        ix, iz = self.grid_indices()
        out = np.empty((self.n_atoms, 3))
        out[:, 0] = ix * self.d_x
        out[:, 1] = self.y_center + self.y_offsets
        out[:, 2] = iz * self.d_z
        return out

    def y_coords(self) -> np.ndarray:
        """Absolute y-coordinates y_center + y_offsets, shape (N,)."""
        return self.y_center + self.y_offsets

    def with_offsets(self, y_offsets: np.ndarray) -> "LayerGeometry":
        """Copy of this layer with new per-atom displacements."""
        return replace(self, y_offsets=np.asarray(y_offsets, dtype=float))

    def grid_center_xz(self) -> tuple[float, float]:
        """(x, z) of the grid's geometric center."""
        return (self.n_x - 1) * self.d_x / 2.0, (self.n_z - 1) * self.d_z / 2.0


@dataclass(frozen=True)
class SourceArray:
    """Feed antenna array: a uniform line along z at fixed x and y."""

    positions: np.ndarray  # shape (M, 3), meters

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", pos)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError(f"positions must be (M, 3) with M >= 1, got {pos.shape}")
        if pos.shape[0] > 1:
            if np.ptp(pos[:, 0]) != 0 or np.ptp(pos[:, 1]) != 0:
                raise ValueError("all antennas must share x and y coordinates")
            dz = np.diff(pos[:, 2])
            if np.any(dz <= 0) or not np.allclose(dz, dz[0], rtol=1e-12, atol=0):
                raise ValueError("antenna z-coordinates must increase uniformly")

    @property
    def n_antennas(self) -> int:
        return self.positions.shape[0]


def build_layer_grid(
    n_x: int, n_z: int, d_x: float, d_z: float, y_center: float, y_max: float
) -> LayerGeometry:
    """Build a flat layer (all y displacements zero)."""
    return LayerGeometry(
        n_x=n_x, n_z=n_z, d_x=d_x, d_z=d_z, y_center=y_center, y_max=y_max,
        y_offsets=np.zeros(n_x * n_z),
    )


def build_source_array(
    m: int, spacing: float, x: float, y: float, z_center: float
) -> SourceArray:
    """Build the feed array: m antennas along z, centered on z_center."""
    if m < 1:
        raise ValueError(f"antenna count must be >= 1, got {m}")
    if spacing <= 0:
        raise ValueError(f"antenna spacing must be positive, got {spacing}")
    z = z_center + (np.arange(m) - (m - 1) / 2.0) * spacing
    pos = np.column_stack([np.full(m, x), np.full(m, y), z])
    return SourceArray(positions=pos)


def atom_position(geom: LayerGeometry, n: int) -> Position:
    """Coordinates of atom n (0-based, row-major with x fastest)."""
    if not 0 <= n < geom.n_atoms:
        raise IndexError(f"atom index {n} out of range [0, {geom.n_atoms})")
    ix = n % geom.n_x
    iz = n // geom.n_x
    return Position(ix * geom.d_x, geom.y_center + geom.y_offsets[n], iz * geom.d_z)


def project_offsets(y_offsets: np.ndarray, y_max: float) -> np.ndarray:
    """Clamp displacements into [-y_max, +y_max]."""
    return np.clip(np.asarray(y_offsets, dtype=float), -y_max, y_max)


def pairwise_distances(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Euclidean distances from every source point to every destination point.

    Parameters
    ----------
    src : np.ndarray
        (S, 3) source coordinates in meters.
    dst : np.ndarray
        (D, 3) destination coordinates in meters.

    Returns
    -------
    np.ndarray
        (D, S) matrix; entry (n, m) is ||dst[n] - src[m]||.

    Raises
    ------
    CoincidentPointsError
        If any source/destination pair coincides exactly.
    """
    src = np.atleast_2d(np.asarray(src, dtype=float))
    dst = np.atleast_2d(np.asarray(dst, dtype=float))
    if src.shape[0] < 1 or dst.shape[0] < 1:
        raise ValueError("point sequences must be non-empty")
    diff = dst[:, None, :] - src[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=2))
    if np.any(d == 0.0):
        raise CoincidentPointsError("source and destination points coincide")
    return d
