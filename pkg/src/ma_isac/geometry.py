"""Antenna array geometry: movable-antenna layouts, movement regions,
steering vectors and the position statistics (variance/covariance) that
drive the sensing accuracy bounds.

Coordinates are stored in meters throughout; the wavelength is carried on
the layout so that wavelength-normalized reporting is purely a formatting
concern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import InfeasibleLayoutError


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned rectangular movement region in the y-z plane."""

    y_min: float
    y_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if not (self.y_max > self.y_min and self.z_max > self.z_min):
            raise ValueError("rectangle must have positive extent on both axes")

    @property
    def circumradius(self) -> float:
        """Radius of the minimum circumscribed circle (half-diagonal)."""
        return 0.5 * math.hypot(self.y_max - self.y_min, self.z_max - self.z_min)

    @property
    def centroid(self) -> tuple[float, float]:
        return (0.5 * (self.y_min + self.y_max), 0.5 * (self.z_min + self.z_max))

    def contains(self, y, z, tol: float = 0.0) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        return (
            (y >= self.y_min - tol)
            & (y <= self.y_max + tol)
            & (z >= self.z_min - tol)
            & (z <= self.z_max + tol)
        )

    def bounding_box(self) -> tuple[float, float, float, float]:
        return (self.y_min, self.y_max, self.z_min, self.z_max)

    @staticmethod
    def square(side: float, center: tuple[float, float] = (0.0, 0.0)) -> "RectRegion":
        cy, cz = center
        h = 0.5 * side
        return RectRegion(cy - h, cy + h, cz - h, cz + h)


@dataclass(frozen=True)
class DiskRegion:
    """Circular movement region in the y-z plane."""

    center_y: float
    center_z: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("disk radius must be positive")

    @property
    def circumradius(self) -> float:
        return self.radius

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.center_y, self.center_z)

    def contains(self, y, z, tol: float = 0.0) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        r2 = (y - self.center_y) ** 2 + (z - self.center_z) ** 2
        return r2 <= (self.radius + tol) ** 2

    def bounding_box(self) -> tuple[float, float, float, float]:
        return (
            self.center_y - self.radius,
            self.center_y + self.radius,
            self.center_z - self.radius,
            self.center_z + self.radius,
        )


MovementRegion = Union[RectRegion, DiskRegion]


@dataclass(frozen=True)
class WaveVector2D:
    """Direction cosines (u, v) of a propagation direction w.r.t. the
    y and z axes.  Search grids may cover the full square [-1,1]^2 even
    where u^2 + v^2 > 1 is not physically realizable."""

    u: float
    v: float

    def __post_init__(self):
        if abs(self.u) > 1.0 + 1e-12 or abs(self.v) > 1.0 + 1e-12:
            raise ValueError("wave vector components must lie in [-1, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=float)


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ArrayLayout:
    """Positions of N movable antennas on the y-z plane.

    `y` and `z` are the horizontal and vertical position vectors (meters),
    constrained to `region`; `wavelength` is the carrier wavelength in
    meters.
    """

    y: np.ndarray
    z: np.ndarray
    region: MovementRegion
    wavelength: float
    _validate_region: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen_array(self.y))
        object.__setattr__(self, "z", _frozen_array(self.z))
        if self.y.ndim != 1 or self.z.ndim != 1 or self.y.size != self.z.size:
            raise ValueError("y and z must be 1D vectors of equal length")
        if self.y.size < 2:
            raise ValueError("an array needs at least two antennas")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self._validate_region and not bool(
            np.all(self.region.contains(self.y, self.z, tol=1e-9))
        ):
            raise InfeasibleLayoutError("antenna positions fall outside the region")

    @property
    def n(self) -> int:
        return self.y.size

    def positions(self) -> np.ndarray:
        """(N, 2) array of (y, z) positions."""
        return np.column_stack([self.y, self.z])

    def with_axis(self, axis: str, values: np.ndarray) -> "ArrayLayout":
        """New layout with one coordinate vector replaced."""
        if axis == "y":
            return replace(self, y=np.asarray(values, dtype=float))
        if axis == "z":
            return replace(self, z=np.asarray(values, dtype=float))
        raise ValueError(f"unknown axis {axis!r}")

    def axis(self, axis: str) -> np.ndarray:
        if axis == "y":
            return self.y
        if axis == "z":
            return self.z
        raise ValueError(f"unknown axis {axis!r}")

    def is_feasible(self, min_spacing: float, tol: float = 1e-9) -> bool:
        """Region membership plus pairwise spacing at least `min_spacing`."""
        in_region = bool(np.all(self.region.contains(self.y, self.z, tol=tol)))
        return in_region and min_pairwise_distance(self) >= min_spacing - tol


def steering_vector(layout: ArrayLayout, chi) -> np.ndarray:
    """Array response toward direction cosines chi = (u, v).

    Entry n is exp(j * (2*pi/wavelength) * (u*y_n + v*z_n)); all entries
    have unit modulus.
    """
    if isinstance(chi, WaveVector2D):
        u, v = chi.u, chi.v
    else:
        u, v = float(chi[0]), float(chi[1])
    phase = (2.0 * np.pi / layout.wavelength) * (u * layout.y + v * layout.z)
    return np.exp(1j * phase)


def steering_phase_basis(layout: ArrayLayout, u_grid, v_grid):
    """Per-axis steering factors for a separable (u, v) grid.

    Returns (A, B) with A[n, i] = exp(j*k*u_i*y_n) and
    B[n, j] = exp(j*k*v_j*z_n), so the full steering vector at (u_i, v_j)
    is A[:, i] * B[:, j].  Used by grid searches and correlation maps.
    """
    k = 2.0 * np.pi / layout.wavelength
    a = np.exp(1j * k * np.outer(layout.y, np.asarray(u_grid, dtype=float)))
    b = np.exp(1j * k * np.outer(layout.z, np.asarray(v_grid, dtype=float)))
    return a, b


def var_cov(y, z) -> tuple[float, float, float]:
    """Population variance of y and z and their covariance.

    var(y) = mean(y^2) - mean(y)^2 and cov(y, z) = mean(y*z) -
    mean(y)*mean(z), evaluated in centered form so a constant axis yields
    an exact zero instead of cancellation noise (downstream code branches
    on var == 0 for colinear arrays).
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if y.shape != z.shape:
        raise ValueError("y and z must have equal length")
    y_const = np.ptp(y) == 0.0
    z_const = np.ptp(z) == 0.0
    cy = y - y.mean()
    cz = z - z.mean()
    var_y = 0.0 if y_const else float(np.mean(cy * cy))
    var_z = 0.0 if z_const else float(np.mean(cz * cz))
    cov_yz = 0.0 if (y_const or z_const) else float(np.mean(cy * cz))
    return var_y, var_z, cov_yz


def centering_matrix(n: int) -> np.ndarray:
    """PSD matrix B = I/n - 11^T/n^2 with x^T B x = var(x), x^T B w = cov(x, w)."""
    return np.eye(n) / n - np.ones((n, n)) / (n * n)


def quadratic_form_B(x, w) -> float:
    """x^T B w for the centering matrix B; equals cov(x, w) (or var for x = w)."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != w.shape:
        raise ValueError("x and w must have equal length")
    n = x.size
    return float(x @ w / n - x.sum() * w.sum() / (n * n))


def var_terms(y, z) -> tuple[float, float]:
    """The two sensing-accuracy variance terms
    (var(y) - cov^2/var(z), var(z) - cov^2/var(y)).

    A zero-variance axis with zero covariance contributes nothing
    (cov^2/var treated as 0); with nonzero covariance the term is -inf,
    mirroring a singular information matrix for colinear arrays.
    """
    var_y, var_z, cov = var_cov(y, z)

    def ratio(c: float, v: float) -> float:
        if v > 0.0:
            return c * c / v
        return 0.0 if c == 0.0 else math.inf

    return var_y - ratio(cov, var_z), var_z - ratio(cov, var_y)


def min_pairwise_distance(layout: ArrayLayout) -> float:
    """Smallest Euclidean distance between any two antennas."""
    pts = layout.positions()
    if pts.shape[0] < 2:
        raise ValueError("need at least two antennas")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    iu = np.triu_indices(pts.shape[0], k=1)
    return float(dist[iu].min())


def build_upa(
    n: int,
    spacing: float,
    region: MovementRegion,
    wavelength: float,
) -> ArrayLayout:
    """Uniform planar array on a ceil(sqrt(n)) x ceil(sqrt(n)) grid,
    centered at the region centroid.  When n is not a perfect square the
    first n grid points in row-major order are used.

    Raises InfeasibleLayoutError when the grid does not fit in the region.
    """
    if n < 2:
        raise ValueError("need at least two antennas")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    g = math.isqrt(n)
    if g * g < n:
        g += 1
    offsets = (np.arange(g) - (g - 1) / 2.0) * spacing
    cy, cz = region.centroid
    zz, yy = np.meshgrid(offsets, offsets, indexing="ij")
    y = (yy.ravel() + cy)[:n]
    z = (zz.ravel() + cz)[:n]
    if not bool(np.all(region.contains(y, z, tol=1e-12))):
        raise InfeasibleLayoutError(
            f"{g}x{g} grid at spacing {spacing:g} m does not fit in the region"
        )
    return ArrayLayout(y=y, z=z, region=region, wavelength=wavelength)
