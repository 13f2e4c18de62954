"""Inspection grid, sun illumination and sensor field-of-view tests.

All vectors are Hill-frame unless noted.  Points live on a sphere of radius
``ds`` centred on the chief; a point counts as inspected the first time it
is both lit by the sun and inside the deputy sensor cone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import dcm_from_quat
from .errors import ConfigurationError, GeometryViolationError

D_EARTH_SUN = 1.496e11  # [m]

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


@dataclass
class InspectionGrid:
    points: np.ndarray
    ds: float
    inspected: np.ndarray = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.inspected is None:
            self.inspected = np.zeros(len(self.points), dtype=bool)

    @property
    def n_total(self):
        return len(self.points)

    @property
    def n_inspected(self):
        return int(np.count_nonzero(self.inspected))

    def copy(self):
        return InspectionGrid(self.points.copy(), self.ds, self.inspected.copy())


@dataclass
class SunState:
    theta: float = 0.0
    dES: float = D_EARTH_SUN

    def advance(self, dt, n):
        """Sun angle in the Hill frame regresses at the chief mean motion."""
        return SunState(self.theta - n * dt, self.dES)


@dataclass
class SensorModel:
    boresight: np.ndarray = field(default_factory=lambda: np.array([-1.0, 0.0, 0.0]))
    beta: float = np.deg2rad(15.0)

    def __post_init__(self):
        self.boresight = np.asarray(self.boresight, dtype=float)
        if abs(np.linalg.norm(self.boresight) - 1.0) > 1e-9:
            raise ConfigurationError("boresight must be a unit vector", key="boresight")
        if not 0.0 < self.beta < np.pi / 2:
            raise ConfigurationError("half-angle FOV must lie in (0, pi/2)", key="beta")


def generate_grid(n_total=100, ds=10.0):
    """Deterministic Fibonacci-lattice grid of ``n_total`` points at radius ``ds``."""
    if int(n_total) != n_total or n_total < 4:
        raise ConfigurationError(f"n_total must be an integer >= 4, got {n_total}", key="n_total")
    if not ds > 0:
        raise ConfigurationError(f"ds must be positive, got {ds}", key="ds")
    i = np.arange(int(n_total))
    z = 1.0 - (2.0 * i + 1.0) / n_total
    rho = np.sqrt(1.0 - z * z)
    phi = i * _GOLDEN_ANGLE
    pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    return InspectionGrid(ds * pts, float(ds))


def sun_position(sun: SunState):
    return sun.dES * np.array([np.cos(sun.theta), np.sin(sun.theta), 0.0])


@njit(cache=True)
def _lit(points, r_s):
    out = np.empty(points.shape[0], dtype=np.bool_)
    for i in range(points.shape[0]):
        p = points[i]
        d = p - r_s
        ratio = np.dot(p, d) / (np.sqrt(np.dot(p, p)) * np.sqrt(np.dot(d, d)))
        # the exact subsolar direction gives ratio == -1 and is lit
        out[i] = -1.0 <= ratio < 0.0
    return out


@njit(cache=True)
def _fov(points, r, b_hill, beta, ds):
    out = np.empty(points.shape[0], dtype=np.bool_)
    rn = np.sqrt(np.dot(r, r))
    horizon = np.arccos(ds / rn)
    cb = np.cos(beta)
    for i in range(points.shape[0]):
        p = points[i]
        c = np.dot(p, r) / (np.sqrt(np.dot(p, p)) * rn)
        # the point must lie on the cap bounded by the tangent lines from the deputy
        facing = np.arccos(min(1.0, max(-1.0, c))) <= horizon
        los = p - r
        out[i] = facing and cb <= np.dot(los, b_hill) / np.sqrt(np.dot(los, los))
    return out


def illuminated_mask(points, r_s):
    return _lit(np.atleast_2d(np.asarray(points, dtype=float)), np.asarray(r_s, dtype=float))


def is_illuminated(p, r_s):
    """True if ``p`` faces the sun; terminator points (ratio 0) are dark."""
    return bool(illuminated_mask(np.asarray(p, dtype=float), np.asarray(r_s, dtype=float))[0])


def fov_mask(points, r, boresight_hill, beta, ds):
    """Vectorised FOV test; the boresight must already be in the Hill frame."""
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r)
    if rn <= ds:
        raise GeometryViolationError(f"deputy at {rn:.3f} m is inside the {ds} m inspection sphere")
    return _fov(np.atleast_2d(np.asarray(points, dtype=float)), r,
                np.asarray(boresight_hill, dtype=float), float(beta), float(ds))


def in_fov(p, r, boresight_hill, beta, ds):
    return bool(fov_mask(np.asarray(p, dtype=float), np.asarray(r, dtype=float),
                         np.asarray(boresight_hill, dtype=float), beta, ds)[0])


def visible_mask(grid: InspectionGrid, r, q, sensor: SensorModel, r_s, lit=None):
    """Points lit and inside the FOV for deputy position ``r`` and attitude ``q``.

    Nothing is visible while the deputy sits inside the inspection sphere.
    """
    r = np.asarray(r, dtype=float)
    if np.linalg.norm(r) <= grid.ds:
        return np.zeros(grid.n_total, dtype=bool)
    if lit is None:
        lit = illuminated_mask(grid.points, r_s)
    b_hill = dcm_from_quat(q).T @ sensor.boresight
    return lit & _fov(grid.points, r, b_hill, sensor.beta, grid.ds)


def update_inspected(grid: InspectionGrid, r, q, sensor: SensorModel, r_s, lit=None):
    """Flag every visible point as inspected; returns the number newly flagged."""
    new = visible_mask(grid, r, q, sensor, r_s, lit) & ~grid.inspected
    grid.inspected |= new
    return int(np.count_nonzero(new))


def inspect_step(grid: InspectionGrid, r, q, sensor: SensorModel, r_s):
    """Update the grid and return ``(newly_inspected, uninspected_centroid)``."""
    lit = illuminated_mask(grid.points, r_s)
    newly = update_inspected(grid, r, q, sensor, r_s, lit)
    return newly, _centroid(grid, lit)


def inspection_rate(grid: InspectionGrid):
    return 100.0 * grid.n_inspected / grid.n_total


def mission_success(grid: InspectionGrid, threshold=95.0):
    return inspection_rate(grid) >= threshold


def _centroid(grid, lit):
    mask = lit & ~grid.inspected
    if not mask.any():
        return None
    return grid.points[mask].mean(axis=0)


def uninspected_centroid(grid: InspectionGrid, r_s):
    """Mean of the lit, not yet inspected points, or ``None`` if there are none."""
    return _centroid(grid, illuminated_mask(grid.points, r_s))
