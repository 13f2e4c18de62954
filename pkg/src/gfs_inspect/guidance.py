"""Fuzzy translational guidance and PD attitude control for the deputy.

Three FISs produce the deputy-frame force, one per body axis::

    fis_x: (distance, body x velocity, lambda_u)
    fis_y: (distance, body y velocity, lambda_u)
    fis_z: (distance, body z velocity, eta_u)

``lambda_u``/``eta_u`` are the signed bearings from the deputy position to
the centroid of the lit-but-uninspected points, measured in the Hill x-y and
x-z coordinate planes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit

from .dynamics import _dcm, _quat_exp, _quat_mul, check_unit, quat_conjugate, quat_multiply
from .errors import ConfigurationError
from .fuzzy import FisParams, RuleTable, VariableSpec

DEGENERATE_TOL = 1e-9

# default input/output envelopes
DIST_RANGE = (0.0, 200.0)
VEL_RANGE = (-1.0, 1.0)
ANGLE_RANGE = (-np.pi, np.pi)
FORCE_RANGE = (-1.0, 1.0)

ATTITUDE_MODES = ("boresight", "align")


class ProjectionAngles(NamedTuple):
    lambda_u: float
    eta_u: float
    lambda_degenerate: bool
    eta_degenerate: bool


@dataclass
class GuidanceInputs:
    dist: float
    vel: np.ndarray
    lambda_u: float
    eta_u: float
    p_u: np.ndarray


@dataclass
class AttitudeGains:
    Kp: np.ndarray = field(default_factory=lambda: 0.02 * np.eye(3))
    Kd: np.ndarray = field(default_factory=lambda: 0.2 * np.eye(3))

    def __post_init__(self):
        for name in ("Kp", "Kd"):
            K = np.asarray(getattr(self, name), dtype=float)
            if (K.shape != (3, 3) or not np.allclose(K, K.T)
                    or np.linalg.eigvalsh(K).min() <= 0):
                raise ConfigurationError(f"{name} must be symmetric positive definite", key=name)
            setattr(self, name, K)


@dataclass
class Controller:
    """The three axis FISs plus the attitude loop settings."""

    fis_x: FisParams
    fis_y: FisParams
    fis_z: FisParams
    gains: AttitudeGains = field(default_factory=AttitudeGains)
    attitude_mode: str = "boresight"

    def __post_init__(self):
        if self.attitude_mode not in ATTITUDE_MODES:
            raise ConfigurationError(
                f"attitude_mode must be one of {ATTITUDE_MODES}", key="attitude_mode")

    @property
    def fis(self):
        return (self.fis_x, self.fis_y, self.fis_z)


def _plane_angle(a1, a2, b1, b2):
    # signed angle from (a1, a2) to (b1, b2), counter-clockwise positive
    if np.hypot(a1, a2) < DEGENERATE_TOL or np.hypot(b1, b2) < DEGENERATE_TOL:
        return 0.0, True
    return float(np.arctan2(a1 * b2 - a2 * b1, a1 * b1 + a2 * b2)), False


def projection_angles(r, p_u):
    """Bearings of ``p_u`` relative to ``r`` in the Hill x-y and x-z planes.

    Angles are in ``[-pi, pi]``; a vanishing in-plane projection gives 0 and
    raises the matching degeneracy flag.
    """
    lam, lam_deg = _plane_angle(r[0], r[1], p_u[0], p_u[1])
    eta, eta_deg = _plane_angle(r[0], r[2], p_u[0], p_u[2])
    return ProjectionAngles(lam, eta, lam_deg, eta_deg)


def guidance_inputs(r, v, q, p_u):
    r = np.asarray(r, dtype=float)
    ang = projection_angles(r, p_u)
    return GuidanceInputs(float(np.linalg.norm(r)), _dcm(q) @ np.asarray(v, dtype=float),
                          ang.lambda_u, ang.eta_u, np.asarray(p_u, dtype=float))


def fis_force_raw(fis_x, fis_y, fis_z, g: GuidanceInputs):
    """Deputy-frame force before the thrust clamp."""
    return np.array([
        fis_x(g.dist, g.vel[0], g.lambda_u),
        fis_y(g.dist, g.vel[1], g.lambda_u),
        fis_z(g.dist, g.vel[2], g.eta_u),
    ])


def fis_force(fis_x, fis_y, fis_z, g: GuidanceInputs, fmax=1.0):
    return np.clip(fis_force_raw(fis_x, fis_y, fis_z, g), -fmax, fmax)


def force_to_hill(f_d, q):
    return _dcm(check_unit(q)).T @ np.asarray(f_d, dtype=float)


@njit(cache=True)
def _target_attitude(r, q, boresight):
    b_hill = _dcm(q).T @ boresight
    u = -r / np.sqrt(np.dot(r, r))
    axis = np.cross(b_hill, u)
    s = np.sqrt(np.dot(axis, axis))
    c = np.dot(b_hill, u)
    angle = np.arctan2(s, c)
    if s < 1e-12:
        if c > 0:
            return q.copy()
        # 180 degree flip about an axis perpendicular to the boresight
        axis = np.cross(b_hill, np.array([0.0, 0.0, 1.0]))
        if np.sqrt(np.dot(axis, axis)) < 1e-6:
            axis = np.cross(b_hill, np.array([0.0, 1.0, 0.0]))
        s = np.sqrt(np.dot(axis, axis))
    # rotating the Hill-frame boresight actively by +angle about axis
    q_new = _quat_mul(q, _quat_exp(angle * axis / s))
    return q_new / np.sqrt(np.dot(q_new, q_new))


def target_attitude(r, q, boresight):
    """Smallest re-pointing of attitude ``q`` that puts the boresight on the chief.

    The rotation axis is ``b_hill x (-r_hat)``; when the boresight is exactly
    anti-aligned any perpendicular axis is used.
    """
    return _target_attitude(np.asarray(r, dtype=float), check_unit(q),
                            np.asarray(boresight, dtype=float))


def attitude_error(q, q_target):
    """Error quaternion with ``C(q_err) = C(q) C(q_target)^T``, scalar part >= 0."""
    q_err = quat_multiply(q, quat_conjugate(q_target))
    return -q_err if q_err[3] < 0 else q_err


def pd_torque_raw(q_err, w, gains: AttitudeGains):
    q_err = np.asarray(q_err, dtype=float)
    if q_err[3] < 0:
        q_err = -q_err
    return -gains.Kp @ q_err[:3] - gains.Kd @ np.asarray(w, dtype=float)


def pd_torque(q_err, w, gains: AttitudeGains, tmax=0.010):
    return np.clip(pd_torque_raw(q_err, w, gains), -tmax, tmax)


def attitude_target_for(controller: Controller, r, q, boresight):
    if controller.attitude_mode == "align":
        return np.array([0.0, 0.0, 0.0, 1.0])
    return target_attitude(r, q, boresight)


# ---------------------------------------------------------------------------
# hand-designed starting controller


def _spec(rng, means, sigmas):
    return VariableSpec(rng[0], rng[1], means, sigmas)


def default_input_specs():
    # distance MFs bracket a 75 m standoff
    dist = _spec(DIST_RANGE, [0.0, 55.0, 75.0, 95.0, 200.0], [15.0, 8.0, 8.0, 8.0, 40.0])
    vel = _spec(VEL_RANGE, [-1.0, -0.05, 0.0, 0.05, 1.0], [0.3, 0.025, 0.025, 0.025, 0.3])
    ang = _spec(ANGLE_RANGE, [-np.pi, -0.6, 0.0, 0.6, np.pi], [0.8, 0.3, 0.3, 0.3, 0.8])
    return dist, vel, ang


def default_output_spec():
    return _spec(FORCE_RANGE, [-1.0, -0.01, 0.0, 0.01, 1.0], [0.02, 0.012, 0.012, 0.012, 0.02])


def _radial_rules():
    # dist low -> push out, dist high -> pull in; radial velocity damps
    table = np.empty((5, 5, 5), dtype=int)
    for i in range(5):
        for j in range(5):
            push = {0: 2, 1: 1, 2: 0, 3: -1, 4: -2}[i] - (j - 2)
            table[i, j, :] = 2 + int(np.clip(push, -1, 1))
    return RuleTable(table)


def _tangential_rules():
    # steer toward the centroid bearing, damp the tangential velocity
    table = np.empty((5, 5, 5), dtype=int)
    for i in range(5):
        for j in range(5):
            for k in range(5):
                push = (k - 2) - (j - 2)
                table[i, j, k] = 2 + int(np.clip(push, -1, 1))
    return RuleTable(table)


def default_controller():
    """Expert-designed starting point for GA training."""
    dist, vel, ang = default_input_specs()
    out = default_output_spec()
    return Controller(
        FisParams([dist, vel, ang], out, _radial_rules()),
        FisParams([dist, vel, ang], out, _tangential_rules()),
        FisParams([dist, vel, ang], out, _tangential_rules()),
    )
