"""Relative translational (CW) and rotational (quaternion) dynamics.

Quaternions are stored scalar-last, ``q = [q1, q2, q3, q4]`` with ``q4`` the
scalar part, and ``dcm_from_quat(q)`` maps Hill-frame vectors into the deputy
frame.  Products are composed so that ``C(a * b) = C(a) @ C(b)``.

The joint state used by the propagator is a flat 20-vector::

    [r(3), v(3), q(4), w(3), qc(4), wc(3)]

Translation and angular rates are advanced with classical RK4; both
quaternions are advanced on the rotation group with the matching
Munthe-Kaas RK4 stages, which keeps them unit-norm to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InvalidInertiaError, InvalidQuaternionError, PropagationDivergedError

QUAT_TOL = 1e-6

# slices into the joint state vector
R, V, Q, W, QC, WC = (slice(0, 3), slice(3, 6), slice(6, 10),
                      slice(10, 13), slice(13, 17), slice(17, 20))
STATE_SIZE = 20


@dataclass
class RelativeState:
    """Deputy state relative to the chief.

    ``r``/``v`` are Hill-frame position [m] and velocity [m/s]; ``q`` is the
    deputy attitude relative to the chief and ``w`` the relative angular
    velocity [rad/s] in the deputy frame.
    """

    r: np.ndarray
    v: np.ndarray
    q: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0, 1.0]))
    w: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.w = np.asarray(self.w, dtype=float)


@dataclass
class ChiefState:
    qc: np.ndarray
    wc: np.ndarray
    Jc: np.ndarray

    def __post_init__(self):
        self.qc = np.asarray(self.qc, dtype=float)
        self.wc = np.asarray(self.wc, dtype=float)
        self.Jc = _check_inertia(self.Jc, "Jc")


@dataclass
class BodyParams:
    """Deputy mass/inertia, chief mean motion and actuator limits (SI units)."""

    md: float = 12.0
    Jd: np.ndarray = field(default_factory=lambda: np.eye(3))
    n: float = 0.0011068
    fmax: float = 1.0
    tmax: float = 0.010

    def __post_init__(self):
        self.Jd = _check_inertia(self.Jd, "Jd")
        for name in ("md", "n", "fmax", "tmax"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


def _check_inertia(J, name):
    J = np.asarray(J, dtype=float)
    if J.shape != (3, 3) or not np.allclose(J, J.T, rtol=0, atol=1e-12):
        raise InvalidInertiaError(f"{name} must be a symmetric 3x3 matrix")
    if np.linalg.eigvalsh(J).min() <= 0:
        raise InvalidInertiaError(f"{name} must be positive definite")
    return J


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def _skew(v):
    out = np.zeros((3, 3))
    out[0, 1] = -v[2]
    out[0, 2] = v[1]
    out[1, 0] = v[2]
    out[1, 2] = -v[0]
    out[2, 0] = -v[1]
    out[2, 1] = v[0]
    return out


@njit(cache=True)
def _dcm(q):
    q1, q2, q3, q4 = q[0], q[1], q[2], q[3]
    C = np.empty((3, 3))
    C[0, 0] = q1 * q1 - q2 * q2 - q3 * q3 + q4 * q4
    C[0, 1] = 2.0 * (q1 * q2 + q3 * q4)
    C[0, 2] = 2.0 * (q1 * q3 - q2 * q4)
    C[1, 0] = 2.0 * (q1 * q2 - q3 * q4)
    C[1, 1] = -q1 * q1 + q2 * q2 - q3 * q3 + q4 * q4
    C[1, 2] = 2.0 * (q2 * q3 + q1 * q4)
    C[2, 0] = 2.0 * (q1 * q3 + q2 * q4)
    C[2, 1] = 2.0 * (q2 * q3 - q1 * q4)
    C[2, 2] = -q1 * q1 - q2 * q2 + q3 * q3 + q4 * q4
    return C


@njit(cache=True)
def _quat_mul(a, b):
    av = a[:3]
    bv = b[:3]
    out = np.empty(4)
    out[:3] = a[3] * bv + b[3] * av - np.cross(av, bv)
    out[3] = a[3] * b[3] - np.dot(av, bv)
    return out


@njit(cache=True)
def _quat_exp(theta):
    # quaternion whose DCM is exp(-[theta x])
    angle = np.sqrt(np.dot(theta, theta))
    out = np.empty(4)
    if angle < 1e-8:
        # series to keep the small-angle branch accurate to round-off
        s = 0.5 - angle * angle / 48.0
        c = 1.0 - angle * angle / 8.0
    else:
        s = np.sin(0.5 * angle) / angle
        c = np.cos(0.5 * angle)
    out[:3] = s * theta
    out[3] = c
    return out / np.sqrt(np.dot(out, out))


@njit(cache=True)
def _quat_rate(q, w):
    qv = q[:3]
    out = np.empty(4)
    out[:3] = -0.5 * np.cross(w, qv) + 0.5 * q[3] * w
    out[3] = -0.5 * np.dot(w, qv)
    return out


@njit(cache=True)
def _cw_accel(r, v, f, md, n):
    a = np.empty(3)
    a[0] = 3.0 * n * n * r[0] + 2.0 * n * v[1] + f[0] / md
    a[1] = -2.0 * n * v[0] + f[1] / md
    a[2] = -n * n * r[2] + f[2] / md
    return a


@njit(cache=True)
def _chief_wdot(wc, Jc, Jc_inv):
    return -Jc_inv @ np.cross(wc, Jc @ wc)


@njit(cache=True)
def _rel_att_accel(q, w, wc, wc_dot, tau, Jd, Jd_inv):
    C = _dcm(q)
    cwc = C @ wc
    S = _skew(cwc)
    A = -Jd @ S - S @ Jd + _skew(Jd @ (w + cwc))
    h = -S @ (Jd @ cwc) - Jd @ (C @ wc_dot)
    return Jd_inv @ (A @ w + h + tau)


@njit(cache=True)
def _euclid_rates(y, f, tau, md, n, Jd, Jd_inv, Jc, Jc_inv):
    # time derivative of the Euclidean part [r, v, w, wc]
    out = np.empty(12)
    wc_dot = _chief_wdot(y[17:20], Jc, Jc_inv)
    out[0:3] = y[3:6]
    out[3:6] = _cw_accel(y[0:3], y[3:6], f, md, n)
    out[6:9] = _rel_att_accel(y[6:10], y[10:13], y[17:20], wc_dot, tau, Jd, Jd_inv)
    out[9:12] = wc_dot
    return out


@njit(cache=True)
def _dexpinv(theta, w):
    # rotation-vector rate for body rate w, truncated past the B2 term
    c = np.cross(theta, w)
    return w + 0.5 * c + np.cross(theta, c) / 12.0


@njit(cache=True)
def _stage_state(y0, x, th_d, th_c):
    y = np.empty(20)
    y[0:6] = x[0:6]
    y[10:13] = x[6:9]
    y[17:20] = x[9:12]
    y[6:10] = _quat_mul(_quat_exp(th_d), y0[6:10])
    y[13:17] = _quat_mul(_quat_exp(th_c), y0[13:17])
    return y


@njit(cache=True)
def _rk4(y0, f, tau, md, n, Jd, Jd_inv, Jc, Jc_inv, h, renormalize):
    x0 = np.empty(12)
    x0[0:6] = y0[0:6]
    x0[6:9] = y0[10:13]
    x0[9:12] = y0[17:20]

    k1 = _euclid_rates(y0, f, tau, md, n, Jd, Jd_inv, Jc, Jc_inv)
    u1 = y0[10:13].copy()
    v1 = y0[17:20].copy()

    x2 = x0 + 0.5 * h * k1
    t2, s2 = 0.5 * h * u1, 0.5 * h * v1
    y2 = _stage_state(y0, x2, t2, s2)
    k2 = _euclid_rates(y2, f, tau, md, n, Jd, Jd_inv, Jc, Jc_inv)
    u2 = _dexpinv(t2, x2[6:9])
    v2 = _dexpinv(s2, x2[9:12])

    x3 = x0 + 0.5 * h * k2
    t3, s3 = 0.5 * h * u2, 0.5 * h * v2
    y3 = _stage_state(y0, x3, t3, s3)
    k3 = _euclid_rates(y3, f, tau, md, n, Jd, Jd_inv, Jc, Jc_inv)
    u3 = _dexpinv(t3, x3[6:9])
    v3 = _dexpinv(s3, x3[9:12])

    x4 = x0 + h * k3
    t4, s4 = h * u3, h * v3
    y4 = _stage_state(y0, x4, t4, s4)
    k4 = _euclid_rates(y4, f, tau, md, n, Jd, Jd_inv, Jc, Jc_inv)
    u4 = _dexpinv(t4, x4[6:9])
    v4 = _dexpinv(s4, x4[9:12])

    x = x0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    th = h / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4)
    sc = h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4)
    y = _stage_state(y0, x, th, sc)
    if renormalize:
        y[6:10] /= np.sqrt(np.dot(y[6:10], y[6:10]))
        y[13:17] /= np.sqrt(np.dot(y[13:17], y[13:17]))
    return y


# ---------------------------------------------------------------------------
# public API


def skew(rho):
    """Cross-product matrix: ``skew(a) @ b == np.cross(a, b)``."""
    return _skew(np.asarray(rho, dtype=float))


def check_unit(q, tol=QUAT_TOL):
    q = np.asarray(q, dtype=float)
    if q.shape != (4,) or abs(np.linalg.norm(q) - 1.0) > tol:
        raise InvalidQuaternionError(f"quaternion {q} is not unit norm")
    return q


def dcm_from_quat(q):
    """DCM mapping Hill (chief) frame components into the deputy frame."""
    return _dcm(check_unit(q))


def quat_multiply(a, b):
    return _quat_mul(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def quat_conjugate(q):
    q = np.asarray(q, dtype=float)
    return np.array([-q[0], -q[1], -q[2], q[3]])


def quat_from_rotvec(theta):
    """Quaternion for a frame rotation by ``|theta|`` about ``theta``."""
    return _quat_exp(np.asarray(theta, dtype=float))


def cw_accel(r, v, f_hill, p: BodyParams):
    """Clohessy-Wiltshire acceleration in the Hill frame, disturbances zero."""
    return _cw_accel(np.asarray(r, dtype=float), np.asarray(v, dtype=float),
                     np.asarray(f_hill, dtype=float), p.md, p.n)


def quat_rate(q, w):
    return _quat_rate(np.asarray(q, dtype=float), np.asarray(w, dtype=float))


def chief_euler_rate(chief: ChiefState):
    """Torque-free Euler rate of the chief angular velocity."""
    return _chief_wdot(chief.wc, chief.Jc, np.linalg.inv(chief.Jc))


def relative_att_accel(state: RelativeState, chief: ChiefState, chief_wdot, tau, p: BodyParams):
    """Relative angular acceleration of the deputy, disturbance torque zero."""
    return _rel_att_accel(check_unit(state.q), state.w, chief.wc,
                          np.asarray(chief_wdot, dtype=float),
                          np.asarray(tau, dtype=float), p.Jd, np.linalg.inv(p.Jd))


def pack(state: RelativeState, chief: ChiefState):
    y = np.empty(STATE_SIZE)
    y[R], y[V], y[Q], y[W] = state.r, state.v, state.q, state.w
    y[QC], y[WC] = chief.qc, chief.wc
    return y


def unpack(y, Jc):
    return (RelativeState(y[R].copy(), y[V].copy(), y[Q].copy(), y[W].copy()),
            ChiefState(y[QC].copy(), y[WC].copy(), Jc))


class Propagator:
    """Fixed-step joint propagator with inertia inverses cached.

    Control is zero-order-hold over each call to :meth:`step`.
    """

    def __init__(self, p: BodyParams, Jc, renormalize=True):
        self.p = p
        self.Jc = _check_inertia(Jc, "Jc")
        self._Jd_inv = np.linalg.inv(p.Jd)
        self._Jc_inv = np.linalg.inv(self.Jc)
        self.renormalize = renormalize

    def step(self, y, f_hill, tau, h):
        if not h > 0:
            raise ValueError("step size must be positive")
        y_new = _rk4(y, np.asarray(f_hill, dtype=float), np.asarray(tau, dtype=float),
                     self.p.md, self.p.n, self.p.Jd, self._Jd_inv, self.Jc, self._Jc_inv,
                     float(h), self.renormalize)
        if not np.all(np.isfinite(y_new)):
            raise PropagationDivergedError("non-finite state after RK4 step")
        return y_new


def rk4_step(state: RelativeState, chief: ChiefState, f_hill, tau, p: BodyParams, h):
    """Advance the deputy and chief jointly by ``h`` seconds."""
    y = Propagator(p, chief.Jc).step(pack(state, chief), f_hill, tau, h)
    return unpack(y, chief.Jc)
