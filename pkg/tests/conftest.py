import numpy as np
import pytest

from gfs_inspect.fuzzy import FisParams, RuleTable, VariableSpec
from gfs_inspect.guidance import Controller
from gfs_inspect.harness import EpisodeConfig

N = 0.0011068


def constant_fis(out_index, lo=-1.0, hi=1.0):
    """Three-input FIS whose every rule fires output MF ``out_index``."""
    dist = VariableSpec.uniform(0.0, 200.0)
    vel = VariableSpec.uniform(-1.0, 1.0)
    ang = VariableSpec.uniform(-np.pi, np.pi)
    out = VariableSpec(lo, hi, [lo, 0.5 * lo, 0.0, 0.5 * hi, hi], [0.02, 0.1, 0.1, 0.1, 0.02])
    return FisParams([dist, vel, ang], out, RuleTable(np.full((5, 5, 5), out_index)))


@pytest.fixture
def zero_controller():
    f = constant_fis(2)
    return Controller(f, f, f)


@pytest.fixture
def short_cfg():
    return EpisodeConfig(tf=600.0)


def cw_closed_form(r0, v0, n, t):
    """Analytic CW state at time ``t`` (x radial, y along-track, z cross-track)."""
    x0, y0, z0 = r0
    u0, v0_, w0 = v0
    s, c = np.sin(n * t), np.cos(n * t)
    x = (4 - 3 * c) * x0 + s / n * u0 + 2 / n * (1 - c) * v0_
    y = 6 * (s - n * t) * x0 + y0 - 2 / n * (1 - c) * u0 + (4 * s - 3 * n * t) / n * v0_
    z = c * z0 + s / n * w0
    vx = 3 * n * s * x0 + c * u0 + 2 * s * v0_
    vy = -6 * n * (1 - c) * x0 - 2 * s * u0 + (4 * c - 3) * v0_
    vz = -n * s * z0 + c * w0
    return np.array([x, y, z]), np.array([vx, vy, vz])


def axis_angle_dcm(axis, angle):
    """Frame-rotation matrix for a rotation of the frame by ``angle`` about ``axis``."""
    a = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    # active rotation, transposed for the passive (frame) view
    Rm = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
    return Rm.T


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def record(criterion, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}".rstrip()
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
