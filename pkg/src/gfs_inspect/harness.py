"""Inspection episodes, delta-v accounting and Monte Carlo campaigns."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import BodyParams, ChiefState, Propagator, RelativeState, Q, R, V, W, _dcm, pack
from .errors import ConfigurationError, PropagationDivergedError
from .geometry import (D_EARTH_SUN, SensorModel, SunState, generate_grid, inspect_step,
                       inspection_rate, sun_position)
from .guidance import (Controller, attitude_error, attitude_target_for, fis_force_raw,
                       guidance_inputs)

log = logging.getLogger(__name__)

N_MEAN_MOTION = 0.0011068
LOG_COLUMNS = ["t", "x", "y", "z", "vx", "vy", "vz", "q1", "q2", "q3", "q4",
               "wx", "wy", "wz", "fx", "fy", "fz", "tx", "ty", "tz",
               "newly_inspected", "cum_rate"]
THREADS_ENV = "GFS_INSPECT_THREADS"


def default_chief(n=N_MEAN_MOTION):
    return ChiefState([0.0, 0.0, 0.0, 1.0], [0.0, 0.0, n], 1000.0 * np.eye(3))


def default_state(r=(75.0, 0.0, 0.0), n=N_MEAN_MOTION):
    return RelativeState(r, np.zeros(3), [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, n])


@dataclass
class EpisodeConfig:
    """One inspection episode; defaults are the nominal mission parameters."""

    state0: RelativeState = field(default_factory=default_state)
    chief: ChiefState = field(default_factory=default_chief)
    body: BodyParams = field(default_factory=BodyParams)
    sensor: SensorModel = field(default_factory=SensorModel)
    tf: float = 3600.0
    T: float = 10.0
    n_points: int = 100
    ds: float = 10.0
    sun_theta0: float = 0.0
    dES: float = D_EARTH_SUN
    d_min: float = 15.0
    d_max: float = 200.0
    eta_threshold: float = 95.0
    early_stop: bool = False

    def __post_init__(self):
        steps = self.tf / self.T
        if not (self.T > 0 and self.tf > 0) or abs(steps - round(steps)) > 1e-9:
            raise ConfigurationError("tf must be a positive integer multiple of T", key="tf")
        if not 0 <= self.d_min < self.d_max:
            raise ConfigurationError("need 0 <= d_min < d_max", key="d_min")
        if not 0 <= self.eta_threshold <= 100:
            raise ConfigurationError("eta_threshold must be a percentage", key="eta_threshold")

    @property
    def n_steps(self):
        return int(round(self.tf / self.T))

    def with_position(self, r, sun_theta0=None):
        s = self.state0
        state = RelativeState(np.asarray(r, dtype=float), s.v.copy(), s.q.copy(), s.w.copy())
        kw = {"state0": state}
        if sun_theta0 is not None:
            kw["sun_theta0"] = float(sun_theta0)
        return replace(self, **kw)


@dataclass
class EpisodeResult:
    delta_v: float
    insp_rate: float
    mean_dist: float
    min_dist: float
    max_dist: float
    violations: dict
    trajectory: np.ndarray
    failed: bool = False
    peak_force: float = 0.0  # largest post-clamp deputy-frame force component [N]
    peak_torque: float = 0.0  # largest post-clamp torque component [N m]

    @property
    def success(self):
        return not self.failed and not self.violations["collision"] \
            and not self.violations["corridor"]

    def summary(self):
        return {"delta_v": self.delta_v, "insp_rate": self.insp_rate,
                "mean_dist": self.mean_dist, "min_dist": self.min_dist,
                "max_dist": self.max_dist, **self.violations, "failed": self.failed,
                "peak_force": self.peak_force, "peak_torque": self.peak_torque}


def delta_v(forces, md, T):
    """Fuel proxy: summed absolute per-axis force impulse over the deputy mass."""
    if not (md > 0 and T > 0):
        raise ValueError("md and T must be positive")
    forces = np.asarray(forces, dtype=float).reshape(-1, 3)
    return float(np.sum(np.abs(forces)) / md * T)


def run_episode(cfg: EpisodeConfig, controller: Controller) -> EpisodeResult:
    """Fly one episode to ``tf`` and collect metrics and the per-step log.

    Log row ``k`` holds the state at ``t_k``, the force/torque held over
    ``[t_k, t_k + T)`` and the points first inspected at ``t_k``; the final row
    is the end state with zero control.
    """
    body = cfg.body
    prop = Propagator(body, cfg.chief.Jc)
    grid = generate_grid(cfg.n_points, cfg.ds)
    sun = SunState(cfg.sun_theta0, cfg.dES)
    sensor = cfg.sensor
    y = pack(cfg.state0, cfg.chief)
    n = cfg.n_steps
    traj = np.zeros((n + 1, len(LOG_COLUMNS)))
    actuation = False
    failed = False
    peak_f = peak_tau = 0.0

    r_s = sun_position(sun)
    newly, p_u = inspect_step(grid, y[R], y[Q], sensor, r_s)
    if p_u is None:
        p_u = cfg.ds * r_s / np.linalg.norm(r_s)

    k = 0
    while True:
        row = traj[k]
        row[0] = k * cfg.T
        row[1:14] = y[:13]
        row[20] = newly
        row[21] = inspection_rate(grid)
        done = k == n or (cfg.early_stop and row[21] >= cfg.eta_threshold)
        if done:
            break

        g = guidance_inputs(y[R], y[V], y[Q], p_u)
        f_raw = fis_force_raw(*controller.fis, g)
        f_d = np.clip(f_raw, -body.fmax, body.fmax)
        q_t = attitude_target_for(controller, y[R], y[Q], sensor.boresight)
        q_err = attitude_error(y[Q], q_t)
        tau_raw = -controller.gains.Kp @ q_err[:3] - controller.gains.Kd @ y[W]
        tau = np.clip(tau_raw, -body.tmax, body.tmax)
        if np.any(np.abs(f_raw) > body.fmax) or np.any(np.abs(tau_raw) > body.tmax):
            actuation = True
        peak_f = max(peak_f, float(np.max(np.abs(f_d))))
        peak_tau = max(peak_tau, float(np.max(np.abs(tau))))
        f = _dcm(y[Q]).T @ f_d
        row[14:17] = f
        row[17:20] = tau

        try:
            y = prop.step(y, f, tau, cfg.T)
        except PropagationDivergedError:
            log.warning("episode diverged at t=%.1f s", row[0])
            failed = True
            break
        k += 1
        sun = sun.advance(cfg.T, body.n)
        r_s = sun_position(sun)
        newly, c = inspect_step(grid, y[R], y[Q], sensor, r_s)
        if c is not None:
            p_u = c

    traj = traj[:k + 1]
    dist = np.linalg.norm(traj[:, 1:4], axis=1)
    violations = {
        "collision": bool(np.any(dist < cfg.d_min)),
        "corridor": bool(np.any(dist > cfg.d_max)),
        "actuation": actuation,
    }
    return EpisodeResult(
        delta_v=delta_v(traj[:, 14:17], body.md, cfg.T),
        insp_rate=float(traj[-1, 21]),
        mean_dist=float(np.mean(dist)),
        min_dist=float(np.min(dist)),
        max_dist=float(np.max(dist)),
        violations=violations,
        trajectory=traj,
        failed=failed,
        peak_force=peak_f,
        peak_torque=peak_tau,
    )


# ---------------------------------------------------------------------------
# Monte Carlo


def sample_shell(rng, r_lo=50.0, r_hi=100.0):
    """Point uniformly distributed in the volume between two spheres."""
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    u = rng.random()
    radius = (u * (r_hi**3 - r_lo**3) + r_lo**3) ** (1.0 / 3.0)
    return radius * d


def monte_carlo_config(base_cfg: EpisodeConfig, seed, index, r_lo=50.0, r_hi=100.0):
    """Initial condition of run ``index``; one RNG stream per (seed, index)."""
    rng = np.random.default_rng([int(seed), int(index)])
    r0 = sample_shell(rng, r_lo, r_hi)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    cfg = base_cfg.with_position(r0, sun_theta0=theta)
    cfg.state0.v = np.zeros(3)
    return cfg


@dataclass
class MonteCarloResult:
    results: list
    initial_positions: np.ndarray
    sun_angles: np.ndarray

    def summary(self):
        return summarize(self.results)

    def table(self):
        """Per-run rows: run, x0, y0, z0, radius, sun angle and metrics."""
        rows = []
        for i, (res, r0, th) in enumerate(zip(self.results, self.initial_positions,
                                              self.sun_angles)):
            rows.append({"run": i, "x0": r0[0], "y0": r0[1], "z0": r0[2],
                         "r0": float(np.linalg.norm(r0)), "sun_theta0": th,
                         **res.summary()})
        return rows


def summarize(results):
    """Mean and standard deviation of delta-v, inspection rate and mean distance."""
    out = {}
    for key in ("delta_v", "insp_rate", "mean_dist"):
        vals = np.array([getattr(r, key) for r in results])
        out[key] = {"mean": float(np.mean(vals)),
                    "std": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0}
    return out


def _episode_job(args):
    cfg, controller = args
    return run_episode(cfg, controller)


def default_workers():
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def run_many(cfgs, controller, workers=None):
    """Run independent episodes, in order, optionally across processes."""
    workers = default_workers() if workers is None else workers
    jobs = [(c, controller) for c in cfgs]
    if workers <= 1 or len(jobs) <= 1:
        return [_episode_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_episode_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def monte_carlo(base_cfg: EpisodeConfig, controller: Controller, n_runs, seed,
                r_lo=50.0, r_hi=100.0, workers=None, keep_trajectories=True):
    if n_runs < 1:
        raise ConfigurationError("n_runs must be >= 1", key="runs")
    cfgs = [monte_carlo_config(base_cfg, seed, i, r_lo, r_hi) for i in range(n_runs)]
    results = run_many(cfgs, controller, workers)
    if not keep_trajectories:
        for res in results:
            res.trajectory = res.trajectory[:0]
    return MonteCarloResult(results,
                            np.array([c.state0.r for c in cfgs]),
                            np.array([c.sun_theta0 for c in cfgs]))
