"""Tagged particle driven by a frozen empirical flow, and chaos metrics.

The tagged process is the one-particle analogue of the ensemble dynamics:
candidates arrive at rate q_mass * |S^(d-2)| * majorant, each candidate
reads a partner uniformly from the stored flow at the snapshot nearest
below the current time, and acceptance applies the same effective kernel
as the n-particle thinning loop.  The flow is frozen, read from a
completed run; the law identity between the tagged path and the ensemble
marginal is verified statistically (energy distance), not enforced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import deflection, sample_sphere
from .kernels import KernelSuite, q_mass, q_sample
from .particles import EventLog, RngStreams, Snapshot, deflection_sphere_area


@dataclass(frozen=True)
class MarginalFlow:
    """Checkpointed empirical snapshots, read piecewise-constant in time."""

    times: tuple
    snapshots: tuple

    def __post_init__(self):
        if len(self.times) == 0:
            raise ValueError("flow must contain at least one snapshot")
        if len(self.times) != len(self.snapshots):
            raise ValueError("times and snapshots must align")
        ts = tuple(float(t) for t in self.times)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("flow times must be strictly increasing")
        n, d = self.snapshots[0].n, self.snapshots[0].d
        if any(s.n != n or s.d != d for s in self.snapshots):
            raise ValueError("flow snapshots must share n and d")
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "snapshots", tuple(self.snapshots))

    @classmethod
    def from_run(cls, result) -> "MarginalFlow":
        return cls(
            times=tuple(s.t for s in result.snapshots),
            snapshots=tuple(result.snapshots),
        )

    @property
    def n(self) -> int:
        return self.snapshots[0].n

    @property
    def d(self) -> int:
        return self.snapshots[0].d

    def at(self, t: float) -> Snapshot:
        """Snapshot at the checkpoint nearest below t."""
        if t < self.times[0] - 1e-12:
            raise ValueError(f"time {t} precedes the flow's first checkpoint")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.snapshots[max(i, 0)]


@dataclass(frozen=True)
class TaggedPath:
    """Piecewise-free-flight path of one tagged particle.

    knots holds the segment boundary times (start, each accepted jump,
    end); v[i] is the constant velocity on [knots[i], knots[i+1]); r[i] is
    the exact position at knots[i], so r is the running integral of v.
    events logs every candidate in the ensemble event-log format.
    """

    knots: np.ndarray
    r: np.ndarray
    v: np.ndarray
    events: EventLog

    def velocity_at(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.knots, t, side="right")) - 1
        return self.v[min(max(i, 0), self.v.shape[0] - 1)]

    def position_at(self, t: float) -> np.ndarray:
        i = min(max(int(np.searchsorted(self.knots, t, side="right")) - 1, 0),
                self.v.shape[0] - 1)
        return self.r[i] + self.v[i] * (t - self.knots[i])


def simulate_tagged(
    flow: MarginalFlow,
    x0,
    kernels: KernelSuite,
    seed: int,
    t_end: float | None = None,
) -> TaggedPath:
    """Thinning simulation of the tagged particle against a frozen flow.

    Candidate rate q_mass * |S^(d-2)| * majorant; per candidate the draw
    order is dt, partner index, theta, xi, z, consumed from the same
    named streams as the ensemble loop (the init stream is unused because
    x0 is explicit).  A candidate accepts iff z <= sigma_eff(|V-u|) beta(R-q)
    with (q, u) read from the flow at the snapshot nearest below the
    candidate time; accepted candidates jump V by the deflection.
    """
    r0, v0 = (np.asarray(a, dtype=float).copy() for a in x0)
    d = r0.size
    t0 = flow.times[0]
    horizon = flow.times[-1] if t_end is None else float(t_end)
    if horizon <= t0:
        raise ValueError("t_end must exceed the flow's first checkpoint")

    streams = RngStreams.from_seed(seed)
    suite = kernels
    bound = suite.thinning_bound
    lam = q_mass(suite.angular) * deflection_sphere_area(d) * bound
    rho2 = suite.spatial.rho**2

    t = t0
    r = r0
    v = v0
    knots = [t0]
    rs = [r0.copy()]
    vs = [v0.copy()]
    events = []
    while True:
        dt = float(streams.dt.exponential(1.0 / lam))
        t_new = t + dt
        if t_new > horizon:
            break
        eta = int(streams.pair.integers(0, flow.n))
        theta = float(q_sample(suite.angular, streams.theta))
        xi = sample_sphere(streams.xi, d)
        z = float(streams.z.uniform(0.0, bound))
        snap = flow.at(t_new)
        q, u = snap.r[eta], snap.v[eta]
        r_now = r + v * (t_new - knots[-1])
        dv = u - v
        rel = float(np.sqrt(dv @ dv))
        dr = r_now - q
        s = float(dr @ dr) / rho2
        beta = (1.0 - s) ** 2 if s < 1.0 else 0.0
        sigma = float(suite.thinning_sigma(rel))
        threshold = sigma * beta
        if threshold > bound * (1.0 + 1e-12):
            raise RuntimeError(
                f"thinning majorant breached: threshold {threshold} exceeds bound {bound}"
            )
        accepted = z <= threshold and rel > 0.0
        if accepted:
            alpha = deflection(v, u, theta, xi)
            r = r_now
            v = v + alpha
            knots.append(t_new)
            rs.append(r.copy())
            vs.append(v.copy())
        events.append((t_new, eta, theta, xi, z, accepted))
        t = t_new

    r_final = rs[-1] + vs[-1] * (horizon - knots[-1])
    knots.append(horizon)
    rs.append(r_final)

    if events:
        log = EventLog(
            time=[e[0] for e in events],
            k=np.zeros(len(events), dtype=np.int64),
            j=[e[1] for e in events],
            theta=[e[2] for e in events],
            xi=np.array([e[3] for e in events]),
            z=[e[4] for e in events],
            accepted=[e[5] for e in events],
        )
    else:
        log = EventLog.empty(d)
    return TaggedPath(
        knots=np.array(knots), r=np.array(rs), v=np.array(vs), events=log
    )


def energy_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Energy distance between two point clouds (V-statistic form).

    2 E|X-Y| - E|X-X'| - E|Y-Y'| with all means over full index grids
    (diagonals included), which keeps the estimate nonnegative and defined
    down to single-point clouds.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    cross = float(cdist(a, b).mean())
    within_a = float(cdist(a, a).mean())
    within_b = float(cdist(b, b).mean())
    return 2.0 * cross - within_a - within_b


def chaos_distance(a: Snapshot, b: Snapshot) -> float:
    """Energy distance between two snapshots' (r, v) clouds."""
    if a.n < 1 or b.n < 1:
        raise ValueError("snapshots must be nonempty")
    pa = np.concatenate([a.r, a.v], axis=1)
    pb = np.concatenate([b.r, b.v], axis=1)
    return energy_distance(pa, pb)


def variance_scaling_fit(points) -> float:
    """Least-squares slope of log variance against log n.

    points is a sequence of (n, variance) pairs; at least three, with
    distinct n and positive variances.  An exact C/n law gives slope -1.
    """
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValueError("need at least three (n, variance) points")
    ns = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if np.unique(ns).size != ns.size:
        raise ValueError("n values must be distinct")
    if np.any(vs <= 0.0):
        raise ValueError("variances must be positive")
    slope, _ = np.polyfit(np.log(ns), np.log(vs), 1)
    return float(slope)
