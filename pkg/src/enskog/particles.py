"""The n-particle binary collision process.

Simulation follows the classical thinning construction: candidate events
arrive as a homogeneous Poisson stream whose rate majorizes every true
collision rate, and each candidate (pair, angle, sphere point, level) is
accepted with probability proportional to the actual kernel value at the
current state.  Because the candidate law never depends on the state, the
whole candidate stream can be drawn in batches without changing a single
sample; acceptance and the velocity update are the only sequential parts.

Randomness is organized as one seed with six named child streams, spawned
in a fixed documented order (init, dt, pair, theta, xi, z), one generator
per draw kind.  Within each stream, draws are consumed in event order.
This makes runs bit-reproducible and makes the batched driver ``run``
agree sample-for-sample with repeated calls of the single-event ``step``.

Positions are updated lazily.  Free flight between collisions is linear,
so a particle's position is materialized only when an accepted event or a
snapshot needs it; rejected candidates compute positions without writing
them back.  An uncollided particle therefore keeps its exact initial
(r, v) pair and its position at time t is a single fused multiply away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import deflection, sample_sphere
from .kernels import KernelSuite, q_mass, q_sample

INITIAL_LAWS = ("point", "gaussian", "uniform-ball", "heavy-tail")

_BATCH = 2048


def deflection_sphere_area(d: int) -> float:
    """Surface area of the deflection sphere S^(d-2), e.g. 2 pi for d = 3."""
    q = d - 1
    return 2.0 * math.pi ** (q / 2.0) / math.gamma(q / 2.0)


@dataclass(frozen=True)
class RngStreams:
    """Named child generators of one root seed.

    Spawn order (and thus the meaning of a seed) is fixed: init, dt, pair,
    theta, xi, z.  ``init`` is consumed once when sampling the initial
    state; the rest are consumed one draw per candidate event, in the
    order dt -> pair -> theta -> xi -> z.
    """

    init: np.random.Generator
    dt: np.random.Generator
    pair: np.random.Generator
    theta: np.random.Generator
    xi: np.random.Generator
    z: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        children = np.random.SeedSequence(seed).spawn(6)
        gens = [np.random.Generator(np.random.Philox(c)) for c in children]
        return cls(*gens)


@dataclass(frozen=True)
class InitialLaw:
    """Product initial law for (position, velocity) pairs.

    gaussian: both factors centered normal, with velocity variance
    ``temperature`` per component.  point: everything at (center_r,
    center_v).  uniform-ball: velocities uniform in the ball of the given
    radius.  heavy-tail: velocity components i.i.d. Student t with
    ``tail_index`` degrees of freedom, which has finite absolute moments
    only below the index -- the natural initial data for soft-kernel runs
    that need finite low moments but infinite kinetic energy.
    """

    kind: str = "gaussian"
    temperature: float = 1.0
    position_scale: float = 1.0
    radius: float = 1.0
    tail_index: float = 1.8
    center_r: tuple = ()
    center_v: tuple = ()

    def __post_init__(self):
        if self.kind not in INITIAL_LAWS:
            raise ValueError(f"initial law must be one of {INITIAL_LAWS}")
        if self.temperature <= 0 or self.position_scale <= 0 or self.radius <= 0:
            raise ValueError("initial law scale parameters must be positive")
        if self.tail_index <= 1.0:
            raise ValueError("tail_index must exceed 1 so the mean exists")

    def _centers(self, d):
        cr = np.asarray(self.center_r, dtype=float) if self.center_r else np.zeros(d)
        cv = np.asarray(self.center_v, dtype=float) if self.center_v else np.zeros(d)
        if cr.shape != (d,) or cv.shape != (d,):
            raise ValueError("centers must have length d")
        return cr, cv


@dataclass
class ParticleState:
    """Mutable simulation state with lazily synchronized positions.

    ``r[k]`` is particle k's position at its own time ``t_sync[k]``; the
    true position at the current time is r[k] + v[k] (t - t_sync[k]).
    ``gate`` caches the energy-ball truncation factor, a path constant.
    """

    t: float
    r: np.ndarray
    v: np.ndarray
    t_sync: np.ndarray
    gate: float | None = None

    @property
    def n(self) -> int:
        return self.r.shape[0]

    @property
    def d(self) -> int:
        return self.r.shape[1]

    def positions_at(self, t: float) -> np.ndarray:
        """Positions of all particles at time t, without committing them."""
        return self.r + self.v * (t - self.t_sync)[:, None]

    def kinetic_total(self) -> float:
        return float(np.sum(self.v * self.v))


@dataclass(frozen=True)
class Snapshot:
    """Immutable copy of the empirical state at a checkpoint time."""

    t: float
    r: np.ndarray
    v: np.ndarray

    @property
    def n(self) -> int:
        return self.r.shape[0]

    @property
    def d(self) -> int:
        return self.r.shape[1]


@dataclass(frozen=True)
class CollisionEvent:
    """One candidate event, accepted or not."""

    time: float
    k: int
    j: int
    theta: float
    xi: np.ndarray
    z: float
    accepted: bool


class EventLog:
    """Columnar record of every candidate event of a run."""

    def __init__(self, time, k, j, theta, xi, z, accepted):
        self.time = np.asarray(time, dtype=float)
        self.k = np.asarray(k, dtype=np.int64)
        self.j = np.asarray(j, dtype=np.int64)
        self.theta = np.asarray(theta, dtype=float)
        self.xi = np.asarray(xi, dtype=float)
        self.z = np.asarray(z, dtype=float)
        self.accepted = np.asarray(accepted, dtype=bool)

    def __len__(self):
        return self.time.size

    @property
    def accepted_count(self) -> int:
        return int(self.accepted.sum())

    def row(self, i: int) -> CollisionEvent:
        return CollisionEvent(
            float(self.time[i]), int(self.k[i]), int(self.j[i]), float(self.theta[i]),
            self.xi[i].copy(), float(self.z[i]), bool(self.accepted[i]),
        )

    @classmethod
    def empty(cls, d: int) -> "EventLog":
        return cls([], [], [], [], np.empty((0, d - 1)), [], [])

    @classmethod
    def from_events(cls, events, d: int) -> "EventLog":
        if not events:
            return cls.empty(d)
        return cls(
            [e.time for e in events], [e.k for e in events], [e.j for e in events],
            [e.theta for e in events], np.array([e.xi for e in events]),
            [e.z for e in events], [e.accepted for e in events],
        )


@dataclass(frozen=True)
class SimConfig:
    """Static description of one run."""

    n: int
    d: int = 3
    t_end: float = 1.0
    seed: int = 0
    checkpoints: tuple | None = None
    kernels: KernelSuite = field(default_factory=KernelSuite)
    initial: InitialLaw = field(default_factory=InitialLaw)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("particle count n must be at least 1")
        if self.d < 3:
            raise ValueError("dimension d must be at least 3")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.checkpoints is None:
            cps = (0.0, float(self.t_end))
        else:
            cps = tuple(float(c) for c in self.checkpoints)
        if any(b < a for a, b in zip(cps, cps[1:])):
            raise ValueError("checkpoints must be nondecreasing")
        if cps and (cps[0] < 0.0 or cps[-1] > self.t_end):
            raise ValueError("checkpoints must lie inside [0, t_end]")
        object.__setattr__(self, "checkpoints", cps)


class ConservationReport(NamedTuple):
    momentum_initial: np.ndarray
    momentum_final: np.ndarray
    energy_initial: float
    energy_final: float
    momentum_drift: float
    energy_drift: float


class RunResult(NamedTuple):
    snapshots: list
    events: EventLog
    audit: ConservationReport
    state: ParticleState


def init_iid(law: InitialLaw, n: int, d: int, rng: np.random.Generator) -> ParticleState:
    """Draw n i.i.d. (position, velocity) pairs from the initial law.

    Consumes the ``init`` stream in a fixed order: all positions first,
    then all velocities.
    """
    cr, cv = law._centers(d)
    if law.kind == "point":
        r = np.tile(cr, (n, 1))
        v = np.tile(cv, (n, 1))
    elif law.kind == "gaussian":
        r = cr + law.position_scale * rng.standard_normal((n, d))
        v = cv + math.sqrt(law.temperature) * rng.standard_normal((n, d))
    elif law.kind == "uniform-ball":
        r = cr + law.position_scale * rng.standard_normal((n, d))
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        u = rng.uniform(0.0, 1.0, n) ** (1.0 / d)
        v = cv + law.radius * u[:, None] * g
    else:  # heavy-tail
        r = cr + law.position_scale * rng.standard_normal((n, d))
        v = cv + rng.standard_t(law.tail_index, (n, d))
    return ParticleState(t=0.0, r=r, v=v, t_sync=np.zeros(n))


def total_rate(cfg: SimConfig) -> float:
    """Candidate event rate of the thinning construction.

    (n / 2) * |Q| * |S^(d-2)| * majorant: ordered pairs contribute n^2
    directed collisions at rate 1/(2n) each under the majorant kernel.
    """
    return (
        0.5 * cfg.n * q_mass(cfg.kernels.angular)
        * deflection_sphere_area(cfg.d) * cfg.kernels.thinning_bound
    )


def ensure_gate(state: ParticleState, suite: KernelSuite) -> float:
    """Evaluate (once) the energy-ball gate for this path."""
    if state.gate is None:
        state.gate = suite.energy_gate(state.kinetic_total())
    return state.gate


def _sigma_scalar(suite: KernelSuite):
    """Scalar fast path of ``thinning_sigma`` for the event loop."""
    vel = suite.velocity
    if vel.form == "maxwellian" or vel.gamma == 0.0:
        return lambda rel: 1.0
    g = vel.gamma
    if vel.soft:
        m = suite.truncation.m
        return lambda rel: m if rel == 0.0 else min(rel**g, m)
    return lambda rel: rel**g


def _apply_candidate(state, sigma_of, rho2, bound, gate, t_new, k, j, theta, xi, z):
    """Shared accept/apply logic; returns True if the collision happened."""
    vk = state.v[k]
    vj = state.v[j]
    dv = vj - vk
    rel = math.sqrt(float(dv @ dv))
    rk = state.r[k] + vk * (t_new - state.t_sync[k])
    rj = state.r[j] + vj * (t_new - state.t_sync[j])
    dr = rk - rj
    s = float(dr @ dr) / rho2
    beta = (1.0 - s) ** 2 if s < 1.0 else 0.0
    threshold = gate * sigma_of(rel) * beta
    if threshold > bound * (1.0 + 1e-12):
        raise RuntimeError(
            f"thinning majorant breached: threshold {threshold} exceeds bound {bound}"
        )
    if z > threshold or k == j or rel == 0.0:
        return False
    # commit positions at the event time, then exchange momentum
    state.r[k] = rk
    state.r[j] = rj
    state.t_sync[k] = t_new
    state.t_sync[j] = t_new
    a = deflection(vk, vj, theta, xi)
    state.v[k] = vk + a
    state.v[j] = vj - a
    return True


def step(state: ParticleState, cfg: SimConfig, streams: RngStreams):
    """Advance by one candidate event, drawing dt, pair, theta, xi, z.

    The state is mutated in place and returned together with the event
    record.  Termination (time exceeding a horizon) is the caller's
    concern; the clock always advances by the drawn waiting time.
    """
    suite = cfg.kernels
    lam = total_rate(cfg)
    gate = ensure_gate(state, suite)
    dt = float(streams.dt.exponential(1.0 / lam))
    k, j = (int(x) for x in streams.pair.integers(0, cfg.n, 2))
    theta = float(q_sample(suite.angular, streams.theta))
    xi = sample_sphere(streams.xi, cfg.d)
    z = float(streams.z.uniform(0.0, suite.thinning_bound))
    t_new = state.t + dt
    accepted = _apply_candidate(
        state, _sigma_scalar(suite), suite.spatial.rho**2, suite.thinning_bound,
        gate, t_new, k, j, theta, xi, z,
    )
    state.t = t_new
    return state, CollisionEvent(t_new, k, j, theta, xi, z, accepted)


def _snapshot(state: ParticleState, t: float) -> Snapshot:
    r = state.positions_at(t)
    return Snapshot(t=t, r=r, v=state.v.copy())


def run(cfg: SimConfig, streams: RngStreams | None = None) -> RunResult:
    """Simulate [0, t_end], returning checkpoints, the event log, an audit.

    Candidates are drawn in fixed-size blocks from the per-kind streams,
    which leaves every sample identical to what sequential ``step`` calls
    produce.  Snapshots are emitted exactly at the configured checkpoint
    times as the clock passes them; they are pure copies and do not
    perturb the lazy position bookkeeping.
    """
    if streams is None:
        streams = RngStreams.from_seed(cfg.seed)
    state = init_iid(cfg.initial, cfg.n, cfg.d, streams.init)
    suite = cfg.kernels
    lam = total_rate(cfg)
    bound = suite.thinning_bound
    gate = ensure_gate(state, suite)

    mom0 = state.v.sum(axis=0)
    en0 = state.kinetic_total()

    pending = list(cfg.checkpoints)
    snapshots = []
    cols = {"time": [], "k": [], "j": [], "theta": [], "xi": [], "z": [], "accepted": []}
    sigma_of = _sigma_scalar(suite)
    rho2 = suite.spatial.rho**2

    done = False
    while not done:
        dts = streams.dt.exponential(1.0 / lam, _BATCH)
        pairs = streams.pair.integers(0, cfg.n, (_BATCH, 2))
        thetas = q_sample(suite.angular, streams.theta, _BATCH)
        xis = sample_sphere(streams.xi, cfg.d, _BATCH)
        zs = streams.z.uniform(0.0, bound, _BATCH)
        times = np.empty(_BATCH)
        acc = np.zeros(_BATCH, dtype=bool)
        used = 0
        for i in range(_BATCH):
            t_new = state.t + dts[i]
            while pending and pending[0] <= min(t_new, cfg.t_end):
                snapshots.append(_snapshot(state, pending.pop(0)))
            if t_new > cfg.t_end:
                state.t = cfg.t_end
                done = True
                break
            acc[i] = _apply_candidate(
                state, sigma_of, rho2, bound, gate, t_new,
                int(pairs[i, 0]), int(pairs[i, 1]), float(thetas[i]), xis[i], zs[i],
            )
            times[i] = t_new
            state.t = t_new
            used += 1
        if used:
            cols["time"].append(times[:used].copy())
            cols["k"].append(pairs[:used, 0])
            cols["j"].append(pairs[:used, 1])
            cols["theta"].append(thetas[:used])
            cols["xi"].append(xis[:used])
            cols["z"].append(zs[:used])
            cols["accepted"].append(acc[:used])

    while pending and pending[0] <= cfg.t_end:
        snapshots.append(_snapshot(state, pending.pop(0)))

    if cols["time"]:
        events = EventLog(
            np.concatenate(cols["time"]), np.concatenate(cols["k"]),
            np.concatenate(cols["j"]), np.concatenate(cols["theta"]),
            np.concatenate(cols["xi"]), np.concatenate(cols["z"]),
            np.concatenate(cols["accepted"]),
        )
    else:
        events = EventLog.empty(cfg.d)

    audit = conservation_audit(state, mom0, en0)
    return RunResult(snapshots, events, audit, state)


def conservation_audit(
    state: ParticleState, momentum_initial: np.ndarray, energy_initial: float
) -> ConservationReport:
    """Relative drift of total momentum and kinetic energy since time zero."""
    mom = state.v.sum(axis=0)
    en = state.kinetic_total()
    mdrift = float(np.linalg.norm(mom - momentum_initial)) / (
        1.0 + float(np.linalg.norm(momentum_initial))
    )
    edrift = abs(en - energy_initial) / (1.0 + energy_initial)
    return ConservationReport(momentum_initial, mom, energy_initial, en, mdrift, edrift)
