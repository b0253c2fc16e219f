"""Functionals of the empirical measure.

Everything the verification layer asks of a simulated path lives here:
velocity moments, the collision increment operator applied to a test
function by tensor quadrature in (theta, xi), the full pair generator, and
the two weak-form diagnostics built on it (the pathwise residual and the
balance series).  The test functions are a small closed family with
analytic gradients: radial bumps in (r, v) and smooth-clamped monomials.
Residual evaluation is O(checkpoints * n^2 * quadrature), so the pairwise
entry points refuse systems larger than PAIRWISE_CAP particles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .geometry import circle_nodes, perp_embed
from .kernels import AngularMeasure, KernelSuite, beta_eval, theta_quadrature

PAIRWISE_CAP = 1000

# chunk size for the (pairs, theta, xi) scalar grids; keeps peak memory
# per temporary near 40 MB at 40 theta nodes and 16 circle nodes
_PAIR_CHUNK = 4096


@dataclass(frozen=True)
class CollisionQuadrature:
    """Tensor rule for integrals over (theta, xi) against Q(dtheta) dxi.

    theta/w_theta integrate the angular measure exactly in total mass;
    xi holds equispaced circle nodes (d = 3) with uniform weight w_xi, the
    trapezoid rule on the periodic circle.  sin_half_sq and sin_over_two
    cache the two scalar functions of theta every collision formula needs.
    """

    theta: np.ndarray
    w_theta: np.ndarray
    xi: np.ndarray
    w_xi: float
    sin_half_sq: np.ndarray = field(init=False)
    sin_over_two: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sin_half_sq", np.sin(self.theta / 2.0) ** 2)
        object.__setattr__(self, "sin_over_two", np.sin(self.theta) / 2.0)


def collision_quadrature(
    ang: AngularMeasure, d: int = 3, order: int = 8, circle: int = 16
) -> CollisionQuadrature:
    """Build the product quadrature used by every l_psi evaluation.

    order is the Gauss-Legendre node count per theta panel (atoms are
    summed exactly instead); circle is the xi node count.  Both floors sit
    at 8 nodes per dimension.
    """
    if d != 3:
        raise ValueError("collision quadrature is implemented for d = 3 only")
    if circle < 8:
        raise ValueError("need at least 8 circle nodes")
    if ang.form == "power-law" and order < 8:
        raise ValueError("need at least 8 theta nodes per panel")
    theta, w_theta = theta_quadrature(ang, order)
    xi, w = circle_nodes(circle)
    return CollisionQuadrature(theta=theta, w_theta=w_theta, xi=xi, w_xi=float(w[0]))


class TestFunction:
    """A one-particle observable psi(r, v) with the pieces residuals need.

    Subclasses provide value and analytic gradients (broadcast over any
    leading shape) plus sup-norm bounds on the gradients.  The collision
    average l_values has a generic implementation here; subclasses
    override it with an algebraically identical scalar-grid evaluation
    that avoids materializing post-collision velocity vectors.
    """

    def value(self, r, v):
        raise NotImplementedError

    def grad_r(self, r, v):
        raise NotImplementedError

    def grad_v(self, r, v):
        raise NotImplementedError

    @property
    def sup_grad_r(self) -> float:
        raise NotImplementedError

    @property
    def sup_grad_v(self) -> float:
        raise NotImplementedError

    def l_values(self, r, v, u, quad: CollisionQuadrature) -> np.ndarray:
        """Integral of psi(r, v + alpha) - psi(r, v) over (theta, xi).

        r, v, u are (P, d) rows of evaluation points and partner
        velocities; returns shape (P,).
        """
        r = np.atleast_2d(np.asarray(r, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        u = np.atleast_2d(np.asarray(u, dtype=float))
        p = v.shape[0]
        st = quad.sin_half_sq[None, :, None, None]
        ct = quad.sin_over_two[None, :, None, None]
        base = self.value(r, v)
        out = np.empty(p)
        for a in range(0, p, _PAIR_CHUNK):
            b = min(a + _PAIR_CHUNK, p)
            x = u[a:b] - v[a:b]
            g = perp_embed(x[:, None, :], quad.xi)
            alpha = st * x[:, None, None, :] + ct * g[:, None, :, :]
            vals = self.value(r[a:b, None, None, :], v[a:b, None, None, :] + alpha)
            diff = vals - base[a:b, None, None]
            out[a:b] = (diff * quad.w_theta[None, :, None]).sum(axis=(1, 2))
        return out * quad.w_xi


class RadialBump(TestFunction):
    """C^1 bump ((1 - s)+)^2 with s = (|r - c_r|^2 + |v - c_v|^2) / R^2."""

    def __init__(self, center_r, center_v, radius: float):
        self.center_r = np.asarray(center_r, dtype=float)
        self.center_v = np.asarray(center_v, dtype=float)
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def _s(self, r, v):
        dr = np.asarray(r, dtype=float) - self.center_r
        dv = np.asarray(v, dtype=float) - self.center_v
        return (np.sum(dr * dr, axis=-1) + np.sum(dv * dv, axis=-1)) / self.radius**2

    def value(self, r, v):
        h = np.clip(1.0 - self._s(r, v), 0.0, None)
        return h * h

    def grad_r(self, r, v):
        h = np.clip(1.0 - self._s(r, v), 0.0, None)
        dr = np.asarray(r, dtype=float) - self.center_r
        return (-4.0 / self.radius**2) * h[..., None] * dr

    def grad_v(self, r, v):
        h = np.clip(1.0 - self._s(r, v), 0.0, None)
        dv = np.asarray(v, dtype=float) - self.center_v
        return (-4.0 / self.radius**2) * h[..., None] * dv

    @property
    def sup_grad_r(self) -> float:
        # max of 4 (1 - s) sqrt(s) / R over s in [0, 1], attained at s = 1/3
        return 8.0 / (3.0 * math.sqrt(3.0) * self.radius)

    sup_grad_v = sup_grad_r

    def l_values(self, r, v, u, quad):
        # same tensor rule as the base class, evaluated on scalar grids:
        # |w + alpha|^2 = |w|^2 + 2 s (w.X) + 2 c (w.Gamma) + |X|^2 s with
        # s = sin^2(theta/2), c = sin(theta)/2, X = u - v, w = v - c_v
        r = np.atleast_2d(np.asarray(r, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        u = np.atleast_2d(np.asarray(u, dtype=float))
        p = v.shape[0]
        rr = np.sum((r - self.center_r) ** 2, axis=-1)
        w = v - self.center_v
        x = u - v
        e = np.sum(w * w, axis=-1)
        x2 = np.sum(x * x, axis=-1)
        pd = np.sum(w * x, axis=-1)
        st = quad.sin_half_sq[None, :, None]
        ct = quad.sin_over_two[None, :, None]
        r2 = self.radius**2
        base = np.clip(1.0 - (rr + e) / r2, 0.0, None) ** 2
        out = np.empty(p)
        for a in range(0, p, _PAIR_CHUNK):
            b = min(a + _PAIR_CHUNK, p)
            g = perp_embed(x[a:b, None, :], quad.xi)
            wg = np.einsum("pd,pmd->pm", w[a:b], g)
            dot2 = (
                st * (2.0 * pd[a:b, None, None] + x2[a:b, None, None])
                + 2.0 * ct * wg[:, None, :]
            )
            s_new = (rr[a:b, None, None] + e[a:b, None, None] + dot2) / r2
            vals = np.clip(1.0 - s_new, 0.0, None) ** 2
            diff = vals - base[a:b, None, None]
            out[a:b] = (diff * quad.w_theta[None, :, None]).sum(axis=(1, 2))
        return out * quad.w_xi


class ClampedMoment(TestFunction):
    """Smooth-clamped monomial of the velocity, constant far out.

    The saturation c(x) equals x up to ``clamp``, bends through a C^1
    parabola on [clamp, clamp + width], and is constant beyond, so the
    function is bounded with gradient bounded by one.  kind "component"
    applies sign(x) c(|x|) to one velocity coordinate; kind "speed2"
    applies c to |v|^2.
    """

    KINDS = ("component", "speed2")

    def __init__(self, kind: str, clamp: float, width: float, index: int = 0):
        if kind not in self.KINDS:
            raise ValueError(f"kind must be one of {self.KINDS}")
        if clamp <= 0 or width <= 0:
            raise ValueError("clamp and width must be positive")
        self.kind = kind
        self.clamp = float(clamp)
        self.width = float(width)
        self.index = int(index)

    def _sat(self, x):
        a, w = self.clamp, self.width
        y = np.minimum(x, a + w)
        mid = y - np.clip(y - a, 0.0, None) ** 2 / (2.0 * w)
        return np.where(x <= a, x, mid)

    def _sat_prime(self, x):
        a, w = self.clamp, self.width
        return np.clip(1.0 - np.clip(x - a, 0.0, None) / w, 0.0, 1.0)

    def _apply(self, x):
        if self.kind == "component":
            return np.sign(x) * self._sat(np.abs(x))
        return self._sat(x)

    def value(self, r, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "component":
            return self._apply(v[..., self.index])
        return self._apply(np.sum(v * v, axis=-1))

    def grad_r(self, r, v):
        return np.zeros(np.asarray(v, dtype=float).shape)

    def grad_v(self, r, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape)
        if self.kind == "component":
            x = v[..., self.index]
            out[..., self.index] = self._sat_prime(np.abs(x))
            return out
        return 2.0 * self._sat_prime(np.sum(v * v, axis=-1))[..., None] * v

    @property
    def sup_grad_r(self) -> float:
        return 0.0

    @property
    def sup_grad_v(self) -> float:
        if self.kind == "component":
            return 1.0
        # gradient 2 |v| sat'(|v|^2) vanishes once |v|^2 > clamp + width
        return 2.0 * math.sqrt(self.clamp + self.width)

    def l_values(self, r, v, u, quad):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        u = np.atleast_2d(np.asarray(u, dtype=float))
        p = v.shape[0]
        x = u - v
        st = quad.sin_half_sq[None, :, None]
        ct = quad.sin_over_two[None, :, None]
        base = self.value(None, v)
        out = np.empty(p)
        for a in range(0, p, _PAIR_CHUNK):
            b = min(a + _PAIR_CHUNK, p)
            g = perp_embed(x[a:b, None, :], quad.xi)
            if self.kind == "component":
                i = self.index
                comp = (
                    v[a:b, None, None, i]
                    + st * x[a:b, None, None, i]
                    + ct * g[:, None, :, i]
                )
                vals = self._apply(comp)
            else:
                vg = np.einsum("pd,pmd->pm", v[a:b], g)
                x2 = np.sum(x[a:b] * x[a:b], axis=-1)
                pv = np.sum(v[a:b] * x[a:b], axis=-1)
                sq = (
                    np.sum(v[a:b] * v[a:b], axis=-1)[:, None, None]
                    + st * (2.0 * pv[:, None, None] + x2[:, None, None])
                    + 2.0 * ct * vg[:, None, :]
                )
                vals = self._apply(sq)
            diff = vals - base[a:b, None, None]
            out[a:b] = (diff * quad.w_theta[None, :, None]).sum(axis=(1, 2))
        return out * quad.w_xi


@dataclass(frozen=True)
class MomentSeries:
    """Moment order p of the empirical velocity law at each checkpoint."""

    times: np.ndarray
    p: float
    values: np.ndarray


def moment(snapshot_or_v, p: float) -> float:
    """Mean bracket moment (1/n) sum (1 + |v_k|^2)^(p/2); always >= 1."""
    if p < 0:
        raise ValueError("moment order p must be nonnegative")
    v = getattr(snapshot_or_v, "v", snapshot_or_v)
    v = np.asarray(v, dtype=float)
    b = 1.0 + np.sum(v * v, axis=-1)
    return float(np.mean(b ** (p / 2.0)))


def moment_series(snapshots, p: float) -> MomentSeries:
    times = np.array([s.t for s in snapshots])
    values = np.array([moment(s, p) for s in snapshots])
    return MomentSeries(times=times, p=float(p), values=values)


def l_psi(psi: TestFunction, r, v, u, quad: CollisionQuadrature) -> float:
    """Collision increment of psi at one point against one partner."""
    r = np.asarray(r, dtype=float)
    return float(psi.l_values(r[None, :], np.asarray(v, float)[None, :],
                              np.asarray(u, float)[None, :], quad)[0])


def _l_bound(psi: TestFunction, rel, quad: CollisionQuadrature) -> np.ndarray:
    # |alpha| = rel sin(theta/2) <= rel theta / 2, and the xi measure has
    # total mass 2 pi, so |l_psi| <= sup|grad_v psi| rel kappa/2 * 2 pi
    kappa_half = float((quad.w_theta * quad.theta).sum()) / 2.0
    circle_mass = quad.w_xi * quad.xi.shape[0]
    return psi.sup_grad_v * np.asarray(rel) * kappa_half * circle_mass


def a_op(
    psi: TestFunction,
    x,
    y,
    suite: KernelSuite,
    quad: CollisionQuadrature,
    gate: float = 1.0,
    debug: bool = False,
) -> float:
    """Pair generator at one point: transport plus weighted collision term.

    x = (r, v) is the evaluation point, y = (q, u) the partner.  sigma is
    the effective (truncated) kernel the particle process runs, so the
    value matches the simulated dynamics exactly for any truncation mode.
    """
    r, v = (np.asarray(a, dtype=float) for a in x)
    q, u = (np.asarray(a, dtype=float) for a in y)
    transport = float(np.sum(v * psi.grad_r(r, v)))
    rel = float(np.linalg.norm(v - u))
    beta = float(beta_eval(suite.spatial, r - q))
    if beta == 0.0 or rel == 0.0:
        return transport
    sig = float(suite.thinning_sigma(rel))
    lval = l_psi(psi, r, v, u, quad)
    out = transport + gate * sig * beta * lval
    if debug:
        bound = psi.sup_grad_r * float(np.linalg.norm(v)) + _l_bound(psi, rel, quad) * sig
        assert abs(out) <= bound * (1.0 + 1e-9) + 1e-12, (out, bound)
    return out


def _pair_generator_all(psi, r, v, suite, quad, gate, debug=False):
    """A(mu_n)psi at every particle of the cloud (r, v); returns (n,)."""
    n = r.shape[0]
    if n > PAIRWISE_CAP:
        raise ValueError(
            f"pairwise generator is O(n^2); refusing n = {n} > {PAIRWISE_CAP}"
        )
    transport = np.sum(v * psi.grad_r(r, v), axis=-1)
    dr = r[:, None, :] - r[None, :, :]
    beta = beta_eval(suite.spatial, dr)
    dv = v[None, :, :] - v[:, None, :]
    rel = np.sqrt(np.sum(dv * dv, axis=-1))
    active = (beta > 0.0) & (rel > 0.0)
    k_idx, j_idx = np.nonzero(active)
    if k_idx.size == 0:
        return transport
    weights = gate * np.asarray(suite.thinning_sigma(rel[k_idx, j_idx])) * beta[
        k_idx, j_idx
    ]
    lvals = psi.l_values(r[k_idx], v[k_idx], v[j_idx], quad)
    if debug:
        bound = _l_bound(psi, rel[k_idx, j_idx], quad)
        if not np.all(np.abs(lvals) <= bound * (1.0 + 1e-9) + 1e-12):
            raise AssertionError("l_psi exceeded its gradient bound")
    collision = np.bincount(k_idx, weights=weights * lvals, minlength=n) / n
    return transport + collision


def a_mu(
    psi: TestFunction,
    x,
    snapshot,
    suite: KernelSuite,
    quad: CollisionQuadrature,
    gate: float = 1.0,
    debug: bool = False,
) -> float:
    """Generator against the empirical measure of a snapshot, at point x."""
    r, v = (np.asarray(a, dtype=float) for a in x)
    n = snapshot.n
    transport = float(np.sum(v * psi.grad_r(r, v)))
    dr = r[None, :] - snapshot.r
    beta = beta_eval(suite.spatial, dr)
    dv = snapshot.v - v[None, :]
    rel = np.sqrt(np.sum(dv * dv, axis=-1))
    active = np.nonzero((beta > 0.0) & (rel > 0.0))[0]
    if active.size == 0:
        return transport
    weights = gate * np.asarray(suite.thinning_sigma(rel[active])) * beta[active]
    lvals = psi.l_values(
        np.broadcast_to(r, (active.size, r.size)),
        np.broadcast_to(v, (active.size, v.size)),
        snapshot.v[active],
        quad,
    )
    if debug:
        bound = _l_bound(psi, rel[active], quad)
        if not np.all(np.abs(lvals) <= bound * (1.0 + 1e-9) + 1e-12):
            raise AssertionError("l_psi exceeded its gradient bound")
    return transport + float(np.sum(weights * lvals)) / n


def _residual_series(snapshots, psi, suite, quad, debug=False):
    """Times and e(t_i) = <psi, mu_i> - <psi, mu_0> - trapezoid integral."""
    if len(snapshots) < 2:
        raise ValueError("need at least two checkpoints for a residual")
    times = np.array([s.t for s in snapshots])
    if np.any(np.diff(times) <= 0):
        raise ValueError("checkpoint times must be strictly increasing")
    gate = suite.energy_gate(float(np.sum(snapshots[0].v ** 2)))
    means = np.array([float(np.mean(psi.value(s.r, s.v))) for s in snapshots])
    gen_means = np.array(
        [
            float(np.mean(_pair_generator_all(psi, s.r, s.v, suite, quad, gate, debug)))
            for s in snapshots
        ]
    )
    integral = cumulative_trapezoid(gen_means, times, initial=0.0)
    return times, means - means[0] - integral


def weak_residual(
    snapshots,
    psi: TestFunction,
    suite: KernelSuite,
    s: float,
    t: float,
    quad: CollisionQuadrature | None = None,
    debug: bool = False,
) -> float:
    """Martingale residual of the weak form between checkpoint times s < t.

    F = (1/n) sum_k [psi(X_k(t)) - psi(X_k(s)) - int_s^t A(mu_u)psi(X_k(u)) du]
    with the time integral by trapezoid over the checkpoints in [s, t].
    Vanishing in mean with variance O(1/n); this is the quantity whose
    seed-to-seed fluctuation the convergence diagnostics regress against n.
    """
    times = np.array([s_.t for s_ in snapshots])
    if s >= t:
        raise ValueError("need s < t")
    i = np.flatnonzero(np.abs(times - s) <= 1e-12)
    j = np.flatnonzero(np.abs(times - t) <= 1e-12)
    if i.size == 0 or j.size == 0:
        raise ValueError("s and t must both be checkpoint times of the run")
    if quad is None:
        quad = collision_quadrature(suite.angular)
    window = snapshots[int(i[0]) : int(j[0]) + 1]
    _, series = _residual_series(window, psi, suite, quad, debug)
    return float(series[-1])


def enskog_balance(
    snapshots,
    psi: TestFunction,
    suite: KernelSuite,
    quad: CollisionQuadrature | None = None,
    debug: bool = False,
):
    """Balance defect e(t) of the limit equation along one simulated path.

    Returns (times, e) with e(t) = <psi, mu_t> - <psi, mu_0> minus the
    trapezoid integral of the pair-averaged generator.  e(0) = 0 always;
    for conserved psi the whole series sits at Monte Carlo noise level.
    """
    if quad is None:
        quad = collision_quadrature(suite.angular)
    return _residual_series(snapshots, psi, suite, quad, debug)
