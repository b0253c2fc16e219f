"""Collision geometry for the binary jump process.

Everything here is pure vector algebra on velocities in R^d, d >= 3.  A
collision between velocities v and u is parameterized by a scattering angle
theta in (0, pi] and a point xi on the unit sphere S^{d-2} of R^{d-1}.  The
deflection carries the pair (v, u) to (v + a, u - a) where the increment a
depends on (v, u, theta, xi) through a sphere embedding built from a
Householder reflection.

All functions broadcast over leading axes: vectors have shape (..., d),
sphere points (..., d-1), angles (...).  Scalars in, scalars out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this squared norm a direction is treated as exactly degenerate.
_TINY = 1e-300


def _last_norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


def householder_normal(x: np.ndarray) -> np.ndarray:
    """Unit normal of the reflection hyperplane aligning e_d with x/|x|.

    Returns the unit vector along e_d - x/|x|, or the zero vector when x is
    already parallel to +e_d, in which case the reflection degenerates to
    the identity.  ``reflect`` treats a zero normal as the identity, so no
    separate flag is needed.  The antipodal direction x = -|x| e_d is
    perfectly conditioned here: the unnormalized normal has length 2.  The
    zero vector is accepted for convenience and maps to the reflection
    through the last-coordinate hyperplane; callers that scale the result
    by |x| never see the difference.
    """
    x = np.asarray(x, dtype=float)
    n = _last_norm(x)[..., None]
    xhat = np.divide(x, n, out=np.zeros_like(x), where=n > _TINY)
    w = -xhat
    w[..., -1] += 1.0
    wn = _last_norm(w)[..., None]
    return np.divide(w, wn, out=np.zeros_like(w), where=wn > 1e-15)


def reflect(normal: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Apply the Householder reflection with the given unit normal to y.

    A zero normal acts as the identity.  The map is an involution and an
    isometry; both facts are exercised heavily by the test suite.
    """
    normal = np.asarray(normal, dtype=float)
    y = np.asarray(y, dtype=float)
    dot = np.sum(normal * y, axis=-1, keepdims=True)
    return y - 2.0 * dot * normal


@dataclass(frozen=True)
class Reflection:
    """Householder reflection packaged as a callable linear map."""

    normal: np.ndarray

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return reflect(self.normal, y)


def householder_align(x: np.ndarray) -> Reflection:
    """Reflection R with R(e_d) = x/|x|.

    R is symmetric and involutive, hence equal to its own inverse.  For x
    parallel to +e_d the returned map is the identity.
    """
    return Reflection(householder_normal(x))


def _embed(unit: np.ndarray) -> np.ndarray:
    """Append a zero last coordinate: S^{d-2} point -> vector in R^d."""
    unit = np.asarray(unit, dtype=float)
    out = np.zeros(unit.shape[:-1] + (unit.shape[-1] + 1,))
    out[..., :-1] = unit
    return out


def perp_embed(x: np.ndarray, unit: np.ndarray) -> np.ndarray:
    """Place a unit sphere point into the hyperplane orthogonal to x.

    Maps ``unit`` on S^{d-2} to a vector of length |x| orthogonal to x, by
    embedding it with last coordinate zero and reflecting through the
    hyperplane that aligns e_d with x/|x|.  For x parallel to +e_d this is
    just |x| * (unit, 0).  Returns the zero vector when x = 0.
    """
    x = np.asarray(x, dtype=float)
    n = _last_norm(x)[..., None]
    return n * reflect(householder_normal(x), _embed(unit))


def transport_unit(x: np.ndarray, y: np.ndarray, unit: np.ndarray) -> np.ndarray:
    """Carry a sphere point from the collision frame of x to that of y.

    ``perp_embed(x, unit)`` lives on the radius-|x| sphere orthogonal to x.
    This function returns the point ``unit0`` on S^{d-2} such that
    ``perp_embed(y, unit0)`` is the image of ``perp_embed(x, unit)`` under
    the in-plane rotation taking x/|x| to y/|y| (rescaled to |y|).  The
    construction is a composition of isometries, so it is a bijection of
    S^{d-2}, and it satisfies the closeness bound

        |perp_embed(x, unit) - perp_embed(y, transport_unit(x, y, unit))|
            <= 3 |x - y|,

    which is what makes collision increments stable under perturbation of
    the relative velocity.  When x == y elementwise the input is returned
    unchanged.  For nearly antipodal directions the rotation is replaced by
    the reflection through the hyperplane orthogonal to x, which maps the
    frame of x isometrically onto the frame of y; the bound is slack there.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    unit = np.asarray(unit, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    d = x.shape[-1]

    same = np.all(x == y, axis=-1)

    nx = _last_norm(x)[..., None]
    ny = _last_norm(y)[..., None]
    a = np.divide(x, nx, out=np.zeros_like(x), where=nx > _TINY)
    b = np.divide(y, ny, out=np.zeros_like(y), where=ny > _TINY)

    z = reflect(householder_normal(x), _embed(unit))

    c = np.sum(a * b, axis=-1, keepdims=True)
    antipodal = (1.0 + c) < 1e-12
    denom = np.where(antipodal, 1.0, 1.0 + c)

    ab = a + b
    rotated = (
        z
        - (np.sum(ab * z, axis=-1, keepdims=True) / denom) * ab
        + 2.0 * np.sum(a * z, axis=-1, keepdims=True) * b
    )
    flipped = z - 2.0 * np.sum(a * z, axis=-1, keepdims=True) * a
    moved = np.where(antipodal, flipped, rotated)

    back = reflect(householder_normal(y), moved)[..., : d - 1]
    nb = _last_norm(back)[..., None]
    back = np.divide(back, nb, out=back, where=nb > _TINY)

    if np.any(same):
        back = np.where(same[..., None], np.broadcast_to(unit, back.shape), back)
    return back


def deflection(v: np.ndarray, u: np.ndarray, theta, unit: np.ndarray) -> np.ndarray:
    """Velocity increment of the collision (v, u, theta, unit).

    Equals sin^2(theta/2) (u - v) plus (sin(theta)/2) times the orthogonal
    sphere embedding of ``unit`` for the relative velocity u - v.  Its
    norm is |v - u| sin(theta/2) identically, and theta = pi swaps the
    velocities.  Zero when v == u.
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    theta = np.asarray(theta, dtype=float)[..., None]
    rel = u - v
    return np.sin(theta / 2.0) ** 2 * rel + 0.5 * np.sin(theta) * perp_embed(rel, unit)


def collide(v: np.ndarray, u: np.ndarray, theta, unit: np.ndarray):
    """Post-collision pair (v + a, u - a) for the increment a of ``deflection``.

    Momentum v + u and kinetic energy |v|^2 + |u|^2 are conserved exactly
    in exact arithmetic; in floats the drift is a few ulp per event.
    """
    a = deflection(v, u, theta, unit)
    return v + a, u - a


def sample_sphere(rng: np.random.Generator, d: int, size=None) -> np.ndarray:
    """Uniform points on the unit sphere S^{d-2} of R^{d-1}, d >= 3.

    Gaussian draws normalized to unit length; ``size=None`` gives a single
    point of shape (d-1,), otherwise shape (size, d-1).
    """
    if d < 3:
        raise ValueError("sphere sampling needs dimension d >= 3")
    shape = (d - 1,) if size is None else (size, d - 1)
    g = rng.standard_normal(shape)
    n = _last_norm(g)[..., None]
    # Resample exact zero norms is overkill at these dimensions; nudge instead.
    n = np.where(n > _TINY, n, 1.0)
    return g / n


def circle_nodes(m: int):
    """Equal-weight trapezoid rule on the circle S^1 (the d = 3 case).

    Returns ``(nodes, weights)`` with nodes of shape (m, 2) at equispaced
    angles starting from 0 and weights summing to 2 pi.  Exact for
    trigonometric polynomials of degree < m, which in particular makes the
    sphere average of the embedded point vanish to machine precision.
    """
    if m < 2:
        raise ValueError("need at least 2 circle nodes")
    ang = 2.0 * np.pi * np.arange(m) / m
    nodes = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    weights = np.full(m, 2.0 * np.pi / m)
    return nodes, weights
