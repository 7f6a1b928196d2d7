"""Geometry primitives on the unit 2-sphere.

Points are unit 3-vectors, tangent vectors at a point p are 3-vectors
orthogonal to p, and polar coordinates (theta, phi) use the colatitude /
longitude convention with theta in (0, pi) and phi in (0, 2*pi].  All
angles are radians.  Every function is pure, accepts a single vector of
shape (3,) or a batch of shape (..., 3), and is safe to call from any
number of threads.
"""

from __future__ import annotations

import numpy as np

from .errors import AntipodalError, PoleError

#: Inner products below -1 + ANTIPODAL_TOL count as antipodal.
ANTIPODAL_TOL = 1e-9


def as_unit(p: np.ndarray) -> np.ndarray:
    """Return ``p`` scaled to unit length along the last axis."""
    p = np.asarray(p, dtype=float)
    return p / np.linalg.norm(p, axis=-1, keepdims=True)


def project_tangent(base: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Project ``vec`` onto the tangent plane at ``base``."""
    base = np.asarray(base, dtype=float)
    vec = np.asarray(vec, dtype=float)
    return vec - np.sum(base * vec, axis=-1, keepdims=True) * base


def exp_map(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Move from point ``p`` along tangent vector ``v``.

    Returns cos(|v|) p + sin(|v|) v/|v|, with the zero-vector limit
    returning ``p``.  The output is renormalized to unit length.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    # sin(n)/n via sinc keeps the n -> 0 limit exact.
    q = np.cos(n) * p + np.sinc(n / np.pi) * v
    return as_unit(q)


def inv_exp_map(p: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Tangent vector at ``p`` pointing to ``z`` with geodesic length.

    Raises:
        AntipodalError: if any pair is antipodal within ``ANTIPODAL_TOL``.
    """
    p = np.asarray(p, dtype=float)
    z = np.asarray(z, dtype=float)
    dot = np.clip(np.sum(p * z, axis=-1), -1.0, 1.0)
    if np.any(dot <= -1.0 + ANTIPODAL_TOL):
        raise AntipodalError("inverse exponential map undefined for antipodal points")
    theta = np.arccos(dot)
    sin_theta = np.sin(theta)
    # theta/sin(theta) -> 1 as theta -> 0; guard the division.
    small = theta < 1e-12
    factor = np.where(small, 1.0, theta / np.where(small, 1.0, sin_theta))
    return (z - dot[..., None] * p) * factor[..., None]


def geodesic_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Arc length between unit vectors ``p`` and ``q``."""
    dot = np.clip(np.sum(np.asarray(p) * np.asarray(q), axis=-1), -1.0, 1.0)
    return np.arccos(dot)


def polar_to_cart(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Cartesian point (sin t cos p, sin t sin p, cos t) for angles in radians."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def cart_to_polar(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Polar coordinates of unit point(s) ``p``.

    theta = arccos(p3); phi is the atan2 longitude mapped into (0, 2*pi],
    so phi = 0 is reported as 2*pi.

    Raises:
        PoleError: if any point lies exactly at a pole (|p3| >= 1).
    """
    p = np.asarray(p, dtype=float)
    p3 = p[..., 2]
    if np.any(np.abs(p3) >= 1.0):
        raise PoleError("polar coordinates undefined at the poles")
    theta = np.arccos(p3)
    phi = np.arctan2(p[..., 1], p[..., 0])
    phi = np.where(phi <= 0.0, phi + 2.0 * np.pi, phi)
    return theta, phi


def cart_to_polar_clamped(
    p: np.ndarray, pole_nudge: float = 1e-9
) -> tuple[np.ndarray, np.ndarray, int]:
    """Pole-tolerant variant of :func:`cart_to_polar`.

    Points lying exactly at a pole are moved ``pole_nudge`` radians off it
    instead of raising.  Returns (theta, phi, number of nudged points).
    """
    p = np.asarray(p, dtype=float)
    p3 = np.clip(p[..., 2], -1.0, 1.0)
    theta = np.arccos(p3)
    at_pole = (theta <= 0.0) | (theta >= np.pi)
    n_hit = int(np.count_nonzero(at_pole))
    if n_hit:
        theta = np.clip(theta, pole_nudge, np.pi - pole_nudge)
    phi = np.arctan2(p[..., 1], p[..., 0])
    phi = np.where(phi <= 0.0, phi + 2.0 * np.pi, phi)
    return theta, phi, n_hit


def tangent_frame(theta: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal tangent basis (e_theta, e_phi) at polar point(s).

    e_theta points toward increasing colatitude, e_phi toward increasing
    longitude; (e_theta, e_phi, outward normal) is right-handed.

    Raises:
        PoleError: at theta in {0, pi} where the frame degenerates.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    if np.any(st <= 1e-15):
        raise PoleError("tangent frame undefined at the poles")
    ct = np.cos(theta)
    cp = np.cos(phi)
    sp = np.sin(phi)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-sp, cp, np.zeros_like(st)], axis=-1)
    return e_theta, e_phi


def rotate_tangent_90(base: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Rotate a tangent vector by +pi/2 about the outward normal (base x vec)."""
    return np.cross(np.asarray(base, dtype=float), np.asarray(vec, dtype=float))
