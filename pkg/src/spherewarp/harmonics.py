"""Smooth tangent vector field basis built from spherical harmonics.

For a maximum degree ``l`` the basis consists of the surface gradients of
the real and imaginary parts of the complex spherical harmonics Y_lm
(degrees 1..l, the constant degree-0 harmonic has a trivial gradient),
followed by the same fields rotated by +pi/2 in each tangent plane.  That
gives L = 2*(l+1)**2 - 2 fields.

Each field is scaled once so that its discrete L2 norm over the standard
quadrature grid (resolution 200, pole offset 1e-2) equals 1; a rotated
field reuses the scale of its gradient partner, so the identity
``rotated = base x gradient`` holds exactly, entry for entry.

Canonical ordering (``ORDERING_VERSION = 1``): the gradient block comes
first, then the rotated block; within a block degrees ascend, orders
ascend within a degree, and the real part precedes the imaginary part of
the same order.  Serialized coefficient vectors rely on this ordering.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .geometry import as_unit, tangent_frame

ORDERING_VERSION = 1

#: Grid convention used to fix the per-field normalization constants.
NORM_GRID_M = 200
NORM_GRID_POLE_OFFSET = 1e-2

#: Colatitude clamp applied before evaluating fields; equals the first
#: node offset of the normalization grid, per the pole-exclusion policy.
THETA_MIN = np.pi * NORM_GRID_POLE_OFFSET / (NORM_GRID_M - 1 - 2 * NORM_GRID_POLE_OFFSET)

MAX_DEGREE = 24


def basis_size(max_degree: int) -> int:
    """Number of fields for a given maximum harmonic degree."""
    return 2 * (max_degree + 1) ** 2 - 2


@dataclass(frozen=True)
class BasisSpec:
    """Identifies a basis family by its maximum harmonic degree."""

    max_degree: int

    def __post_init__(self):
        if not 1 <= int(self.max_degree) <= MAX_DEGREE:
            raise ValueError(
                f"max_degree must be in [1, {MAX_DEGREE}], got {self.max_degree}"
            )

    @property
    def count(self) -> int:
        return basis_size(self.max_degree)


@dataclass(frozen=True)
class BasisFieldId:
    """Position and meaning of one field in the canonical ordering."""

    index: int  # 1-based position
    kind: str  # "gradient" or "rotated"
    degree: int
    order: int
    part: str  # "real" or "imaginary"


def enumerate_basis(max_degree: int) -> tuple[BasisSpec, list[BasisFieldId]]:
    """Canonically ordered ids for all fields up to ``max_degree``."""
    spec = BasisSpec(max_degree)
    ids: list[BasisFieldId] = []
    for kind in ("gradient", "rotated"):
        for degree in range(1, max_degree + 1):
            for order in range(degree + 1):
                ids.append(
                    BasisFieldId(len(ids) + 1, kind, degree, order, "real")
                )
                if order > 0:
                    ids.append(
                        BasisFieldId(len(ids) + 1, kind, degree, order, "imaginary")
                    )
    assert len(ids) == spec.count
    return spec, ids


# ----------------------------------------------------------------------
# Associated Legendre evaluation (fully normalized, Condon-Shortley free).
# ----------------------------------------------------------------------

def _pair_count(l: int) -> int:
    return (l + 1) * (l + 2) // 2


def _pair_index(degree: int, order: int) -> int:
    # pairs stored degree-major: (0,0), (1,0), (1,1), (2,0), ...
    return degree * (degree + 1) // 2 + order


def _legendre_tables(l: int, theta: np.ndarray):
    """Normalized associated Legendre values and the two derived tables.

    Returns arrays of shape (n_pairs, n_points):
      P[k]  = N_lm P_lm(cos theta)
      D[k]  = d/dtheta of P[k]
      T[k]  = m * P[k] / sin(theta)
    computed with the stable degree/order recurrences.  ``theta`` must be
    clamped away from the poles by the caller; T is then free of
    cancellation because P_mm carries an explicit sin(theta)**m factor.
    """
    theta = np.asarray(theta, dtype=float)
    x = np.cos(theta)
    s = np.sin(theta)
    n_pairs = _pair_count(l)
    P = np.zeros((n_pairs, theta.size), dtype=float)
    D = np.zeros_like(P)
    T = np.zeros_like(P)

    P[0] = 1.0
    for m in range(1, l + 1):
        P[_pair_index(m, m)] = (
            np.sqrt((2 * m + 1) / (2 * m)) * s * P[_pair_index(m - 1, m - 1)]
        )
    for m in range(0, l):
        P[_pair_index(m + 1, m)] = np.sqrt(2 * m + 3) * x * P[_pair_index(m, m)]
    for m in range(0, l + 1):
        for deg in range(m + 2, l + 1):
            a = np.sqrt((4 * deg * deg - 1) / (deg * deg - m * m))
            b = np.sqrt(((deg - 1) ** 2 - m * m) / (4 * (deg - 1) ** 2 - 1))
            P[_pair_index(deg, m)] = a * (
                x * P[_pair_index(deg - 1, m)] - b * P[_pair_index(deg - 2, m)]
            )

    inv_s = 1.0 / s
    for m in range(0, l + 1):
        for deg in range(max(m, 1), l + 1):
            k = _pair_index(deg, m)
            if deg == m:
                below = 0.0
                e = 0.0
            else:
                below = P[_pair_index(deg - 1, m)]
                e = np.sqrt((deg * deg - m * m) * (2 * deg + 1) / (2 * deg - 1))
            D[k] = (deg * x * P[k] - e * below) * inv_s
            if m > 0:
                T[k] = m * P[k] * inv_s
    return P, D, T


def _clamped_polar(points: np.ndarray):
    """Polar angles of unit points with colatitude clamped off the poles."""
    p = np.asarray(points, dtype=float)
    theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
    theta = np.clip(theta, THETA_MIN, np.pi - THETA_MIN)
    phi = np.arctan2(p[..., 1], p[..., 0])
    phi = np.where(phi <= 0.0, phi + 2.0 * np.pi, phi)
    return theta, phi


def _gradient_components(l: int, theta: np.ndarray, phi: np.ndarray):
    """(e_theta, e_phi) components of all unnormalized gradient fields.

    Returns (comp_theta, comp_phi) of shape (n_fields, n_points) in
    canonical gradient-block order.
    """
    P, D, T = _legendre_tables(l, theta)
    n_grad = (l + 1) ** 2 - 1
    comp_t = np.empty((n_grad, theta.size), dtype=float)
    comp_p = np.empty_like(comp_t)
    cos_m = [np.cos(m * phi) for m in range(l + 1)]
    sin_m = [np.sin(m * phi) for m in range(l + 1)]
    k = 0
    for degree in range(1, l + 1):
        for order in range(degree + 1):
            pk = _pair_index(degree, order)
            comp_t[k] = D[pk] * cos_m[order]
            comp_p[k] = -T[pk] * sin_m[order]
            k += 1
            if order > 0:
                comp_t[k] = D[pk] * sin_m[order]
                comp_p[k] = T[pk] * cos_m[order]
                k += 1
    return comp_t, comp_p


# Normalization scales per max_degree, lazily computed and cached.
_SCALE_CACHE: dict[int, np.ndarray] = {}
_SCALE_LOCK = threading.Lock()


def _norm_grid_nodes():
    m = NORM_GRID_M
    off = NORM_GRID_POLE_OFFSET
    theta = np.pi * (np.arange(1, m) - 1 + off) / (m - 1 - 2 * off)
    phi = 2.0 * np.pi * (np.arange(1, m) - 1) / (m - 1)
    weights = np.sin(theta) * 2.0 * np.pi**2 / m**2
    return theta, phi, weights


def _gradient_scales(l: int) -> np.ndarray:
    """1 / discrete-L2-norm for each gradient field on the standard grid."""
    theta, phi, w = _norm_grid_nodes()
    tt = np.repeat(theta, phi.size)
    pp = np.tile(phi, theta.size)
    ww = np.repeat(w, phi.size)
    n_grad = (l + 1) ** 2 - 1
    sq = np.zeros(n_grad, dtype=float)
    # Chunk over points to bound memory at high degree.
    chunk = 8192
    for start in range(0, tt.size, chunk):
        sl = slice(start, start + chunk)
        ct, cp = _gradient_components(l, tt[sl], pp[sl])
        sq += (ct**2 + cp**2) @ ww[sl]
    return 1.0 / np.sqrt(sq)


def field_scales(max_degree: int) -> np.ndarray:
    """Per-field normalization factors in canonical order (length L)."""
    with _SCALE_LOCK:
        cached = _SCALE_CACHE.get(max_degree)
        if cached is None:
            g = _gradient_scales(max_degree)
            cached = np.concatenate([g, g])
            _SCALE_CACHE[max_degree] = cached
    return cached


def eval_basis_matrix(spec: BasisSpec, points: np.ndarray) -> np.ndarray:
    """Evaluate every field at every point.

    Args:
        spec: basis family.
        points: unit points, shape (n, 3) or (3,).

    Returns:
        Array of shape (L, n, 3); entry [j, i] is field j+1 at point i,
        tangent to the point it is evaluated at.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.size == 0:
        return np.zeros((spec.count, 0, 3), dtype=float)
    theta, phi = _clamped_polar(p)
    e_t, e_p = tangent_frame(theta, phi)
    comp_t, comp_p = _gradient_components(spec.max_degree, theta, phi)
    scales = field_scales(spec.max_degree)
    n_grad = comp_t.shape[0]
    grad = comp_t[:, :, None] * e_t[None] + comp_p[:, :, None] * e_p[None]
    grad *= scales[:n_grad, None, None]
    # Near-pole clamping evaluates the field a hair off p; re-project so
    # tangency holds at p itself.
    grad -= np.sum(grad * p[None], axis=-1, keepdims=True) * p[None]
    rot = np.cross(np.broadcast_to(p[None], grad.shape), grad)
    return np.concatenate([grad, rot], axis=0)


def eval_field(spec: BasisSpec, index: int, point: np.ndarray) -> np.ndarray:
    """Field ``index`` (1-based canonical position) at a single point."""
    if not 1 <= index <= spec.count:
        raise ValueError(f"field index {index} out of range [1, {spec.count}]")
    point = as_unit(np.asarray(point, dtype=float))
    return eval_basis_matrix(spec, point[None])[index - 1, 0]


def combine_fields(
    spec: BasisSpec, coeffs: np.ndarray, points: np.ndarray
) -> np.ndarray:
    """Tangent field sum_j coeffs[j] * B_j evaluated at ``points``."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (spec.count,):
        raise ValueError(f"expected {spec.count} coefficients, got {coeffs.shape}")
    fields = eval_basis_matrix(spec, points)
    return np.einsum("j,jnk->nk", coeffs, fields)
