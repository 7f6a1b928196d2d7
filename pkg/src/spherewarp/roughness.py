"""Grid discretization of a sphere map and its two roughness measures.

A map gamma is discretized on an M x M polar grid

    Theta[i, j] = pi (j - 1 + off) / (M - 1 - 2 off)
    Phi[i, j]   = 2 pi (i - 1) / (M - 1)        (1-based i, j)

by recording the polar coordinates of gamma at every node.  Forward
differences of the image angles, wrapped modulo pi and combined with the
metric factors diag(1, sin theta_img) . J_raw . diag(1, 1/sin theta_src),
give a per-cell 2x2 Jacobian J.  From A = J^T J two measures follow:

    Q = sum |A - I|_F^2 sin(Theta) 2 pi^2 / M^2          (distance from isometry)
    R = sum (log l1)^2 + (log l2)^2 sin(Theta) 2 pi^2 / M^2

with l1, l2 the eigenvalues of A.  R diverges as the map degenerates and
is the penalty used by the estimator; Q is reported for diagnostics.

Both measures are zero (up to discretization error) exactly when the map
is a rotation or reflection, and both are invariant under composing with
any orthogonal matrix on the output side.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .diffeo import Composite, Rotation, apply_map
from .geometry import cart_to_polar_clamped, polar_to_cart

DEFAULT_POLE_OFFSET = 1e-2
FIT_RESOLUTION = 100
REPORT_RESOLUTION = 200

#: Eigenvalues at or below this are treated as a singular Jacobian cell.
EIG_FLOOR = 1e-12


def source_angles(resolution: int, pole_offset: float = DEFAULT_POLE_OFFSET):
    """1-D node angles (theta over columns, phi over rows) of the source grid."""
    if resolution < 16:
        raise ValueError("grid resolution must be at least 16")
    if not 0.0 < pole_offset < 0.5:
        raise ValueError("pole offset must lie in (0, 0.5)")
    m = resolution
    j = np.arange(1, m + 1)
    theta = np.pi * (j - 1 + pole_offset) / (m - 1 - 2 * pole_offset)
    phi = 2.0 * np.pi * (j - 1) / (m - 1)
    return theta, phi


@dataclass(frozen=True)
class PolarGrid:
    """Discretized map: source angles and their images under gamma.

    All four matrices are (M, M); entry [i, j] pairs the source node
    (Theta[i, j], Phi[i, j]) with its image (ThetaTilde[i, j],
    PhiTilde[i, j]).  Theta varies along axis 1 and Phi along axis 0.
    Source colatitudes at the quadrature nodes (j <= M-1) are strictly
    inside (0, pi); the final column, used only as a difference neighbor,
    overshoots pi by O(pole_offset / M) per the grid formula.
    """

    resolution: int
    pole_offset: float
    theta: np.ndarray
    phi: np.ndarray
    theta_tilde: np.ndarray
    phi_tilde: np.ndarray
    pole_hits: int = 0


def source_grid_points(resolution: int, pole_offset: float = DEFAULT_POLE_OFFSET):
    """Cartesian source nodes, shape (M*M, 3), row-major in (i, j)."""
    theta, phi = source_angles(resolution, pole_offset)
    tt = np.broadcast_to(theta[None, :], (resolution, resolution))
    pp = np.broadcast_to(phi[:, None], (resolution, resolution))
    return polar_to_cart(tt.ravel(), pp.ravel())


def grid_from_images(
    images: np.ndarray, resolution: int, pole_offset: float = DEFAULT_POLE_OFFSET
) -> PolarGrid:
    """Build a PolarGrid from precomputed image points (M*M, 3)."""
    m = resolution
    theta_1d, phi_1d = source_angles(m, pole_offset)
    theta = np.broadcast_to(theta_1d[None, :], (m, m))
    phi = np.broadcast_to(phi_1d[:, None], (m, m))
    t_img, p_img, hits = cart_to_polar_clamped(images)
    if hits:
        warnings.warn(
            f"{hits} grid node(s) mapped exactly to a pole; "
            "colatitude nudged by 1e-9",
            stacklevel=3,
        )
    return PolarGrid(
        resolution=m,
        pole_offset=pole_offset,
        theta=theta,
        phi=phi,
        theta_tilde=t_img.reshape(m, m),
        phi_tilde=p_img.reshape(m, m),
        pole_hits=hits,
    )


def deform_grid(
    gamma, resolution: int, pole_offset: float = DEFAULT_POLE_OFFSET
) -> PolarGrid:
    """Discretize ``gamma`` on the standard grid at the given resolution."""
    points = source_grid_points(resolution, pole_offset)
    return grid_from_images(apply_map(gamma, points), resolution, pole_offset)


def angle_diff(a, b):
    """Wrapped difference m(a, b) = a - b + k pi reduced into (-pi/2, pi/2].

    k is the integer minimizing |a - b + k pi|; ties at the half-pi
    boundary resolve to the non-negative representative.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return d - np.pi * np.ceil(d / np.pi - 0.5)


@dataclass(frozen=True)
class JacobianField:
    """Per-cell 2x2 Jacobians and the eigenvalues of J^T J.

    Arrays cover the (M-1) x (M-1) forward-difference cells.  A = J^T J
    is symmetric positive semidefinite, so both eigenvalue arrays are
    real and non-negative (clamped at zero against rounding).
    """

    jac: np.ndarray  # (M-1, M-1, 2, 2)
    eigen_hi: np.ndarray  # (M-1, M-1)
    eigen_lo: np.ndarray  # (M-1, M-1)


def numerical_jacobian(grid: PolarGrid) -> JacobianField:
    """Forward-difference Jacobian of the grid map with metric scaling."""
    t, p = grid.theta, grid.phi
    tt, pp = grid.theta_tilde, grid.phi_tilde
    c = slice(None, -1)  # cells i, j = 1..M-1
    jn = slice(1, None)  # the j+1 / i+1 neighbors

    d_theta = angle_diff(t[c, c], t[c, jn])
    d_phi = angle_diff(p[c, c], p[jn, c])

    j11 = angle_diff(tt[c, c], tt[c, jn]) / d_theta
    j12 = angle_diff(tt[c, c], tt[jn, c]) / d_phi
    j21 = angle_diff(pp[c, c], pp[c, jn]) / d_theta
    j22 = angle_diff(pp[c, c], pp[jn, c]) / d_phi

    # Change of basis: diag(1, sin theta_img) . J_raw . diag(1, 1/sin theta_src)
    s_src = np.sin(t[c, c])
    s_img = np.sin(tt[c, c])
    j12 = j12 / s_src
    j21 = j21 * s_img
    j22 = j22 * s_img / s_src

    jac = np.stack(
        [np.stack([j11, j12], axis=-1), np.stack([j21, j22], axis=-1)], axis=-2
    )

    a11 = j11 * j11 + j21 * j21
    a22 = j12 * j12 + j22 * j22
    a12 = j11 * j12 + j21 * j22
    half_tr = 0.5 * (a11 + a22)
    # A is symmetric PSD: the discriminant is non-negative up to rounding.
    disc = np.sqrt(np.maximum((0.5 * (a11 - a22)) ** 2 + a12 * a12, 0.0))
    eigen_hi = half_tr + disc
    eigen_lo = np.maximum(half_tr - disc, 0.0)
    return JacobianField(jac=jac, eigen_hi=eigen_hi, eigen_lo=eigen_lo)


def _cell_weights(grid: PolarGrid) -> np.ndarray:
    m = grid.resolution
    return np.sin(grid.theta[:-1, :-1]) * 2.0 * np.pi**2 / m**2


def roughness_Q(field: JacobianField, grid: PolarGrid) -> float:
    """Quadrature of |J^T J - I|_F^2 over the grid."""
    j = field.jac
    a11 = j[..., 0, 0] ** 2 + j[..., 1, 0] ** 2
    a22 = j[..., 0, 1] ** 2 + j[..., 1, 1] ** 2
    a12 = j[..., 0, 0] * j[..., 0, 1] + j[..., 1, 0] * j[..., 1, 1]
    frob2 = (a11 - 1.0) ** 2 + (a22 - 1.0) ** 2 + 2.0 * a12**2
    return float(np.sum(frob2 * _cell_weights(grid)))


def roughness_R(field: JacobianField, grid: PolarGrid) -> tuple[float, int]:
    """Quadrature of |logm(J^T J)|_F^2; (+inf, n_singular) on degenerate cells."""
    singular = int(np.count_nonzero(field.eigen_lo <= EIG_FLOOR))
    if singular:
        return float("inf"), singular
    cells = np.log(field.eigen_hi) ** 2 + np.log(field.eigen_lo) ** 2
    return float(np.sum(cells * _cell_weights(grid))), 0


@dataclass(frozen=True)
class RoughnessReport:
    """Q and R for one map on one grid."""

    q_value: float
    r_value: float
    singular_cell_count: int
    resolution: int
    pole_offset: float


def roughness_report(
    gamma,
    resolution: int = REPORT_RESOLUTION,
    pole_offset: float = DEFAULT_POLE_OFFSET,
) -> RoughnessReport:
    """Deform, differentiate, and score ``gamma`` in one call."""
    grid = deform_grid(gamma, resolution, pole_offset)
    fld = numerical_jacobian(grid)
    q = roughness_Q(fld, grid)
    r, singular = roughness_R(fld, grid)
    return RoughnessReport(
        q_value=q,
        r_value=r,
        singular_cell_count=singular,
        resolution=resolution,
        pole_offset=pole_offset,
    )


def roughness_invariance_check(
    gamma,
    orthogonal: np.ndarray,
    resolution: int = REPORT_RESOLUTION,
    pole_offset: float = DEFAULT_POLE_OFFSET,
) -> tuple[float, float]:
    """R of gamma and of (O o gamma) for an orthogonal 3x3 matrix O.

    Reflections are allowed, so O is applied as a raw linear map rather
    than through the Rotation wrapper.
    """
    o = np.asarray(orthogonal, dtype=float)
    if np.max(np.abs(o.T @ o - np.eye(3))) > 1e-10:
        raise ValueError("matrix is not orthogonal")
    base = roughness_report(gamma, resolution, pole_offset).r_value
    rotated = roughness_report(
        lambda pts: apply_map(gamma, pts) @ o.T, resolution, pole_offset
    ).r_value
    return base, rotated
