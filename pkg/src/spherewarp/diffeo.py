"""Spherical diffeomorphism representations.

Two families live here: the parametric generators used to build test and
simulation truths (rotations, projective linear maps, conformal maps,
twists, small harmonic increments, and their compositions), and the
fitted incremental model produced by the estimator (an initial rotation
followed by recorded gradient steps).

Composition convention: ``Composite(parts=[g1, g2, g3])`` is the map
g1 o g2 o g3, i.e. the rightmost part is applied first.

All objects are immutable after construction and application is pure, so
everything here is thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .geometry import as_unit, exp_map
from .harmonics import BasisSpec, combine_fields

_ORTHO_TOL = 1e-10
_DET_ONE_TOL = 1e-8
_INCREMENT_NORM_BOUND = 0.5


def _check_rotation(matrix: np.ndarray, tol: float = _ORTHO_TOL) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"rotation matrix must be 3x3, got {m.shape}")
    if np.max(np.abs(m.T @ m - np.eye(3))) > tol:
        raise ValueError("matrix is not orthogonal")
    if abs(np.linalg.det(m) - 1.0) > tol:
        raise ValueError("matrix determinant is not +1")
    return m


@dataclass(frozen=True)
class Rotation:
    """Rigid rotation z -> R z."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _check_rotation(self.matrix))


@dataclass(frozen=True)
class ProjectiveLinear:
    """Projective linear map z -> P z / |P z| with det(P) = 1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"projective matrix must be 3x3, got {m.shape}")
        if abs(np.linalg.det(m) - 1.0) > _DET_ONE_TOL:
            raise ValueError("projective matrix determinant must be 1")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class Conformal:
    """Conformal (Moebius) map induced by an invertible 2x2 complex matrix.

    The sphere point (x, y, t) is identified with (z, t), z = x + iy,
    |z|**2 + t**2 = 1.  For M = [[a, b], [c, d]] the map sends (z, t) to

        ( 2 conj(c z + d (1-t)) (a z + b (1-t)) / D,
          (|a z + b (1-t)|**2 - |c z + d (1-t)|**2) / D ),

    D the sum of the two squared magnitudes, with the dedicated branch
    (2 conj(c) a / (|a|**2+|c|**2), (|a|**2-|c|**2)/(|a|**2+|c|**2)) at
    the north pole where the generic formula is 0/0.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"conformal matrix must be 2x2, got {m.shape}")
        if abs(np.linalg.det(m)) < 1e-12:
            raise ValueError("conformal matrix must be invertible")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class Twist:
    """Latitude-preserving twist (z, t) -> (exp(i r t) z, t)."""

    rate: float


@dataclass(frozen=True)
class HarmonicIncrement:
    """Small map z -> exp_z(sum_j c_j B_j(z)) close to the identity."""

    spec: BasisSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.spec.count,):
            raise ValueError(
                f"expected {self.spec.count} coefficients, got shape {c.shape}"
            )
        if np.linalg.norm(c) >= _INCREMENT_NORM_BOUND:
            raise ValueError(
                f"coefficient norm must stay below {_INCREMENT_NORM_BOUND} "
                "to remain a small increment"
            )
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class Composite:
    """Composition g1 o g2 o ... o gJ; the rightmost part acts first."""

    parts: tuple

    def __post_init__(self):
        if len(self.parts) == 0:
            raise ValueError("composite needs at least one part")
        object.__setattr__(self, "parts", tuple(self.parts))


ParametricDiffeo = Union[
    Rotation, ProjectiveLinear, Conformal, Twist, HarmonicIncrement, Composite
]


def compose(maps: Sequence) -> Composite:
    """Bundle maps into a single composite (rightmost applied first)."""
    return Composite(tuple(maps))


@dataclass(frozen=True)
class Step:
    """One accepted gradient update: step size and field coefficients."""

    delta: float
    coeffs: np.ndarray

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("step size must be positive")
        c = np.asarray(self.coeffs, dtype=float)
        if self.delta * np.linalg.norm(c) >= np.pi / 2:
            raise ValueError("step displacement must stay below pi/2")
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class DiffeoModel:
    """Fitted map: initial rotation plus ordered incremental updates.

    Applying the model computes z0 = R x and then, for each step k,
    z_{k+1} = exp_{z_k}(delta_k * sum_j coeffs[k][j] B_j(z_k)).
    """

    init_rotation: np.ndarray
    spec: BasisSpec
    steps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "init_rotation", _check_rotation(self.init_rotation))
        steps = tuple(self.steps)
        for s in steps:
            if s.coeffs.shape != (self.spec.count,):
                raise ValueError("step coefficient length does not match basis size")
        object.__setattr__(self, "steps", steps)


def _apply_conformal(m: np.ndarray, pts: np.ndarray) -> np.ndarray:
    z = pts[..., 0] + 1j * pts[..., 1]
    t = pts[..., 2]
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    u = a * z + b * (1.0 - t)
    v = c * z + d * (1.0 - t)
    denom = np.abs(u) ** 2 + np.abs(v) ** 2
    # 0/0 occurs exactly at the north pole; substitute its limit values.
    pole = denom == 0.0
    if np.any(pole):
        u = np.where(pole, a, u)
        v = np.where(pole, c, v)
        denom = np.where(pole, np.abs(a) ** 2 + np.abs(c) ** 2, denom)
    w = 2.0 * np.conj(v) * u / denom
    t_new = (np.abs(u) ** 2 - np.abs(v) ** 2) / denom
    out = np.stack([w.real, w.imag, t_new], axis=-1)
    return as_unit(out)


def _apply_twist(rate: float, pts: np.ndarray) -> np.ndarray:
    z = pts[..., 0] + 1j * pts[..., 1]
    t = pts[..., 2]
    w = np.exp(1j * rate * t) * z
    return np.stack([w.real, w.imag, t], axis=-1)


def apply_map(gamma, points: np.ndarray) -> np.ndarray:
    """Apply a diffeomorphism to one point (3,) or a batch (..., 3).

    Accepts any parametric variant, a ``DiffeoModel``, or a raw callable
    on point arrays.  Output is unit-norm with the input's shape.
    """
    pts = np.asarray(points, dtype=float)
    if isinstance(gamma, Rotation):
        return pts @ gamma.matrix.T
    if isinstance(gamma, ProjectiveLinear):
        return as_unit(pts @ gamma.matrix.T)
    if isinstance(gamma, Conformal):
        return _apply_conformal(gamma.matrix, pts)
    if isinstance(gamma, Twist):
        return _apply_twist(gamma.rate, pts)
    if isinstance(gamma, HarmonicIncrement):
        flat = np.atleast_2d(pts)
        out = exp_map(flat, combine_fields(gamma.spec, gamma.coeffs, flat))
        return out.reshape(pts.shape)
    if isinstance(gamma, Composite):
        for part in reversed(gamma.parts):
            pts = apply_map(part, pts)
        return pts
    if isinstance(gamma, DiffeoModel):
        flat = np.atleast_2d(pts) @ gamma.init_rotation.T
        for step in gamma.steps:
            v = step.delta * combine_fields(gamma.spec, step.coeffs, flat)
            flat = exp_map(flat, v)
        return flat.reshape(pts.shape)
    if isinstance(gamma, Callable):
        return gamma(pts)
    raise TypeError(f"cannot apply object of type {type(gamma).__name__}")


@dataclass(frozen=True)
class RandomCompositeConfig:
    """Shape of a randomly generated composite truth map."""

    n_conformal: int = 1
    n_twist: int = 1
    n_increments: int = 5
    increment_degree: int = 2
    coeff_scale: float = 0.06
    conformal_scale: float = 0.25
    twist_min: float = 0.08
    twist_max: float = 0.25
    check_invertibility: bool = True


def random_composite(seed: int, config: RandomCompositeConfig | None = None) -> Composite:
    """Deterministic random composite: conformal(s), twist(s), increments.

    The parts are listed in that order, so the harmonic increments act
    first and the conformal part acts last.  The generated map is smoke
    tested for invertibility (finite matrix-log roughness on the default
    grid) unless the config disables the check.
    """
    cfg = config or RandomCompositeConfig()
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(cfg.n_conformal):
        while True:
            m = np.eye(2) + cfg.conformal_scale * (
                rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            )
            if abs(np.linalg.det(m)) > 0.1:
                break
        parts.append(Conformal(m))
    for _ in range(cfg.n_twist):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        parts.append(Twist(sign * rng.uniform(cfg.twist_min, cfg.twist_max)))
    spec = BasisSpec(cfg.increment_degree)
    for _ in range(cfg.n_increments):
        c = cfg.coeff_scale * rng.standard_normal(spec.count)
        norm = np.linalg.norm(c)
        if norm >= _INCREMENT_NORM_BOUND:
            c *= 0.9 * _INCREMENT_NORM_BOUND / norm
        parts.append(HarmonicIncrement(spec, c))
    composite = Composite(tuple(parts))
    if cfg.check_invertibility:
        from .roughness import roughness_report

        report = roughness_report(composite, resolution=100)
        if not np.isfinite(report.r_value):
            raise ValueError(
                f"seed {seed} produced a non-invertible composite "
                "(singular Jacobian cells on the default grid)"
            )
    return composite


def _nearest_rotation(matrix: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(np.asarray(matrix, dtype=float))
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] *= -1.0
        r = u @ vt
    return r


def _unit_determinant(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    return m / np.cbrt(np.linalg.det(m))


def benchmark_composite() -> Composite:
    """Fixed rough starting map used by the no-data decay experiment.

    A rotation, a projective linear map, a conformal map, and a gentle
    twist, composed with the twist acting first.  The matrices are quoted
    to four decimals, so the rotation is polished to the nearest exact
    rotation and the projective matrix is rescaled to determinant one;
    neither adjustment changes the map by more than ~1e-4.
    """
    a1 = np.array(
        [
            [0.9564, 0.2134, 0.1994],
            [-0.2096, 0.9770, -0.0403],
            [-0.2034, -0.0032, 0.9791],
        ]
    )
    a2 = np.array(
        [
            [1.1874, 0.4557, 0.1407],
            [0.2148, 1.0150, 0.2162],
            [1.3649, -0.2516, 0.9063],
        ]
    )
    mc = np.array(
        [
            [0.8423 + 0.1561j, -0.0207 + 0.0537j],
            [-0.1746 + 0.0382j, 1.1054 - 0.0512j],
        ]
    )
    return Composite(
        (
            Rotation(_nearest_rotation(a1)),
            ProjectiveLinear(_unit_determinant(a2)),
            Conformal(mc),
            Twist(0.1088),
        )
    )
