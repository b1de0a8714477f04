"""Named metric and wind builders addressable from scenario files.

All builders produce batched evaluators (leading axes broadcast), which the
vectorised solvers rely on.  Custom winds are restricted to polynomial
component functions of bounded total degree, which covers every affine
(hence every Euclidean homothetic) wind without embedding an interpreter.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .errors import UndefinedInputError
from .geometry import MetricField, WindField

MAX_POLY_DEGREE = 4


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def euclidean_metric(dim: int) -> MetricField:
    """Flat identity metric on R^n."""
    dim = int(dim)
    if dim < 1:
        raise UndefinedInputError("euclidean metric needs dim >= 1")
    eye = np.eye(dim)

    def matrix(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(eye, x.shape[:-1] + (dim, dim))

    return MetricField(dim, matrix, name=f"euclidean({dim})", batched=True,
                       identity=True)


def polar_metric() -> MetricField:
    """Plane metric diag(1, r^2) in polar coordinates (r, theta), r > 0."""

    def matrix(x):
        x = np.asarray(x, dtype=float)
        r = x[..., 0]
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = r * r
        return out

    return MetricField(2, matrix, name="polar", batched=True)


def conformal_metric(lam: float = 1.0) -> MetricField:
    """Conformally flat plane metric exp(2 * lam * x1) * identity."""
    lam = float(lam)

    def matrix(x):
        x = np.asarray(x, dtype=float)
        factor = np.exp(2.0 * lam * x[..., 0])
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = factor
        out[..., 1, 1] = factor
        return out

    return MetricField(2, matrix, name=f"conformal({lam:g})", batched=True)


# ---------------------------------------------------------------------------
# winds
# ---------------------------------------------------------------------------

def constant_wind(vector: Sequence[float],
                  declared_sigma: Optional[float] = None) -> WindField:
    """Uniform drift W(x) = vector."""
    vec = np.asarray(vector, dtype=float)
    if vec.ndim != 1 or vec.size < 1:
        raise UndefinedInputError("constant wind needs a 1-d vector")

    def field(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(vec, x.shape)

    return WindField(vec.size, field, declared_sigma=declared_sigma,
                     name="constant", batched=True)


def rotation_wind(omega: float,
                  declared_sigma: Optional[float] = None) -> WindField:
    """Rigid rotation W(x) = omega * (-x2, x1) about the origin (n = 2)."""
    omega = float(omega)

    def field(x):
        x = np.asarray(x, dtype=float)
        return np.stack([-omega * x[..., 1], omega * x[..., 0]], axis=-1)

    return WindField(2, field, declared_sigma=declared_sigma,
                     name=f"rotation({omega:g})", batched=True)


def dilation_wind(scale: float, dim: int = 2,
                  declared_sigma: Optional[float] = None) -> WindField:
    """Radial dilation W(x) = scale * x."""
    scale = float(scale)

    def field(x):
        return scale * np.asarray(x, dtype=float)

    return WindField(int(dim), field, declared_sigma=declared_sigma,
                     name=f"dilation({scale:g})", batched=True)


def combo_wind(scale: float, omega: float, vector: Sequence[float],
               declared_sigma: Optional[float] = None) -> WindField:
    """Affine wind scale * x + omega * (-x2, x1) + vector (n = 2)."""
    scale = float(scale)
    omega = float(omega)
    vec = np.asarray(vector, dtype=float)
    if vec.shape != (2,):
        raise UndefinedInputError("combo wind needs a 2-d translation vector")

    def field(x):
        x = np.asarray(x, dtype=float)
        rot = np.stack([-omega * x[..., 1], omega * x[..., 0]], axis=-1)
        return scale * x + rot + vec

    return WindField(2, field, declared_sigma=declared_sigma,
                     name=f"combo({scale:g},{omega:g})", batched=True)


def _poly_degree(n_coeffs: int) -> int:
    # triangular count (d+1)(d+2)/2 for total degree d in two variables
    for d in range(MAX_POLY_DEGREE + 1):
        if (d + 1) * (d + 2) // 2 == n_coeffs:
            return d
    raise UndefinedInputError(
        f"polynomial coefficient list of length {n_coeffs} does not match a "
        f"total degree <= {MAX_POLY_DEGREE} "
        "(expected 1, 3, 6, 10 or 15 coefficients)")


def _poly_eval(coeffs: np.ndarray, degree: int, x1: np.ndarray,
               x2: np.ndarray) -> np.ndarray:
    # coefficient order: by total degree, then by x2 power:
    # 1; x1, x2; x1^2, x1 x2, x2^2; ...
    out = np.zeros_like(x1)
    i = 0
    for d in range(degree + 1):
        for b in range(d + 1):
            out = out + coeffs[i] * x1 ** (d - b) * x2 ** b
            i += 1
    return out


def polynomial_wind(coeffs1: Sequence[float], coeffs2: Sequence[float],
                    declared_sigma: Optional[float] = None) -> WindField:
    """Plane wind with polynomial components of bounded total degree.

    Coefficients are ordered by total degree and then by the power of x2:
    ``(1; x1, x2; x1^2, x1*x2, x2^2; ...)``.
    """
    c1 = np.asarray(coeffs1, dtype=float)
    c2 = np.asarray(coeffs2, dtype=float)
    d1 = _poly_degree(c1.size)
    d2 = _poly_degree(c2.size)

    def field(x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([_poly_eval(c1, d1, x1, x2),
                         _poly_eval(c2, d2, x1, x2)], axis=-1)

    return WindField(2, field, declared_sigma=declared_sigma,
                     name="polynomial", batched=True)


# ---------------------------------------------------------------------------
# registries (used by the scenario loader; keys are the public names)
# ---------------------------------------------------------------------------

METRIC_BUILDERS = {
    "euclidean": euclidean_metric,
    "polar": polar_metric,
    "conformal": conformal_metric,
}

WIND_BUILDERS = {
    "constant": constant_wind,
    "rotation": rotation_wind,
    "dilation": dilation_wind,
    "combo": combo_wind,
    "polynomial": polynomial_wind,
}
