"""Randers layer: navigation norm, fundamental tensor, data conversions.

A navigation problem is specified by Zermelo data (a background metric h and
a wind W with |W|_h < 1).  The minimum-time function

    F(x, v) = (-h(v, W) + sqrt(h(v, W)^2 + |v|^2 (1 - |W|^2))) / (1 - |W|^2)

is a Finsler norm of Randers type, F = sqrt(alpha(v, v)) + beta(v), and the
two descriptions convert into each other in closed form.  Index conventions
are explicit throughout: ``w = h @ W`` denotes the lowered wind covector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    InvalidRandersError,
    InvalidTrajectoryError,
    UndefinedInputError,
    WindTooStrongError,
)
from .geometry import (
    MetricField,
    Trajectory,
    WindField,
    as_point,
    eval_metric_many,
    eval_wind_many,
)

Array = np.ndarray


@dataclass
class CovectorField:
    """Smooth field of covectors beta_i(x)."""

    dim: int
    covector: Callable[[Array], Array]
    name: str = "one-form"
    batched: bool = False

    def __call__(self, x) -> Array:
        return np.asarray(self.covector(np.asarray(x, dtype=float)), dtype=float)


@dataclass
class ZermeloData:
    """Background metric plus wind, the navigation description."""

    h: MetricField
    W: WindField

    def __post_init__(self):
        if self.h.dim != self.W.dim:
            raise UndefinedInputError(
                f"metric dimension {self.h.dim} != wind dimension {self.W.dim}")

    @property
    def dim(self) -> int:
        return self.h.dim


@dataclass
class RandersData:
    """Riemannian metric alpha plus one-form beta with |beta|_alpha < 1."""

    alpha: MetricField
    beta: CovectorField

    def __post_init__(self):
        if self.alpha.dim != self.beta.dim:
            raise UndefinedInputError(
                f"alpha dimension {self.alpha.dim} != beta dimension {self.beta.dim}")

    @property
    def dim(self) -> int:
        return self.alpha.dim


# ---------------------------------------------------------------------------
# pointwise helpers (broadcast over leading axes)
# ---------------------------------------------------------------------------

def _zermelo_pointwise(z: ZermeloData, x: Array):
    """Returns (h, W, w_lowered, lam) at x, batched; checks |W| < 1."""
    hs = eval_metric_many(z.h, x)
    ws = eval_wind_many(z.W, x)
    wl = np.einsum('...ij,...j->...i', hs, ws)
    w2 = np.einsum('...i,...i->...', ws, wl)
    lam = 1.0 - w2
    if np.any(lam <= 0.0):
        raise WindTooStrongError(
            f"|W| >= 1 somewhere in the evaluated set (max |W|^2 = {float(np.max(w2)):.6f})")
    return hs, ws, wl, lam


def wind_speed(z: ZermeloData, x) -> float:
    """Metric norm of the wind at a point."""
    x = as_point(x, z.dim)
    hs = z.h(x)
    ws = z.W(x)
    return math.sqrt(max(float(ws @ hs @ ws), 0.0))


def finsler_function(z: ZermeloData, x, v) -> float | Array:
    """Minimum travel time F(x, v) to the tip of v at unit own-speed.

    Broadcasts over leading axes when x and v are stacked.  Requires v != 0
    and |W(x)|_h < 1.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    hs, ws, _, lam = _zermelo_pointwise(z, x)
    v2 = np.einsum('...i,...ij,...j->...', v, hs, v)
    if np.any(v2 <= 0.0):
        raise UndefinedInputError("finsler_function is undefined at v = 0")
    vw = np.einsum('...i,...ij,...j->...', v, hs, ws)
    out = (-vw + np.sqrt(vw * vw + v2 * lam)) / lam
    return float(out) if out.ndim == 0 else out


def zermelo_to_randers(z: ZermeloData) -> RandersData:
    """Convert navigation data (h, W) to Randers data (alpha, beta).

    alpha_ij = h_ij / (1 - |W|^2) + W_i W_j / (1 - |W|^2)^2 and
    beta_i = -W_i / (1 - |W|^2), with W_i = h_ij W^j.
    """
    batched = z.h.batched and z.W.batched

    def alpha_matrix(x):
        hs, _, wl, lam = _zermelo_pointwise(z, x)
        lam1 = lam[..., None, None]
        return hs / lam1 + np.einsum('...i,...j->...ij', wl, wl) / (lam1 * lam1)

    def beta_covector(x):
        _, _, wl, lam = _zermelo_pointwise(z, x)
        return -wl / lam[..., None]

    alpha = MetricField(z.dim, alpha_matrix,
                        name=f"alpha[{z.h.name},{z.W.name}]", batched=batched)
    beta = CovectorField(z.dim, beta_covector,
                         name=f"beta[{z.W.name}]", batched=batched)
    return RandersData(alpha, beta)


def randers_to_zermelo(r: RandersData) -> ZermeloData:
    """Invert the Randers description back to navigation data (h, W).

    With lam = 1 - alpha^{ij} beta_i beta_j the inverse is
    ``h = lam * (alpha - beta x beta)`` and ``W = -lam * h^{-1} beta``; the
    construction is validated by the round-trip property tests.
    """
    batched = r.alpha.batched and r.beta.batched

    def _pieces(x):
        a = eval_metric_many(r.alpha, x)
        b = np.asarray(eval_wind_many(r.beta, x), dtype=float)
        ainv = np.linalg.inv(a)
        b2 = np.einsum('...i,...ij,...j->...', b, ainv, b)
        lam = 1.0 - b2
        if np.any(lam <= 0.0):
            raise InvalidRandersError(
                f"alpha-norm of beta >= 1 (max |beta|^2 = {float(np.max(b2)):.6f})")
        hmat = lam[..., None, None] * (a - np.einsum('...i,...j->...ij', b, b))
        return hmat, b, lam

    def h_matrix(x):
        hmat, _, _ = _pieces(x)
        return hmat

    def w_vector(x):
        hmat, b, lam = _pieces(x)
        return np.linalg.solve(hmat, -lam[..., None] * b)

    h = MetricField(r.dim, h_matrix, name=f"h[{r.alpha.name}]", batched=batched)
    w = WindField(r.dim, w_vector, name=f"W[{r.beta.name}]", batched=batched)
    return ZermeloData(h, w)


def randers_function(r: RandersData, x, v) -> float | Array:
    """Direct Randers norm sqrt(alpha(v, v)) + beta(v)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    a = eval_metric_many(r.alpha, x)
    b = np.asarray(r.beta(x), dtype=float)
    a2 = np.einsum('...i,...ij,...j->...', v, a, v)
    if np.any(a2 <= 0.0):
        raise UndefinedInputError("randers_function is undefined at v = 0")
    out = np.sqrt(a2) + np.einsum('...i,...i->...', b, v)
    return float(out) if out.ndim == 0 else out


def fundamental_tensor(r: RandersData, x, y) -> Array:
    """Fundamental tensor g_ij(x, y) of a Randers norm, y != 0.

    Computed as

        g = alpha + beta x beta
            + (alpha * (beta.y) + beta x y_flat + y_flat x beta) / a
            - (beta.y) * (y_flat x y_flat) / a^3

    with ``a = sqrt(alpha(y, y))`` and ``y_flat = alpha @ y``.  The sign of
    the final term is fixed by the defining contraction
    ``g_ij y^i y^j = F(x, y)^2``, which the tests enforce together with
    zero-degree homogeneity in y.
    """
    x = as_point(x, r.dim)
    y = np.asarray(y, dtype=float)
    raw = r.alpha(x)
    a_mat = 0.5 * (raw + raw.T)
    b = np.asarray(r.beta(x), dtype=float)
    a2 = float(y @ a_mat @ y)
    if a2 <= 0.0:
        raise UndefinedInputError("fundamental_tensor is undefined at y = 0")
    a = math.sqrt(a2)
    yl = a_mat @ y
    by = float(b @ y)
    g = (a_mat + np.outer(b, b)
         + (a_mat * by + np.outer(b, yl) + np.outer(yl, b)) / a
         - by * np.outer(yl, yl) / a**3)
    return 0.5 * (g + g.T)


# ---------------------------------------------------------------------------
# travel time along sampled curves
# ---------------------------------------------------------------------------

def randers_length(z: ZermeloData, traj: Trajectory, method: str = "trapezoid",
                   max_dt: float = 0.1) -> float:
    """Travel time of a curve: quadrature of F(q, qdot) over the samples.

    For physically parameterized trajectories this equals the elapsed
    parameter.  Zero velocity is tolerated only at the first/last sample
    (treated as a stationary endpoint with F = 0); anywhere else it is an
    error because the integrand is undefined there.
    """
    if traj.n_samples < 2:
        raise UndefinedInputError("randers_length needs at least two samples")
    gaps = np.diff(traj.times)
    if float(gaps.max()) > max_dt:
        raise UndefinedInputError(
            f"trajectory sampling too coarse: max gap {float(gaps.max()):.3g} "
            f"> allowed {max_dt:g}")
    hs = eval_metric_many(z.h, traj.points)
    speeds2 = np.einsum('...i,...ij,...j->...', traj.velocities, hs, traj.velocities)
    zero = speeds2 <= 0.0
    if np.any(zero[1:-1]):
        raise UndefinedInputError("zero velocity at an interior trajectory sample")
    fvals = np.empty(traj.n_samples)
    moving = ~zero
    if np.any(moving):
        fvals[moving] = np.atleast_1d(
            finsler_function(z, traj.points[moving], traj.velocities[moving]))
    fvals[zero] = 0.0
    if method == "trapezoid":
        return float(np.trapezoid(fvals, traj.times))
    if method == "simpson":
        from scipy.integrate import simpson
        return float(simpson(fvals, x=traj.times))
    raise UndefinedInputError(f"unknown quadrature method {method!r}")


@dataclass
class ThrottleReport:
    """Result of the full-throttle check |q_dot - W|_h = 1 along a curve."""

    max_deviation: float
    worst_time: float
    tol: float
    passed: bool


def verify_full_throttle(z: ZermeloData, traj: Trajectory,
                         tol: float = 1e-6) -> ThrottleReport:
    """Check that the control C = q_dot - W(q) has unit metric norm throughout.

    Failures are reported, not raised; only a wrong parameterization tag is
    an error.
    """
    if traj.tag != "physical":
        raise InvalidTrajectoryError(
            f"full-throttle check needs a physical trajectory, got tag "
            f"{traj.tag!r}")
    ws = eval_wind_many(z.W, traj.points)
    ctrl = traj.velocities - ws
    hs = eval_metric_many(z.h, traj.points)
    norms = np.sqrt(np.maximum(
        np.einsum('...i,...ij,...j->...', ctrl, hs, ctrl), 0.0))
    dev = np.abs(norms - 1.0)
    worst = int(np.argmax(dev))
    return ThrottleReport(max_deviation=float(dev[worst]),
                          worst_time=float(traj.times[worst]),
                          tol=tol, passed=bool(dev[worst] <= tol))
