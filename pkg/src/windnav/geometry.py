"""Riemannian substrate: metrics, winds, geodesics, flows, Lie derivatives.

Everything lives in a single coordinate chart.  Points and tangent vectors
are plain float arrays, while metric and wind fields are callables wrapped
in small dataclasses.  Derivatives of user-supplied fields are taken by
central finite differences so that evaluators only need to be ordinary
functions of the coordinates.

Field evaluators may optionally support batched evaluation (mapping an
``(..., n)`` array of points to stacked values); set ``batched=True`` on the
field to enable the vectorised fast paths used by the solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DomainExitError,
    NotHomothetyError,
    SingularMetricError,
    UndefinedInputError,
)

Array = np.ndarray

#: Default fixed step for the classical RK4 integrators.
DEFAULT_DT = 1e-3

#: Base step for central finite differences, scaled by max(1, |x|).
FD_STEP = 1e-5

#: Componentwise symmetry tolerance required of metric evaluations.
METRIC_SYMMETRY_TOL = 1e-12


# ---------------------------------------------------------------------------
# field and trajectory types
# ---------------------------------------------------------------------------

@dataclass
class MetricField:
    """Smooth field of symmetric positive-definite matrices h_ij(x).

    Parameters
    ----------
    dim : int
        Chart dimension n >= 1.
    matrix : callable
        Maps a point ``(n,)`` to an ``(n, n)`` symmetric matrix.  If
        ``batched`` is true it must also map ``(..., n)`` to ``(..., n, n)``.
    name : str
        Label used in reports.
    batched : bool
        Whether the evaluator broadcasts over leading axes.
    identity : bool
        Set by the Euclidean builder; enables fast paths that skip frame
        construction.
    """

    dim: int
    matrix: Callable[[Array], Array]
    name: str = "metric"
    batched: bool = False
    identity: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise UndefinedInputError("metric dimension must be >= 1")

    def __call__(self, x) -> Array:
        return np.asarray(self.matrix(np.asarray(x, dtype=float)), dtype=float)


@dataclass
class WindField:
    """Smooth vector field W(x), with optional declared homothety constant.

    ``declared_sigma`` (units 1/time) is a claim that the Lie derivative of
    the background metric along W equals sigma times the metric; it is
    cross-checked against :func:`homothety_sigma` wherever a solver relies
    on it.
    """

    dim: int
    vector: Callable[[Array], Array]
    declared_sigma: Optional[float] = None
    name: str = "wind"
    batched: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise UndefinedInputError("wind dimension must be >= 1")

    def __call__(self, x) -> Array:
        return np.asarray(self.vector(np.asarray(x, dtype=float)), dtype=float)


@dataclass
class Trajectory:
    """Time-sampled curve: strictly increasing times, positions, velocities.

    ``tag`` records the parameterization convention:

    * ``"physical"``  -- unit Randers speed; elapsed parameter is travel time.
    * ``"affine"``    -- geodesic-type parameter.  Outputs of
      :func:`integrate_geodesic` conserve metric speed; moving-frame curves
      produced by the solver carry this tag too, with speed exp(-sigma t / 2).
    * ``"arclength"`` -- unit metric speed.
    """

    times: Array
    points: Array
    velocities: Array
    tag: str = "affine"

    def __post_init__(self):
        self.times = np.atleast_1d(np.asarray(self.times, dtype=float))
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        if self.tag not in ("physical", "affine", "arclength"):
            raise UndefinedInputError(f"unknown parameterization tag {self.tag!r}")
        m = self.times.shape[0]
        if self.points.shape[0] != m or self.velocities.shape[0] != m:
            raise UndefinedInputError("trajectory arrays have mismatched sample counts")
        if self.points.shape != self.velocities.shape:
            raise UndefinedInputError("positions and velocities have mismatched shapes")
        if m > 1 and not np.all(np.diff(self.times) > 0):
            raise UndefinedInputError("trajectory times must be strictly increasing")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.points))
                and np.all(np.isfinite(self.velocities))):
            raise UndefinedInputError("trajectory contains non-finite samples")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


# ---------------------------------------------------------------------------
# evaluation helpers
# ---------------------------------------------------------------------------

def as_point(x, dim: Optional[int] = None) -> Array:
    """Validate and convert a chart point to a float vector."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise UndefinedInputError(f"expected a 1-d point, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise UndefinedInputError(f"point has dimension {p.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(p)):
        raise UndefinedInputError("point has non-finite coordinates")
    return p


def eval_metric_many(h: MetricField, points: Array) -> Array:
    """Evaluate a metric field on an (m, n) stack of points."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        return h(points)
    if h.batched:
        return h(points)
    return np.stack([h(p) for p in points])


def eval_wind_many(w: WindField, points: Array) -> Array:
    """Evaluate a wind field on an (m, n) stack of points."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        return w(points)
    if w.batched:
        return w(points)
    return np.stack([w(p) for p in points])


def _fd_scale(x: Array) -> float:
    return FD_STEP * max(1.0, float(np.linalg.norm(x)))


def _sym_metric(h: MetricField, x: Array) -> Array:
    """Metric evaluation, symmetry-checked and exactly symmetrized."""
    m = h(x)
    if m.shape != (x.shape[-1], x.shape[-1]):
        raise UndefinedInputError(f"metric evaluator returned shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainExitError("metric evaluation returned non-finite entries", x)
    if np.max(np.abs(m - m.T)) > METRIC_SYMMETRY_TOL:
        raise SingularMetricError(
            f"metric at {x} is asymmetric beyond {METRIC_SYMMETRY_TOL:g}")
    return 0.5 * (m + m.T)


def metric_partials(h: MetricField, x: Array, step: Optional[float] = None) -> Array:
    """Central-difference partials P[k, i, j] = d h_ij / d x^k."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    d = step if step is not None else _fd_scale(x)
    out = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = d
        out[k] = (_sym_metric(h, x + e) - _sym_metric(h, x - e)) / (2.0 * d)
    return out


def wind_jacobian(w: WindField, x: Array, step: Optional[float] = None) -> Array:
    """Central-difference Jacobian J[i, j] = d W^i / d x^j."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    d = step if step is not None else _fd_scale(x)
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = d
        cols.append((w(x + e) - w(x - e)) / (2.0 * d))
    return np.stack(cols, axis=1)


def wind_jacobian_many(w: WindField, points: Array) -> Array:
    """Batched wind Jacobians at an (m, n) stack of points."""
    points = np.asarray(points, dtype=float)
    m, n = points.shape
    steps = FD_STEP * np.maximum(1.0, np.linalg.norm(points, axis=1))
    out = np.empty((m, n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        shift = steps[:, None] * e
        out[:, :, j] = (eval_wind_many(w, points + shift)
                        - eval_wind_many(w, points - shift)) / (2.0 * steps[:, None])
    return out


# ---------------------------------------------------------------------------
# core operations
# ---------------------------------------------------------------------------

def h_norm(h: MetricField, x, v) -> float:
    """Metric norm sqrt(v^T h(x) v) of a tangent vector at x."""
    x = as_point(x, h.dim)
    v = np.asarray(v, dtype=float)
    m = _sym_metric(h, x)
    q = float(v @ m @ v)
    return math.sqrt(max(q, 0.0))


def h_norm_many(h: MetricField, points: Array, vectors: Array) -> Array:
    """Batched metric norms for stacked points/vectors."""
    ms = eval_metric_many(h, points)
    q = np.einsum('...i,...ij,...j->...', vectors, ms, vectors)
    return np.sqrt(np.maximum(q, 0.0))


def chord_distance(h: MetricField, a, b, quad_points: int = 33) -> float:
    """Metric length of the straight chart segment from a to b.

    This is an upper bound on geodesic distance, adequate for horizon
    estimates and endpoint tolerances at desk scale.
    """
    a = as_point(a, h.dim)
    b = as_point(b, h.dim)
    ts = np.linspace(0.0, 1.0, quad_points)
    pts = a[None, :] + ts[:, None] * (b - a)[None, :]
    speeds = h_norm_many(h, pts, np.broadcast_to(b - a, pts.shape))
    return float(np.trapezoid(speeds, ts))


def christoffel_symbols(h: MetricField, x, step: Optional[float] = None) -> Array:
    """Levi-Civita symbols Gamma^k_ij of a metric field at a point.

    Parameters
    ----------
    h : MetricField
    x : array-like
        Chart point.
    step : float, optional
        Finite-difference step; defaults to ``FD_STEP * max(1, |x|)``.

    Returns
    -------
    ndarray of shape (n, n, n)
        ``Gamma[k, i, j]``, exactly symmetric in (i, j).

    Raises
    ------
    SingularMetricError
        If the metric matrix cannot be inverted at x.
    """
    x = as_point(x, h.dim)
    m = _sym_metric(h, x)
    try:
        hinv = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(f"metric is singular at {x}") from exc
    if not np.all(np.isfinite(hinv)):
        raise SingularMetricError(f"metric inverse overflowed at {x}")
    p = metric_partials(h, x, step)
    # V[i, j, l] = d_i h_jl + d_j h_il - d_l h_ij
    v = p + p.transpose(1, 0, 2) - np.moveaxis(p, 0, 2)
    return 0.5 * np.einsum('kl,ijl->kij', hinv, v)


def lie_derivative_metric(h: MetricField, w: WindField, x) -> Array:
    """Lie derivative (L_W h)_ij = W^k d_k h_ij + h_kj d_i W^k + h_ik d_j W^k."""
    x = as_point(x, h.dim)
    m = _sym_metric(h, x)
    wx = w(x)
    p = metric_partials(h, x)
    jw = wind_jacobian(w, x)
    t1 = np.einsum('k,kij->ij', wx, p)
    t2 = jw.T @ m        # sum_k (d_i W^k) h_kj
    t3 = m @ jw          # sum_k h_ik (d_j W^k)
    out = t1 + t2 + t3
    return 0.5 * (out + out.T)


def homothety_sigma(h: MetricField, w: WindField, sample_points: Sequence,
                    tol: float = 1e-6) -> float:
    """Estimate the constant sigma with L_W h = sigma * h, or fail loudly.

    At each sample the least-squares scalar c(x) minimising
    ``||L_W h - c h||_F`` is computed; the estimate is accepted only if the
    relative residual at every sample and the spread of c across samples
    both stay within ``tol``.

    Raises
    ------
    NotHomothetyError
        With worst-point diagnostics when the wind is not a homothety.
    """
    pts = [as_point(p, h.dim) for p in sample_points]
    if not pts:
        raise UndefinedInputError("homothety check needs at least one sample point")
    cs = np.empty(len(pts))
    devs = np.empty(len(pts))
    for i, x in enumerate(pts):
        lie = lie_derivative_metric(h, w, x)
        m = _sym_metric(h, x)
        denom = float(np.sum(m * m))
        if denom <= 0.0:
            raise SingularMetricError(f"degenerate metric at sample {x}")
        c = float(np.sum(lie * m)) / denom
        devs[i] = float(np.linalg.norm(lie - c * m)) / math.sqrt(denom)
        cs[i] = c
    spread = float(cs.max() - cs.min())
    worst = int(np.argmax(devs))
    if devs[worst] > tol or spread > tol:
        raise NotHomothetyError(
            "wind is not an infinitesimal homothety: "
            f"max residual {devs[worst]:.3e} (at {pts[worst]}), "
            f"sigma spread {spread:.3e}, tol {tol:g}",
            worst_point=pts[worst], deviation=float(devs[worst]),
            spread=spread, estimates=cs.copy())
    return float(np.mean(cs))


# ---------------------------------------------------------------------------
# integrators
# ---------------------------------------------------------------------------

def _check_finite(y: Array, what: str, x=None):
    if not np.all(np.isfinite(y)):
        raise DomainExitError(f"{what} became non-finite during integration", x)


def integrate_geodesic(h: MetricField, x0, v0, T: float,
                       dt: float = DEFAULT_DT) -> Trajectory:
    """Integrate the geodesic equation with classical fixed-step RK4.

    Solves ``xdd^k + Gamma^k_ij xd^i xd^j = 0`` from ``(x0, v0)`` over
    ``[0, T]``.  The output carries the affine parameterization, so the
    metric speed is conserved along it.

    Raises
    ------
    DomainExitError
        If a metric evaluation fails or the state blows up along the way.
    """
    if T <= 0 or dt <= 0:
        raise UndefinedInputError("integrate_geodesic needs T > 0 and dt > 0")
    x = as_point(x0, h.dim)
    v = np.asarray(v0, dtype=float)
    n_steps = max(1, int(math.ceil(T / dt - 1e-12)))
    step = T / n_steps

    def rhs(state):
        xx, vv = state[:h.dim], state[h.dim:]
        try:
            gam = christoffel_symbols(h, xx)
        except (SingularMetricError, UndefinedInputError) as exc:
            raise DomainExitError(f"geodesic left chart validity region: {exc}", xx)
        acc = -np.einsum('kij,i,j->k', gam, vv, vv)
        return np.concatenate([vv, acc])

    state = np.concatenate([x, v])
    ts = [0.0]
    xs = [x.copy()]
    vs = [v.copy()]
    for i in range(n_steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * step * k1)
        k3 = rhs(state + 0.5 * step * k2)
        k4 = rhs(state + step * k3)
        state = state + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(state, "geodesic state", state[:h.dim])
        ts.append((i + 1) * step)
        xs.append(state[:h.dim].copy())
        vs.append(state[h.dim:].copy())
    return Trajectory(np.array(ts), np.array(xs), np.array(vs), tag="affine")


def flow_map(w: WindField, x0, t: float, direction: int,
             dt: float = DEFAULT_DT) -> Array:
    """Point reached by flowing along ``direction * W`` for duration t (RK4)."""
    if direction not in (1, -1):
        raise UndefinedInputError("flow direction must be +1 or -1")
    if t < 0:
        raise UndefinedInputError("flow duration must be nonnegative")
    x = as_point(x0, w.dim)
    if t == 0.0:
        return x.copy()
    n_steps = max(1, int(math.ceil(t / dt - 1e-12)))
    step = t / n_steps
    for _ in range(n_steps):
        k1 = direction * w(x)
        k2 = direction * w(x + 0.5 * step * k1)
        k3 = direction * w(x + 0.5 * step * k2)
        k4 = direction * w(x + step * k3)
        x = x + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(x, "flow state", x)
    return x


def flow_differential(w: WindField, x0, t: float, v, direction: int,
                      dt: float = DEFAULT_DT) -> Array:
    """Pushforward of a tangent vector under the flow of ``direction * W``.

    Jointly integrates the flow and its linearised (variational) equation
    ``d(delta)/dt = direction * (dW/dx) delta`` and returns the transported
    vector at time t.
    """
    if direction not in (1, -1):
        raise UndefinedInputError("flow direction must be +1 or -1")
    if t < 0:
        raise UndefinedInputError("flow duration must be nonnegative")
    x = as_point(x0, w.dim)
    delta = np.asarray(v, dtype=float)
    if t == 0.0:
        return delta.copy()
    n = w.dim
    n_steps = max(1, int(math.ceil(t / dt - 1e-12)))
    step = t / n_steps

    def rhs(state):
        xx, dd = state[:n], state[n:]
        return np.concatenate([direction * w(xx),
                               direction * (wind_jacobian(w, xx) @ dd)])

    state = np.concatenate([x, delta])
    for _ in range(n_steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * step * k1)
        k3 = rhs(state + 0.5 * step * k2)
        k4 = rhs(state + step * k3)
        state = state + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(state, "variational state", state[:n])
    return state[n:]


def flow_many(w: WindField, starts: Array, durations: Array, direction: int,
              dt: float = DEFAULT_DT, transport: Optional[Array] = None):
    """Flow a stack of points (and optionally tangent vectors) in lockstep.

    Member i is integrated over its own duration ``durations[i]`` using a
    per-member RK4 step ``durations[i] / m`` with a shared step count m, so
    the whole batch advances together.  Returns ``ends`` or
    ``(ends, transported)`` when ``transport`` initial vectors are given.
    """
    if direction not in (1, -1):
        raise UndefinedInputError("flow direction must be +1 or -1")
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    durations = np.atleast_1d(np.asarray(durations, dtype=float))
    if np.any(durations < 0):
        raise UndefinedInputError("flow durations must be nonnegative")
    m, n = starts.shape
    t_max = float(durations.max(initial=0.0))
    if t_max == 0.0:
        ends = starts.copy()
        return (ends, np.asarray(transport, float).copy()) if transport is not None \
            else ends
    n_steps = max(1, int(math.ceil(t_max / dt - 1e-12)))
    hstep = (durations / n_steps)[:, None]

    if transport is None:
        def rhs(state):
            return direction * eval_wind_many(w, state)
        state = starts.copy()
    else:
        def rhs(state):
            xx, dd = state[:, :n], state[:, n:]
            jac = wind_jacobian_many(w, xx)
            return np.concatenate(
                [direction * eval_wind_many(w, xx),
                 direction * np.einsum('mij,mj->mi', jac, dd)], axis=1)
        state = np.concatenate([starts, np.atleast_2d(np.asarray(transport, float))],
                               axis=1)

    for _ in range(n_steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * hstep * k1)
        k3 = rhs(state + 0.5 * hstep * k2)
        k4 = rhs(state + hstep * k3)
        state = state + (hstep / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    _check_finite(state, "batched flow state")
    if transport is None:
        return state
    return state[:, :n], state[:, n:]


# ---------------------------------------------------------------------------
# interpolation and frames
# ---------------------------------------------------------------------------

def hermite_state(times: Array, points: Array, velocities: Array, s: float):
    """Cubic-Hermite interpolation of a sampled curve; returns (x, v) at s."""
    if s < times[0] - 1e-12 or s > times[-1] + 1e-12:
        raise UndefinedInputError(
            f"interpolation parameter {s} outside sampled range "
            f"[{times[0]}, {times[-1]}]")
    s = min(max(s, float(times[0])), float(times[-1]))
    idx = int(np.searchsorted(times, s, side='right')) - 1
    idx = min(max(idx, 0), len(times) - 2)
    t0, t1 = times[idx], times[idx + 1]
    hgap = t1 - t0
    tau = (s - t0) / hgap
    x0, x1 = points[idx], points[idx + 1]
    v0, v1 = velocities[idx], velocities[idx + 1]
    h00 = 2 * tau**3 - 3 * tau**2 + 1
    h10 = tau**3 - 2 * tau**2 + tau
    h01 = -2 * tau**3 + 3 * tau**2
    h11 = tau**3 - tau**2
    x = h00 * x0 + hgap * h10 * v0 + h01 * x1 + hgap * h11 * v1
    d00 = 6 * tau**2 - 6 * tau
    d10 = 3 * tau**2 - 4 * tau + 1
    d01 = -6 * tau**2 + 6 * tau
    d11 = 3 * tau**2 - 2 * tau
    v = (d00 * x0 + hgap * d10 * v0 + d01 * x1 + hgap * d11 * v1) / hgap
    return x, v


def orthonormal_frame(h: MetricField, x) -> Array:
    """Matrix E whose columns are an h-orthonormal frame at x (E^T h E = I).

    Built by Cholesky, which matches Gram-Schmidt on the coordinate basis.
    """
    x = as_point(x, h.dim)
    if h.identity:
        return np.eye(h.dim)
    m = _sym_metric(h, x)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(f"metric not positive-definite at {x}") from exc
    return np.linalg.inv(chol).T


def orthonormal_frame_many(h: MetricField, points: Array) -> Array:
    """Batched orthonormal frames at an (m, n) stack of points."""
    points = np.atleast_2d(np.asarray(points, float))
    if h.identity:
        m, n = points.shape
        return np.broadcast_to(np.eye(n), (m, n, n))
    mats = eval_metric_many(h, points)
    mats = 0.5 * (mats + np.swapaxes(mats, -1, -2))
    try:
        chols = np.linalg.cholesky(mats)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("metric not positive-definite in batch") from exc
    return np.swapaxes(np.linalg.inv(chols), -1, -2)
