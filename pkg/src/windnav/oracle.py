"""Brute-force time-optimal control search used to certify the solver.

The oracle knows nothing about moving frames: it simulates steering
directly (q_dot = W(q) + C with |C|_h = 1, C piecewise constant over K
segments) and bisects on the arrival time T over the feasibility predicate
"some schedule lands within tol of the goal".  The inner minimisation is
coordinate descent on the heading angles, run from a fixed-seed restart
pool, vectorised across restarts and candidate angles.

Headings live in an h-orthonormal frame field (Gram-Schmidt on the
coordinate frame), so unit coefficient vectors are unit-speed controls on
curved metrics too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InfeasibleError, UndefinedInputError, WindTooStrongError
from .geometry import (
    Trajectory,
    as_point,
    chord_distance,
    eval_wind_many,
    h_norm,
    h_norm_many,
    orthonormal_frame,
    orthonormal_frame_many,
)
from .randers import ZermeloData
from .solver import NavigationProblem, NavigationSolution, angles_to_unit, unit_to_angles

Array = np.ndarray

DEFAULT_SEED = 2024


@dataclass
class ControlSchedule:
    """Piecewise-constant steering: K unit headings (frame coefficients) + T."""

    headings: Array
    T: float

    def __post_init__(self):
        self.headings = np.atleast_2d(np.asarray(self.headings, dtype=float))
        norms = np.linalg.norm(self.headings, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise UndefinedInputError(
                f"schedule headings must be unit vectors (worst |c| = "
                f"{float(norms[np.argmax(np.abs(norms - 1))]):.12f})")
        if self.T < 0:
            raise UndefinedInputError("schedule duration must be nonnegative")

    @property
    def segments(self) -> int:
        return self.headings.shape[0]


def simulate_control(z: ZermeloData, x0, sched: ControlSchedule,
                     dt: float = 1e-3) -> Trajectory:
    """Integrate q_dot = W(q) + E(q) c_k segment by segment (RK4).

    Steps are clipped at segment boundaries so each segment is integrated
    exactly.  Output is physically parameterized.
    """
    x = as_point(x0, z.dim)
    K = sched.segments
    seg_len = sched.T / K if K else 0.0
    frame = orthonormal_frame

    def rhs(xx, c):
        return z.W(xx) + frame(z.h, xx) @ c

    ts = [0.0]
    xs = [x.copy()]
    vs = [rhs(x, sched.headings[0]) if K else z.W(x)]
    t = 0.0
    for k in range(K):
        c = sched.headings[k]
        n_steps = max(1, int(math.ceil(seg_len / dt - 1e-12)))
        step = seg_len / n_steps
        for _ in range(n_steps):
            k1 = rhs(x, c)
            k2 = rhs(x + 0.5 * step * k1, c)
            k3 = rhs(x + 0.5 * step * k2, c)
            k4 = rhs(x + step * k3, c)
            x = x + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += step
            ts.append(t)
            xs.append(x.copy())
            vs.append(rhs(x, c))
    return Trajectory(np.asarray(ts), np.asarray(xs), np.asarray(vs),
                      tag="physical")


# ---------------------------------------------------------------------------
# batched machinery
# ---------------------------------------------------------------------------

def _angles_to_units(thetas: Array) -> Array:
    """(..., n-1) hyperspherical angles -> (..., n) unit vectors, vectorised."""
    thetas = np.asarray(thetas, dtype=float)
    k = thetas.shape[-1]
    cos = np.cos(thetas)
    sin = np.sin(thetas)
    sprod = np.cumprod(sin, axis=-1)
    out = np.empty(thetas.shape[:-1] + (k + 1,))
    out[..., 0] = cos[..., 0]
    for i in range(1, k):
        out[..., i] = sprod[..., i - 1] * cos[..., i]
    out[..., k] = sprod[..., k - 1]
    return out


def _endpoints_batch(z: ZermeloData, x0: Array, thetas: Array, T: float,
                     steps_per_segment: int) -> Array:
    """Endpoints of a (B, K, n-1) batch of angle schedules after time T."""
    B, K, _ = thetas.shape
    coeffs = _angles_to_units(thetas)           # (B, K, n)
    n = z.dim
    state = np.broadcast_to(x0, (B, n)).copy()
    step = T / (K * steps_per_segment)

    identity = z.h.identity

    def rhs(xx, c):
        wind = eval_wind_many(z.W, xx)
        if identity:
            return wind + c
        frames = orthonormal_frame_many(z.h, xx)
        return wind + np.einsum('bij,bj->bi', frames, c)

    for k in range(K):
        c = coeffs[:, k, :]
        for _ in range(steps_per_segment):
            k1 = rhs(state, c)
            k2 = rhs(state + 0.5 * step * k1, c)
            k3 = rhs(state + 0.5 * step * k2, c)
            k4 = rhs(state + step * k3, c)
            state = state + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return state


def _goal_distances(z: ZermeloData, ends: Array, goal: Array) -> Array:
    diffs = ends - goal
    goals = np.broadcast_to(goal, ends.shape)
    return h_norm_many(z.h, goals, diffs)


class _ScheduleSearch:
    """Coordinate-descent inner optimiser over a persistent restart pool."""

    _OFFSETS = np.array([-1.0, -2.0 / 3.0, -1.0 / 3.0, 0.0, 1.0 / 3.0,
                         2.0 / 3.0, 1.0])

    def __init__(self, z: ZermeloData, x0: Array, goal: Array, K: int,
                 n: int, restarts: int, seed: int, steps_per_segment: int):
        self.z = z
        self.x0 = x0
        self.goal = goal
        self.K = K
        self.n = n
        self.steps = steps_per_segment
        self.sims = 0
        rng = np.random.default_rng(seed)
        pool = np.empty((restarts, K, n - 1))
        # restart 0 aims straight at the goal; the rest are random 4-piece
        # step profiles sampled at the K segments, so coarser-K pools are
        # refinements of the same draws
        aim = self._aim_angles()
        pool[0] = aim
        pieces = max(1, min(4, K))
        for r in range(1, restarts):
            draw = np.empty((pieces, n - 1))
            if n >= 3:
                draw[:, :n - 2] = rng.uniform(0.0, math.pi,
                                              size=(pieces, n - 2))
            draw[:, n - 2] = rng.uniform(-math.pi, math.pi, size=pieces)
            idx = (np.arange(K) * pieces) // K
            pool[r] = draw[idx]
        self.pool = pool

    def _aim_angles(self) -> Array:
        frame = orthonormal_frame(self.z.h, self.x0)
        coeff = np.linalg.solve(frame, self.goal - self.x0)
        nrm = np.linalg.norm(coeff)
        if nrm == 0.0:
            coeff = np.zeros(self.n)
            coeff[0] = 1.0
        else:
            coeff = coeff / nrm
        ang = unit_to_angles(coeff)
        return np.broadcast_to(ang, (self.K, self.n - 1)).copy()

    def distances(self, T: float) -> Array:
        ends = _endpoints_batch(self.z, self.x0, self.pool, T, self.steps)
        self.sims += self.pool.shape[0]
        return _goal_distances(self.z, ends, self.goal)

    def descend(self, T: float, sweeps: int, stop_below: float) -> float:
        """Coordinate descent over all pool members; returns best distance."""
        B = self.pool.shape[0]
        best = float(np.min(self.distances(T)))
        if best <= stop_below:
            return best
        n_cand = self._OFFSETS.size
        for sweep in range(sweeps):
            delta = 0.5 * math.pi * (0.3 ** sweep)
            for k in range(self.K):
                for axis in range(self.n - 1):
                    cand = np.repeat(self.pool[:, None, :, :], n_cand, axis=1)
                    cand[:, :, k, axis] += delta * self._OFFSETS[None, :]
                    flat = cand.reshape(B * n_cand, self.K, self.n - 1)
                    ends = _endpoints_batch(self.z, self.x0, flat, T, self.steps)
                    self.sims += flat.shape[0]
                    dists = _goal_distances(self.z, ends, self.goal)
                    dists = dists.reshape(B, n_cand)
                    pick = np.argmin(dists, axis=1)
                    self.pool[:, k, axis] = cand[np.arange(B), pick, k, axis]
                    best = min(best, float(np.min(dists)))
            if best <= stop_below:
                break
        return best

    def best_schedule(self, T: float) -> Tuple[Array, float]:
        dists = self.distances(T)
        i = int(np.argmin(dists))
        return self.pool[i].copy(), float(dists[i])


@dataclass
class OracleResult:
    """Smallest feasible arrival time found, with the witness schedule."""

    T: float
    schedule: ControlSchedule
    endpoint_distance: float
    horizon: float
    bracket: Tuple[float, float]
    simulations: int


def oracle_min_time(z: ZermeloData, x0, x_goal, K: int, tol: float = 1e-3,
                    seed: int = DEFAULT_SEED, restarts: int = 32,
                    depth: int = 20, steps_per_segment: int = 16,
                    horizon: Optional[float] = None,
                    sweeps_first: int = 6, sweeps_bisect: int = 3
                    ) -> OracleResult:
    """Bisection on T over schedule feasibility, descent on heading angles.

    Returns the smallest T (to bisection resolution) at which some schedule
    of K unit headings ends within ``tol`` of the goal, together with that
    schedule.  Deterministic for a fixed seed.

    Raises
    ------
    InfeasibleError
        If even the horizon time is infeasible for every restart.
    """
    if K < 1:
        raise UndefinedInputError("oracle needs K >= 1 control segments")
    x0 = as_point(x0, z.dim)
    x_goal = as_point(x_goal, z.dim)
    d = chord_distance(z.h, x0, x_goal)
    if d <= tol:
        aim = np.zeros(z.dim)
        aim[0] = 1.0
        return OracleResult(0.0, ControlSchedule(np.tile(aim, (K, 1)), 0.0),
                            float(d), 0.0, (0.0, 0.0), 0)
    probe = x0[None, :] + np.linspace(0, 1, 33)[:, None] * (x_goal - x0)[None, :]
    wmax = float(np.max(h_norm_many(z.h, probe, eval_wind_many(z.W, probe))))
    if wmax >= 1.0:
        raise WindTooStrongError(
            f"|W| reaches {wmax:.3f} >= 1 along the start-goal probe")
    t_hi = horizon if horizon is not None else 4.0 * d / (1.0 - wmax)

    search = _ScheduleSearch(z, x0, x_goal, K, z.dim, restarts, seed,
                             steps_per_segment)
    best_hi = search.descend(t_hi, sweeps_first, stop_below=0.25 * tol)
    if best_hi > tol:
        raise InfeasibleError(
            f"goal unreachable within horizon {t_hi:.4g} "
            f"(best endpoint distance {best_hi:.3e} > tol {tol:g})")

    lo, hi = 0.0, t_hi
    for _ in range(depth):
        mid = 0.5 * (lo + hi)
        quick = float(np.min(search.distances(mid)))
        feasible = quick <= tol
        if not feasible:
            feasible = search.descend(mid, sweeps_bisect,
                                      stop_below=0.25 * tol) <= tol
        if feasible:
            hi = mid
        else:
            lo = mid
    headings, dist = search.best_schedule(hi)
    sched = ControlSchedule(_angles_to_units(headings), hi)
    return OracleResult(T=float(hi), schedule=sched,
                        endpoint_distance=float(dist), horizon=float(t_hi),
                        bracket=(float(lo), float(hi)),
                        simulations=search.sims)


@dataclass
class CertificationReport:
    """Outcome of racing the solver against the schedule-search oracle."""

    T_solver: float
    T_oracle: float
    gap: float
    slack: float
    certified: bool
    oracle: OracleResult


def compare_with_solver(prob: NavigationProblem, sol: NavigationSolution,
                        K: int = 8, tol: float = 1e-3, slack: float = 5e-3,
                        seed: int = DEFAULT_SEED,
                        **oracle_kwargs) -> CertificationReport:
    """Certify a solution: the oracle must not beat it by more than ``slack``."""
    result = oracle_min_time(prob.z, prob.q_start, prob.q_goal, K, tol=tol,
                             seed=seed, **oracle_kwargs)
    gap = sol.T - result.T
    return CertificationReport(T_solver=float(sol.T), T_oracle=result.T,
                               gap=float(gap), slack=slack,
                               certified=bool(sol.T <= result.T + slack),
                               oracle=result)
