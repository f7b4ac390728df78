"""Learning dynamics in the cumulative-payoff (dual) space.

Every player updates simultaneously. Internally states are flat arrays of
shape ``(..., d)`` with ``d = sum(n_i)``; the leading dimensions index
independent trajectories that are stepped together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cfunction import c_value
from .game_core import BimatrixGame, RegionSpec, as_dual_point, flatten, softmax, split

OVERFLOW_LIMIT = 1e300


class Algorithm(str, Enum):
    MWU = "mwu"
    OMWU = "omwu"
    OMWU_SURROGATE = "omwu_surrogate"
    FTRL = "ftrl"


class Regularizer(str, Enum):
    ENTROPIC = "entropic"
    SQUARED_EUCLIDEAN = "squared_euclidean"


class TrajectoryAborted(RuntimeError):
    """A dual coordinate overflowed; ``record`` holds the finite prefix."""

    def __init__(self, message, last_finite_index, record=None):
        super().__init__(message)
        self.last_finite_index = last_finite_index
        self.record = record


@dataclass(frozen=True)
class UpdateRule:
    algorithm: Algorithm
    epsilon: float
    regularizer: Regularizer | None = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.regularizer is not None:
            object.__setattr__(self, "regularizer", Regularizer(self.regularizer))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon: must be positive, got {self.epsilon}")
        if (self.algorithm is Algorithm.FTRL) != (self.regularizer is not None):
            raise ValueError("regularizer: required for FTRL and only for FTRL")

    def primal(self, v: np.ndarray) -> np.ndarray:
        """The player's mixed strategy for one dual block ``v``."""
        if self.regularizer is Regularizer.SQUARED_EUCLIDEAN:
            return simplex_projection(v)
        return softmax(v)


def simplex_projection(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex along the last axis.

    Sort-and-threshold; a stable sort breaks ties by index.
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    u = -np.sort(-v, axis=-1, kind="stable")
    css = np.cumsum(u, axis=-1) - 1.0
    ks = np.arange(1, n + 1)
    cond = u - css / ks > 0
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    return np.maximum(v - theta, 0.0)


# --------------------------------------------------------------------------
# flat-state helpers


def _fast_softmax(v):
    z = np.exp(v - v.max(axis=-1, keepdims=True))
    z /= z.sum(axis=-1, keepdims=True)
    return z


def _fast_projection(v):
    return simplex_projection(v)


class _Kernel:
    """Per-(game, rule) step evaluator with precomputed block slices."""

    def __init__(self, game, rule: UpdateRule):
        self.game = game
        self.rule = rule
        counts = tuple(game.strategy_counts)
        edges = np.concatenate([[0], np.cumsum(counts)])
        self.slices = [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
        self.primal = (_fast_projection if rule.regularizer is Regularizer.SQUARED_EUCLIDEAN
                       else _fast_softmax)
        self.bimatrix = isinstance(game, BimatrixGame)
        if self.bimatrix:
            self.AT = np.ascontiguousarray(game.A.T)
            self.B = game.B

    def primal_parts(self, P):
        return [self.primal(P[..., s]) for s in self.slices]

    def payoffs(self, xs):
        """Flat U(x) and its per-player parts."""
        if self.bimatrix:
            parts = [xs[1] @ self.AT, xs[0] @ self.B]
        else:
            parts = self.game.payoff_vectors(xs)
        return np.concatenate(parts, axis=-1), parts

    def step(self, P, U_prev=None):
        """One update; returns (new state, payoff used as next step's 'previous')."""
        xs = self.primal_parts(P)
        U, U_parts = self.payoffs(xs)
        eps = self.rule.epsilon
        algorithm = self.rule.algorithm
        if algorithm is Algorithm.OMWU:
            prev = U if U_prev is None else U_prev
            return P + eps * (2.0 * U - prev), U
        if algorithm is Algorithm.OMWU_SURROGATE:
            return P + eps * U + eps * eps * surrogate_correction(self.game, xs, U_parts), U
        return P + eps * U, U


def surrogate_correction(game, xs, U_parts=None):
    """sum_{k != i, l} x_kl (U^{ik}_{jl} - U^i_j) U^k_l for every (i, j), flattened."""
    U = U_parts if U_parts is not None else game.payoff_vectors(xs)
    N = len(xs)
    out = []
    for i in range(N):
        acc = np.zeros_like(U[i])
        for k in range(N):
            if k == i:
                continue
            weighted = xs[k] * U[k]
            acc = acc + np.einsum("...jl,...l->...j", game.pair_payoffs(xs, i, k), weighted)
            acc = acc - U[i] * np.sum(weighted, axis=-1, keepdims=True)
        out.append(acc)
    return flatten(out)


def displacement(game, P, rule) -> np.ndarray:
    """F(p) with one-step map p -> p + eps F(p) (MWU, FTRL and the OMWU surrogate)."""
    if rule.algorithm is Algorithm.OMWU:
        raise ValueError("true OMWU is a two-step recursion; use omwu_step or the surrogate")
    kernel = _Kernel(game, rule)
    xs = kernel.primal_parts(np.asarray(P, dtype=float))
    U, U_parts = kernel.payoffs(xs)
    if rule.algorithm is Algorithm.OMWU_SURROGATE:
        return U + rule.epsilon * surrogate_correction(game, xs, U_parts)
    return U


def _step_flat(game, P, rule, U_prev=None):
    return _Kernel(game, rule).step(P, U_prev)


def _require(rule, *algorithms):
    if rule.algorithm not in algorithms:
        names = ", ".join(a.value for a in algorithms)
        raise ValueError(f"rule.algorithm: expected {names}, got {rule.algorithm.value}")


def _wrap(game, P):
    return split(P, game.strategy_counts)


# --------------------------------------------------------------------------
# single steps


def mwu_step(game, p, rule: UpdateRule):
    _require(rule, Algorithm.MWU)
    P = flatten(as_dual_point(p, game.strategy_counts))
    return _wrap(game, _step_flat(game, P, rule)[0])


def omwu_step(game, p_curr, p_prev, rule: UpdateRule):
    """p' = p + eps [2 U(x(p_curr)) - U(x(p_prev))]."""
    _require(rule, Algorithm.OMWU)
    counts = game.strategy_counts
    P = flatten(as_dual_point(p_curr, counts))
    P_prev = flatten(as_dual_point(p_prev, counts))
    # one kernel for both payoffs keeps p_prev = p_curr bitwise equal to MWU
    kernel = _Kernel(game, rule)
    U_prev = kernel.payoffs(kernel.primal_parts(P_prev))[0]
    return _wrap(game, kernel.step(P, U_prev)[0])


def omwu_surrogate_step(game, p, rule: UpdateRule):
    """One-step Euler surrogate of OMWU: p + eps U + eps^2 sum x (U^{ik} - U^i) U^k."""
    _require(rule, Algorithm.OMWU_SURROGATE)
    P = flatten(as_dual_point(p, game.strategy_counts))
    return _wrap(game, _step_flat(game, P, rule)[0])


def ftrl_step(game, p, rule: UpdateRule):
    _require(rule, Algorithm.FTRL)
    P = flatten(as_dual_point(p, game.strategy_counts))
    return _wrap(game, _step_flat(game, P, rule)[0])


def step(game, p, rule: UpdateRule, p_prev=None):
    """Dispatch on ``rule.algorithm``; OMWU without ``p_prev`` behaves as its seed step."""
    if rule.algorithm is Algorithm.OMWU:
        return omwu_step(game, p, p if p_prev is None else p_prev, rule)
    P = flatten(as_dual_point(p, game.strategy_counts))
    return _wrap(game, _step_flat(game, P, rule)[0])


# --------------------------------------------------------------------------
# trajectories


def region_mask(game, P, rule: UpdateRule, region: RegionSpec):
    """Membership of flat states in S^delta under the rule's primal map."""
    return _region_mask(_Kernel(game, rule), np.asarray(P, dtype=float), region.delta)


def _region_mask(kernel, P, delta):
    ok = True
    for x in kernel.primal_parts(P):
        ok = ok & (x.min(axis=-1) >= delta)
    return ok


@dataclass
class TrajectoryRecord:
    counts: tuple[int, ...]
    points: np.ndarray                       # (T + 1, d)
    exit_time: int | None = None
    in_region: np.ndarray | None = field(default=None, repr=False)

    @property
    def steps(self) -> int:
        return len(self.points) - 1

    def point(self, t: int) -> list[np.ndarray]:
        return split(self.points[t], self.counts)


class Stepper:
    """Iterates a rule from a (possibly batched) flat state, keeping OMWU memory."""

    def __init__(self, game, P0, rule: UpdateRule):
        self.kernel = _Kernel(game, rule)
        self.rule = rule
        self.P = np.array(P0, dtype=float)
        self.t = 0
        self._U_prev = None

    def advance(self) -> np.ndarray:
        if self.rule.algorithm is Algorithm.OMWU and self.t == 0:
            # p^1 = p^0; the payoff at p^0 becomes the optimistic "previous" term
            self._U_prev = self.kernel.payoffs(self.kernel.primal_parts(self.P))[0]
        else:
            self.P, self._U_prev = self.kernel.step(self.P, self._U_prev)
        self.t += 1
        return self.P


def _check_finite(P):
    # NaN fails the comparison, so one reduction covers both cases
    return bool(np.abs(P).max(initial=0.0) <= OVERFLOW_LIMIT)


def run_trajectory(game, p0, rule: UpdateRule, steps: int,
                   region: RegionSpec | None = None) -> TrajectoryRecord:
    """Iterate ``rule`` for ``steps`` updates, recording every dual state.

    Recording continues after the first region exit; analyses that need the
    trajectory inside S^delta truncate at ``exit_time``.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    counts = tuple(game.strategy_counts)
    P0 = flatten(as_dual_point(p0, counts))
    points = np.empty((steps + 1, P0.size))
    points[0] = P0
    stepper = Stepper(game, P0, rule)
    for t in range(1, steps + 1):
        P = stepper.advance()
        if not _check_finite(P):
            record = TrajectoryRecord(counts, points[:t].copy())
            _mark_region(game, record, rule, region)
            raise TrajectoryAborted(
                f"dual state overflowed at step {t}", last_finite_index=t - 1, record=record
            )
        points[t] = P
    record = TrajectoryRecord(counts, points)
    _mark_region(game, record, rule, region)
    return record


def _mark_region(game, record, rule, region):
    if region is None:
        return
    mask = np.asarray(region_mask(game, record.points, rule, region))
    record.in_region = mask
    outside = np.flatnonzero(~mask)
    record.exit_time = int(outside[0]) if outside.size else None


# --------------------------------------------------------------------------
# escaping from an interior equilibrium


@dataclass
class EscapeReport:
    applicable: bool
    c_value: float
    exit_times: list[int | None]
    max_primal_distance: list[float]
    reason: str = ""


def equilibrium_escape_probe(game, x_star, region: RegionSpec, rule: UpdateRule, steps: int,
                             num_probes: int, probe_radius: float, seed: int = 0) -> EscapeReport:
    """Launch MWU from random dual perturbations of log(x*) and record escapes."""
    _require(rule, Algorithm.MWU)
    counts = tuple(game.strategy_counts)
    xs = [np.asarray(v, dtype=float) for v in x_star]
    if tuple(v.shape for v in xs) != tuple((n,) for n in counts):
        raise ValueError(f"x_star: shapes {[v.shape for v in xs]} do not match strategy counts {counts}")
    if any(np.any(v <= 0) for v in xs):
        raise ValueError("x_star: must lie in the interior of the simplex")
    p_star = [np.log(v) for v in xs]
    c = float(c_value(game, p_star))
    if not c > 0:
        return EscapeReport(False, c, [], [], reason="C(p*) <= 0; volume does not expand at p*")
    rng = np.random.default_rng(seed)
    P_star = flatten(p_star)
    directions = rng.standard_normal((num_probes, P_star.size))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    P = P_star + probe_radius * directions
    X_star = flatten(xs)
    exit_times = np.full(num_probes, -1)
    max_dist = np.zeros(num_probes)
    stepper = Stepper(game, P, rule)
    kernel = stepper.kernel
    for t in range(0, steps + 1):
        if t > 0:
            P = stepper.advance()
        xs = kernel.primal_parts(P)
        X = np.concatenate(xs, axis=-1)
        max_dist = np.maximum(max_dist, np.sqrt(((X - X_star) ** 2).sum(axis=-1)))
        outside = ~_region_mask(kernel, P, region.delta)
        exit_times[outside & (exit_times < 0)] = t
        if np.all(exit_times >= 0):
            break
    return EscapeReport(True, c, [int(e) if e >= 0 else None for e in exit_times],
                        max_dist.tolist())
