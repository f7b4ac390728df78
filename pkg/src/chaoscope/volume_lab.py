"""Numerical checks of volume expansion: Jacobians, det(I + eps J), log-volume and divergence.

Every one-step rule here has the form p -> p + eps F(p). True two-step OMWU
is not a map on p alone, so its volume behaviour is measured on the one-step
surrogate; passing an OMWU rule selects the surrogate automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import cbar_sample, lyapunov_exponent
from .dynamics import (
    Algorithm,
    Regularizer,
    Stepper,
    TrajectoryAborted,
    UpdateRule,
    _Kernel,
    _check_finite,
    _region_mask,
    displacement,
    run_trajectory,
)
from .game_core import RegionSpec, as_dual_point, flatten

DEFAULT_FD_STEP = 1e-5
JACOBIAN_CHUNK = 8192


def _one_step_rule(rule: UpdateRule) -> UpdateRule:
    if rule.algorithm is Algorithm.OMWU:
        return UpdateRule(Algorithm.OMWU_SURROGATE, rule.epsilon)
    return rule


def _flat_point(game, p):
    if isinstance(p, np.ndarray) and p.ndim >= 1 and p.shape[-1] == sum(game.strategy_counts):
        if not np.all(np.isfinite(p)):
            raise ValueError("dual point: entries must be finite")
        return np.asarray(p, dtype=float)
    return flatten(as_dual_point(p, game.strategy_counts))


@dataclass(frozen=True)
class GradualMap:
    """The one-step update p -> p + eps F(p) of ``rule`` on ``game``."""

    game: object
    rule: UpdateRule

    def __post_init__(self):
        object.__setattr__(self, "rule", _one_step_rule(self.rule))

    @property
    def epsilon(self) -> float:
        return self.rule.epsilon

    @property
    def dimension(self) -> int:
        return int(sum(self.game.strategy_counts))

    def with_epsilon(self, epsilon: float) -> "GradualMap":
        return GradualMap(self.game, UpdateRule(self.rule.algorithm, epsilon, self.rule.regularizer))

    def displacement(self, P) -> np.ndarray:
        return displacement(self.game, np.asarray(P, dtype=float), self.rule)

    def __call__(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        return P + self.epsilon * self.displacement(P)

    @property
    def has_analytic_jacobian(self) -> bool:
        return (self.rule.algorithm is Algorithm.MWU
                or self.rule.regularizer is Regularizer.ENTROPIC)

    def jacobian(self, P, fd_step: float = DEFAULT_FD_STEP) -> np.ndarray:
        """Analytic Jacobian when available, central differences otherwise."""
        if self.has_analytic_jacobian:
            return mwu_jacobian(self.game, P)
        return numerical_jacobian(self, P, fd_step)


# --------------------------------------------------------------------------
# Jacobians


def mwu_jacobian(game, p) -> np.ndarray:
    """dU^i_j / dp_kl = x_kl (U^{ik}_{jl} - U^i_j) for k != i; zero diagonal blocks.

    Accepts a flat ``(..., d)`` array or per-player vectors; returns ``(..., d, d)``.
    """
    P = _flat_point(game, p)
    kernel = _Kernel(game, UpdateRule(Algorithm.MWU, 1.0))
    xs = kernel.primal_parts(P)
    U = game.payoff_vectors(xs)
    d = P.shape[-1]
    J = np.zeros(P.shape[:-1] + (d, d))
    sl = kernel.slices
    N = len(sl)
    for i in range(N):
        for k in range(N):
            if k == i:
                continue
            block = xs[k][..., None, :] * (game.pair_payoffs(xs, i, k) - U[i][..., :, None])
            J[..., sl[i], sl[k]] = block
    return J


def numerical_jacobian(gmap, p, fd_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of the displacement field F, shape ``(..., d, d)``.

    ``gmap`` is a GradualMap or any callable returning F for flat ``(..., d)`` input.
    """
    if not fd_step > 0:
        raise ValueError("fd_step: must be positive")
    field_fn = gmap.displacement if isinstance(gmap, GradualMap) else gmap
    if isinstance(gmap, GradualMap):
        P = _flat_point(gmap.game, p)
    else:
        P = np.asarray(p, dtype=float)
    d = P.shape[-1]
    shifts = fd_step * np.eye(d)
    plus = field_fn(P[..., None, :] + shifts)     # (..., b, a)
    minus = field_fn(P[..., None, :] - shifts)
    return np.swapaxes(plus - minus, -1, -2) / (2.0 * fd_step)


# --------------------------------------------------------------------------
# the volume integrand


def volume_integrand(gmap: GradualMap, p, epsilon: float | None = None,
                     fd_step: float = DEFAULT_FD_STEP) -> float | np.ndarray:
    """det(I + eps J(p)) by LU with partial pivoting."""
    if epsilon is not None and epsilon != gmap.epsilon:
        gmap = gmap.with_epsilon(epsilon)
    J = gmap.jacobian(_flat_point(gmap.game, p), fd_step)
    d = J.shape[-1]
    det = np.linalg.det(np.eye(d) + gmap.epsilon * J)
    return float(det) if np.ndim(det) == 0 else det


@dataclass(frozen=True)
class CoefficientFit:
    value: float                 # extrapolated eps -> 0 limit of (det - 1) / eps^2
    converged: bool
    epsilons: tuple[float, ...]
    quotients: tuple[float, ...]  # (det - 1) / eps^2 along the ladder
    orders: tuple[float, ...]     # observed residual orders between successive rungs


def extract_c_coefficient(gmap: GradualMap, p, eps_ladder,
                          fd_step: float = DEFAULT_FD_STEP, floor: float = 1e-13) -> CoefficientFit:
    """Polynomial extrapolation of (det(I + eps J) - 1) / eps^2 to eps = 0.

    The ladder is flagged non-convergent when the residual |det - 1 - c eps^2|
    does not shrink like eps^2..eps^4 between rungs (a factor in [4, 16] per
    halving, with 1% slack). Residuals below ``floor`` count as converged.
    """
    eps = np.asarray(sorted((float(e) for e in eps_ladder), reverse=True))
    if len(eps) < 3 or np.any(eps <= 0) or len(set(eps)) != len(eps):
        raise ValueError("eps_ladder: need at least 3 distinct positive values")
    P = _flat_point(gmap.game, p)
    dets = np.array([volume_integrand(gmap, P, e, fd_step) for e in eps])
    q = (dets - 1.0) / eps**2
    degree = min(2, len(eps) - 1)
    coeffs = np.polyfit(eps, q, degree)
    value = float(coeffs[-1])
    residual = np.abs(dets - 1.0 - value * eps**2)
    orders, converged = [], True
    for a in range(len(eps) - 1):
        if residual[a] <= floor and residual[a + 1] <= floor:
            orders.append(float("nan"))
            continue
        if residual[a + 1] == 0.0:
            orders.append(float("inf"))
            converged = False
            continue
        order = math.log(residual[a] / residual[a + 1]) / math.log(eps[a] / eps[a + 1])
        orders.append(order)
        lo, hi = math.log(4 * 0.99, 2), math.log(16 * 1.01, 2)
        if not lo <= order <= hi:
            converged = False
    return CoefficientFit(value, converged, tuple(eps.tolist()), tuple(q.tolist()), tuple(orders))


# --------------------------------------------------------------------------
# log-volume ledger


@dataclass
class VolumeLedger:
    log_det: np.ndarray        # (T,) log det(I + eps J(p^t))
    cumulative: np.ndarray     # (T + 1,) cumulative[t] = start + sum_{tau < t} log_det[tau]
    region_valid: np.ndarray   # (T,) whether p^t lies in S^delta
    exit_time: int | None
    final_point: np.ndarray    # p^T, flat, for resuming
    algorithm: str = ""

    def in_region_window(self) -> int:
        """Number of steps before the first exit."""
        return len(self.log_det) if self.exit_time is None else min(self.exit_time, len(self.log_det))


def _log_dets(gmap: GradualMap, points: np.ndarray, fd_step: float) -> np.ndarray:
    d = points.shape[-1]
    out = np.empty(len(points))
    eye = np.eye(d)
    for s in range(0, len(points), JACOBIAN_CHUNK):
        chunk = points[s:s + JACOBIAN_CHUNK]
        J = gmap.jacobian(chunk, fd_step)
        sign, logabs = np.linalg.slogdet(eye + gmap.epsilon * J)
        out[s:s + len(chunk)] = np.where(sign > 0, logabs, np.nan)
    return out


def accumulate_log_volume(game, p0, rule: UpdateRule, steps: int, region: RegionSpec | None,
                          start_cumulative: float = 0.0,
                          fd_step: float = DEFAULT_FD_STEP) -> VolumeLedger:
    """Sum log det(I + eps J) along the one-step trajectory from ``p0``.

    Resuming from ``final_point`` with ``start_cumulative`` set to the last
    cumulative value reproduces a longer run bitwise.
    """
    gmap = GradualMap(game, rule)
    record = run_trajectory(game, p0, gmap.rule, steps, region)
    points = record.points
    log_det = _log_dets(gmap, points[:-1], fd_step)
    cumulative = np.cumsum(np.concatenate([[float(start_cumulative)], log_det]))
    if region is None:
        valid = np.ones(steps, dtype=bool)
    else:
        valid = np.asarray(record.in_region[:-1], dtype=bool).reshape(steps)
    return VolumeLedger(log_det, cumulative, valid, record.exit_time, points[-1].copy(),
                        gmap.rule.algorithm.value)


# --------------------------------------------------------------------------
# divergence of a perturbed ensemble


@dataclass
class DivergenceReport:
    sup_distance: np.ndarray     # (W + 1,) max dual distance to the reference, t = 0..W
    window_end: int              # first step with a member outside S^delta (or steps + 1)
    fit_start: int
    fitted_gamma: float
    lambda_intercept: float      # exp(intercept) / ball_radius
    predicted_gamma: float
    cbar_estimate: float
    epsilon: float
    dimension: int
    ball_radius: float
    details: dict = field(default_factory=dict)


def sphere_directions(ensemble_size: int, dimension: int, seed: int) -> np.ndarray:
    """Seeded unit vectors, uniform on the sphere."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((ensemble_size, dimension))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def ensemble_divergence(game, p0, rule: UpdateRule, steps: int, region: RegionSpec,
                        ball_radius: float, ensemble_size: int, seed: int = 0,
                        cbar: float | None = None, transient: float = 0.1,
                        cbar_samples: int = 100_000) -> DivergenceReport:
    """Evolve a reference point and ``ensemble_size`` points on a sphere around it.

    Stepping stops at the first step where any trajectory leaves S^delta; the
    growth rate is the OLS slope of log sup-distance over the in-region window
    after discarding the first ``transient`` fraction.
    """
    if not ball_radius > 0:
        raise ValueError("ball_radius: must be positive")
    if ensemble_size < 2:
        raise ValueError("ensemble_size: need at least 2 members")
    if steps < 0:
        raise ValueError("steps: must be nonnegative")
    region.validate(game.strategy_counts)
    one_step = _one_step_rule(rule)
    P0 = _flat_point(game, p0)
    d = P0.size
    starts = np.vstack([P0, P0 + ball_radius * sphere_directions(ensemble_size, d, seed)])
    stepper = Stepper(game, starts, rule)
    kernel = stepper.kernel
    if not np.all(_region_mask(kernel, starts, region.delta)):
        raise ValueError("ball_radius: the initial ball is not inside the region")

    sup = [float(np.max(np.linalg.norm(starts[1:] - starts[0], axis=1)))]
    window_end = steps + 1
    for t in range(1, steps + 1):
        P = stepper.advance()
        if not _check_finite(P):
            raise TrajectoryAborted(f"dual state overflowed at step {t}", last_finite_index=t - 1)
        diff = P[1:] - P[0]
        sup.append(float(np.sqrt((diff * diff).sum(axis=1).max())))
        if not np.all(_region_mask(kernel, P, region.delta)):
            window_end = t
            break
    sup_distance = np.array(sup)

    fit_start = int(math.floor(transient * window_end))
    ts = np.arange(fit_start, window_end)
    if len(ts) >= 2:
        slope, intercept = np.polyfit(ts, np.log(sup_distance[fit_start:window_end]), 1)
        gamma, lam = float(slope), float(math.exp(intercept) / ball_radius)
    else:
        gamma, lam = float("nan"), float("nan")

    if cbar is None:
        mode = "omwu" if one_step.algorithm is Algorithm.OMWU_SURROGATE else "mwu"
        cbar = cbar_sample(game, region, cbar_samples, seed, mode=mode)
    return DivergenceReport(
        sup_distance=sup_distance, window_end=window_end, fit_start=fit_start,
        fitted_gamma=gamma, lambda_intercept=lam,
        predicted_gamma=lyapunov_exponent(cbar, rule.epsilon, d), cbar_estimate=float(cbar),
        epsilon=rule.epsilon, dimension=d, ball_radius=ball_radius,
        details={"ensemble_size": ensemble_size, "seed": seed, "algorithm": rule.algorithm.value},
    )
