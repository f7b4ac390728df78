"""Matrix domination, chaos certificates and sampled lower bounds on C over S^delta.

A certificate's ``cbar_lower`` is a proven lower bound on C (MWU) or on -C
(OMWU) over the whole region; sampled values are reported separately and are
never promoted to certificates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cfunction import c_bimatrix_primal, c_value
from .decomposition import (
    chebyshev_fit,
    decompose,
    is_potential,
    l2_trivial_projection,
    quadruple_combinations,
)
from .game_core import BimatrixGame, GraphicalGame, RegionSpec
from .parallel import chunked_map

DOMINATION_TOL = 1e-12
SAMPLE_CHUNK = 20_000


@dataclass(frozen=True)
class DominationReport:
    dominates: bool
    theta_margin: float | None           # max(|dK| - |dL|) over quadruples, when dominating
    witness: tuple[int, int, int, int]   # quadruple attaining the margin
    violation: tuple[int, int, int, int] | None = None   # worst quadruple when not dominating


@dataclass(frozen=True)
class ChaosCertificate:
    kind: str                  # domination | lp | graphical_family | potential_negativity
    algorithm: str             # MWU | OMWU
    region_delta: float
    cbar_lower: float
    lyapunov_exponent: float
    paper_exponent: float | None
    theta: float
    epsilon: float
    dimension: int
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "certified": True,
            "kind": self.kind,
            "algorithm": self.algorithm,
            "region_delta": self.region_delta,
            "cbar_lower": self.cbar_lower,
            "lyapunov_exponent": self.lyapunov_exponent,
            "paper_exponent": self.paper_exponent,
            "theta": self.theta,
            "epsilon": self.epsilon,
            "dimension": self.dimension,
            "details": self.details,
        }


def lyapunov_exponent(cbar: float, epsilon: float, dimension: int) -> float:
    """gamma = cbar eps^2 / (2 d)."""
    return cbar * epsilon**2 / (2.0 * dimension)


def _check_epsilon(epsilon):
    if not epsilon > 0:
        raise ValueError(f"epsilon: must be positive, got {epsilon}")


def _make(kind, algorithm, region, cbar, theta, epsilon, counts, paper_exponent, details):
    d = int(sum(counts))
    return ChaosCertificate(
        kind=kind, algorithm=algorithm, region_delta=float(region.delta),
        cbar_lower=float(cbar), lyapunov_exponent=lyapunov_exponent(cbar, epsilon, d),
        paper_exponent=None if paper_exponent is None else float(paper_exponent),
        theta=float(theta), epsilon=float(epsilon), dimension=d, details=details,
    )


# --------------------------------------------------------------------------
# domination


def check_domination(K, L, tol: float = DOMINATION_TOL) -> DominationReport:
    """Exhaustive quadruple test of |dK| >= |dL| (absolute slack ``tol`` times the scale)."""
    K = np.asarray(K, dtype=float)
    L = np.asarray(L, dtype=float)
    if K.shape != L.shape or K.ndim != 2:
        raise ValueError(f"L: shape {L.shape} does not match K {K.shape}")
    diff = np.abs(quadruple_combinations(K)) - np.abs(quadruple_combinations(L))
    scale = max(1.0, float(np.max(np.abs(K), initial=0.0)), float(np.max(np.abs(L), initial=0.0)))
    best = tuple(int(i) for i in np.unravel_index(np.argmax(diff), diff.shape))
    worst = tuple(int(i) for i in np.unravel_index(np.argmin(diff), diff.shape))
    if diff[worst] >= -tol * scale:
        return DominationReport(True, float(max(diff[best], 0.0)), best)
    return DominationReport(False, None, best, violation=worst)


# --------------------------------------------------------------------------
# bimatrix certificates


def certify_mwu_chaos_domination(game: BimatrixGame, region: RegionSpec,
                                 epsilon: float) -> ChaosCertificate | None:
    """theta-domination of the coordination part by the zero-sum part.

    On S^delta every ordered copy of the witness quadruple carries weight at
    least delta^4 and there are four of them, so C >= theta^2 delta^4.
    """
    _check_epsilon(epsilon)
    region.validate(game.strategy_counts)
    dec = decompose(game)
    report = check_domination(dec.Z, dec.C)
    if not report.dominates or not report.theta_margin > 0:
        return None
    theta, delta = report.theta_margin, region.delta
    n1, n2 = game.strategy_counts
    return _make(
        "domination", "MWU", region, theta**2 * delta**4, theta, epsilon, (n1, n2),
        theta**2 * delta**2 * epsilon**2 / (2 * (n1 + n2)),
        {"witness": list(report.witness)},
    )


def certify_mwu_chaos_lp(game: BimatrixGame, region: RegionSpec,
                         epsilon: float) -> ChaosCertificate | None:
    """(r(Z) delta)^2 > r(C)^2 certifies C >= (r(Z) delta)^2 - r(C)^2 on S^delta."""
    _check_epsilon(epsilon)
    region.validate(game.strategy_counts)
    dec = decompose(game)
    rz = chebyshev_fit(dec.Z).r
    rc = chebyshev_fit(dec.C).r
    delta = region.delta
    cbar = (rz * delta) ** 2 - rc**2
    if not cbar > 0:
        return None
    theta = math.sqrt(cbar) / delta
    n1, n2 = game.strategy_counts
    return _make(
        "lp", "MWU", region, cbar, theta, epsilon, (n1, n2),
        theta**2 * epsilon**2 / (2 * (n1 + n2)),
        {"r_Z": rz, "r_C": rc},
    )


def _edge_bound(edge: BimatrixGame, delta: float):
    """Sound lower bound for one edge game: (bound, theta, method) or None.

    Domination with a positive margin is used first, the LP criterion second;
    an edge that dominates only with margin 0 (e.g. a zero edge) contributes 0.
    """
    dec = decompose(edge)
    report = check_domination(dec.Z, dec.C)
    if report.dominates and report.theta_margin > 0:
        theta = report.theta_margin
        return theta**2 * delta**4, theta, "domination"
    rz = chebyshev_fit(dec.Z).r
    rc = chebyshev_fit(dec.C).r
    cbar = (rz * delta) ** 2 - rc**2
    if cbar > 0:
        return cbar, math.sqrt(cbar) / delta, "lp"
    if report.dominates:
        return 0.0, 0.0, "domination"
    return None


def certify_graphical_family(h: GraphicalGame, region: RegionSpec,
                             epsilon: float) -> ChaosCertificate | None:
    """Sum of per-edge bounds; every edge must carry a nonnegative certified bound."""
    _check_epsilon(epsilon)
    region.validate(h.strategy_counts)
    delta = region.delta
    total, thetas, per_edge = 0.0, [], []
    for i, k in itertools.combinations(range(h.num_players), 2):
        bound = _edge_bound(h.edge_game(i, k), delta)
        if bound is None:
            return None
        cbar, theta, method = bound
        total += cbar
        thetas.append(theta)
        per_edge.append({"i": i, "k": k, "cbar_lower": cbar, "theta": theta, "method": method})
    if not total > 0:
        return None
    N = h.num_players
    d = sum(h.strategy_counts)
    theta_min = min(thetas)
    return _make(
        "graphical_family", "MWU", region, total, theta_min, epsilon, h.strategy_counts,
        N * (N - 1) * theta_min**2 * delta**2 * epsilon**2 / (4 * d),
        {"edges": per_edge},
    )


# --------------------------------------------------------------------------
# potential games under OMWU


def complement_basis(n: int, m: int) -> np.ndarray:
    """Orthonormal basis of the n x m matrices orthogonal to every trivial matrix.

    Returns shape ((n-1)(m-1), n, m): outer products of orthonormal contrasts.
    """
    def contrasts(size):
        # orthonormal basis of the vectors summing to zero
        q, _ = np.linalg.qr(np.column_stack([np.ones(size), np.eye(size)[:, : size - 1]]))
        return q[:, 1:size].T

    a, b = contrasts(n), contrasts(m)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((0, n, m))
    return np.einsum("pj,ql->pqjl", a, b).reshape(-1, n, m)


def projected_matrices(P, i: int, k: int) -> np.ndarray:
    """P restricted to each pure profile of the players other than i and k.

    Shape ``(#profiles, n_i, n_k)``.
    """
    P = np.asarray(P, dtype=float)
    others = [r for r in range(P.ndim) if r not in (i, k)]
    moved = np.transpose(P, others + [i, k])
    return moved.reshape(-1, P.shape[i], P.shape[k])


def _pair_analysis(P, i, k, tol):
    mats = projected_matrices(P, i, k)
    residuals = np.array([l2_trivial_projection(M)[1] for M in mats])
    scale = max(1.0, float(np.max(np.abs(P))))
    constant = bool(np.max(np.abs(residuals - residuals[0]), initial=0.0) <= tol * scale)
    # one-signed search: a unit direction orthogonal to the trivial space on which
    # every projected matrix has coefficients of one sign
    n, m = mats.shape[1:]
    directions = list(complement_basis(n, m))
    for R in list(residuals) + [residuals.mean(axis=0)]:
        norm = np.linalg.norm(R)
        if norm > tol * scale:
            directions.append(R / norm)
    theta = 0.0
    for e in directions:
        coef = np.einsum("sjl,jl->s", residuals, e)
        if np.all(coef >= -tol * scale) or np.all(coef <= tol * scale):
            theta = max(theta, float(np.max(np.abs(coef))))
    return residuals, constant, theta


def certify_potential_negativity(game, P, region: RegionSpec, epsilon: float,
                                 tol: float = 1e-9) -> ChaosCertificate | None:
    """Certify C <= -cbar on S^delta for a potential game (OMWU expands volume there).

    Pairwise case: when every pair's projected matrices share one residual R
    (P is a sum of pairwise terms), C <= -delta^2 sum ||R||_F^2. Otherwise a
    single pair with a one-signed complement direction of size theta gives
    C <= -theta^2 delta^(2N-2).
    """
    _check_epsilon(epsilon)
    g = game.to_normal_form()
    P = np.asarray(P, dtype=float)
    if not is_potential(g, P, tol):
        raise ValueError("P: not an exact potential for this game")
    counts = g.strategy_counts
    region.validate(counts)
    N, delta = g.num_players, region.delta
    analyses = {}
    for i, k in itertools.combinations(range(N), 2):
        analyses[(i, k)] = _pair_analysis(P, i, k, tol)

    if all(a[1] for a in analyses.values()):
        sq = {pair: float(np.sum(a[0][0] ** 2)) for pair, a in analyses.items()}
        total = sum(sq.values())
        if total > tol:
            theta = math.sqrt(total)
            return _make(
                "potential_negativity", "OMWU", region, delta**2 * total, theta, epsilon,
                counts, None,
                {"case": "pairwise",
                 "pairs": [{"i": i, "k": k, "residual_sq": v} for (i, k), v in sq.items()]},
            )
        return None

    (i, k), best = max(analyses.items(), key=lambda kv: kv[1][2])
    theta = best[2]
    if not theta > tol:
        return None
    cbar = theta**2 * delta ** (2 * N - 2)
    return _make(
        "potential_negativity", "OMWU", region, cbar, theta, epsilon, counts, None,
        {"case": "one_signed_direction", "pair": [i, k]},
    )


# --------------------------------------------------------------------------
# sampling S^delta


def sample_truncated_simplex(n: int, delta: float, size: int, rng) -> np.ndarray:
    """Uniform samples from {x in simplex : x_j >= delta}, shape (size, n)."""
    return delta + (1.0 - n * delta) * rng.dirichlet(np.ones(n), size=size)


def truncated_simplex_vertices(n: int, delta: float) -> np.ndarray:
    """The n corners: delta everywhere except 1 - (n - 1) delta at one strategy."""
    V = np.full((n, n), delta)
    np.fill_diagonal(V, 1.0 - (n - 1) * delta)
    return V


def truncated_simplex_grid(n: int, delta: float, resolution: int) -> np.ndarray:
    """delta + (1 - n delta) k / resolution over all compositions k of ``resolution``."""
    rows = []
    for cuts in itertools.combinations(range(resolution + n - 1), n - 1):
        bounds = (-1,) + cuts + (resolution + n - 1,)
        rows.append([bounds[j + 1] - bounds[j] - 1 for j in range(n)])
    return delta + (1.0 - n * delta) * np.array(rows, dtype=float) / resolution


def _product_points(per_player):
    """Cartesian product of per-player point sets as per-player stacked arrays."""
    sizes = [len(v) for v in per_player]
    idx = np.indices(sizes).reshape(len(sizes), -1)
    return [v[ix] for v, ix in zip(per_player, idx)]


def region_sample_points(counts, region: RegionSpec, num_samples: int = 100_000, seed: int = 0,
                         method: str = "random", grid_resolution: int = 10,
                         include_vertices: bool = True, max_points: int = 2_000_000):
    """Mixed profiles in S^delta as per-player arrays of shape (S, n_i)."""
    counts = tuple(int(n) for n in counts)
    region.validate(counts)
    delta = region.delta
    if method == "random":
        if num_samples <= 0:
            raise ValueError("num_samples: must be positive")
        rng = np.random.default_rng(seed)
        xs = [sample_truncated_simplex(n, delta, num_samples, rng) for n in counts]
    elif method == "grid":
        if grid_resolution < 1:
            raise ValueError("grid_resolution: must be positive")
        grids = [truncated_simplex_grid(n, delta, grid_resolution) for n in counts]
        if math.prod(len(g) for g in grids) > max_points:
            raise ValueError("grid_resolution: grid exceeds the point budget")
        xs = _product_points(grids)
    else:
        raise ValueError(f"method: expected 'random' or 'grid', got {method!r}")
    if include_vertices:
        corners = [truncated_simplex_vertices(n, delta) for n in counts]
        if math.prod(counts) <= max_points:
            xs = [np.concatenate([a, b]) for a, b in zip(xs, _product_points(corners))]
    return xs


def evaluate_c(game, xs, chunk: int = SAMPLE_CHUNK) -> np.ndarray:
    """C at the dual preimages log(x) of stacked mixed profiles, chunked across threads."""
    S = len(xs[0])
    starts = list(range(0, S, chunk))

    def run(s):
        return np.asarray(c_value(game, [np.log(x[s:s + chunk]) for x in xs]), dtype=float)

    return np.concatenate(chunked_map(run, starts)) if S else np.zeros(0)


def cbar_sample(game, region: RegionSpec, num_samples: int = 100_000, seed: int = 0,
                mode: str = "mwu", method: str = "random", grid_resolution: int = 10,
                include_vertices: bool = True) -> float:
    """Empirical min of C (mode 'mwu') or -C (mode 'omwu') over sampled points of S^delta.

    An estimate, not a bound. Sampling is uniform on the primal polytope;
    the polytope's corners are added by default because the minimum of C
    typically sits there.
    """
    if mode not in ("mwu", "omwu"):
        raise ValueError(f"mode: expected 'mwu' or 'omwu', got {mode!r}")
    xs = region_sample_points(game.strategy_counts, region, num_samples, seed, method,
                              grid_resolution, include_vertices)
    values = evaluate_c(game, xs)
    return float(np.min(values if mode == "mwu" else -values))


# --------------------------------------------------------------------------
# converse search when domination fails


def negative_point_search(game: BimatrixGame, eta_start: float = 0.1, eta_min: float = 1e-6):
    """Look for a dual point with C < 0 built around the worst non-dominated quadruple.

    Mass (1 - eta)/2 goes on each of the quadruple's rows and columns, the
    rest is spread uniformly; eta halves from ``eta_start`` down to ``eta_min``.
    Returns (dual point, C) for the first negative value found, else None.
    """
    dec = decompose(game)
    report = check_domination(dec.Z, dec.C)
    if report.dominates:
        return None
    j, jp, k, kp = report.violation
    n, m = game.strategy_counts

    def profile(first, second, size, eta):
        x = np.full(size, eta / (size - 2)) if size > 2 else np.zeros(size)
        share = (1.0 - eta) / 2 if size > 2 else 0.5
        x[first] = share
        x[second] = share
        return x

    eta = eta_start
    while eta >= eta_min:
        x = profile(j, jp, n, eta)
        y = profile(k, kp, m, eta)
        c = float(c_bimatrix_primal(game.A, game.B, x, y))
        if c < 0:
            return [np.log(x), np.log(y)], c
        eta /= 2
    return None


__all__ = [
    "ChaosCertificate", "DominationReport", "cbar_sample", "certify_graphical_family",
    "certify_mwu_chaos_domination", "certify_mwu_chaos_lp", "certify_potential_negativity",
    "check_domination", "complement_basis", "evaluate_c", "lyapunov_exponent",
    "negative_point_search", "projected_matrices", "region_sample_points",
    "sample_truncated_simplex", "truncated_simplex_grid", "truncated_simplex_vertices",
]
