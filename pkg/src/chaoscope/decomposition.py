"""Zero-sum/coordination decomposition, trivial matrices and potential extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game_core import BimatrixGame, GameFormatError, NormalFormGame
from .lp import linprog


@dataclass(frozen=True, eq=False)
class Decomposition:
    Z: np.ndarray  # zero-sum part, game (Z, -Z)
    C: np.ndarray  # coordination part, game (C, C)

    def reconstruct(self) -> BimatrixGame:
        return BimatrixGame(self.Z + self.C, -self.Z + self.C)


@dataclass(frozen=True, eq=False)
class TrivialMatrix:
    """T_jk = u_j + v_k."""

    u: np.ndarray
    v: np.ndarray

    def materialize(self) -> np.ndarray:
        return np.add.outer(self.u, self.v)


@dataclass(frozen=True, eq=False)
class ChebyshevFit:
    """Best L-infinity approximation of a matrix by a trivial matrix g_j + h_k."""

    r: float
    g: np.ndarray
    h: np.ndarray

    def residual(self, K) -> np.ndarray:
        return np.asarray(K, dtype=float) - np.add.outer(self.g, self.h)


def decompose(game: BimatrixGame) -> Decomposition:
    return Decomposition(Z=(game.A - game.B) / 2.0, C=(game.A + game.B) / 2.0)


def quadruple_combinations(K) -> np.ndarray:
    """Q[j, j', k, k'] = K_jk + K_j'k' - K_jk' - K_j'k."""
    K = np.asarray(K, dtype=float)
    return (K[:, None, :, None] + K[None, :, None, :]
            - K[:, None, None, :] - K[None, :, :, None])


def is_trivial(K, tol: float = 1e-12) -> bool:
    """Whether K = u_j + v_k up to ``tol`` in every 2x2 interaction contrast."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    K = np.asarray(K, dtype=float)
    contrast = K - K[:, :1] - K[:1, :] + K[0, 0]
    return bool(np.all(np.abs(contrast) <= tol))


def chebyshev_fit(K) -> ChebyshevFit:
    """Solve min r s.t. -r <= K_jk - g_j - h_k <= r, with g_0 pinned to 0.

    Variables are laid out as [r, g_1+..., g_1-..., h+, h-], all nonnegative.
    """
    K = np.asarray(K, dtype=float)
    if not np.all(np.isfinite(K)):
        raise ValueError("K must be finite")
    n, m = K.shape
    ng = n - 1
    nvar = 1 + 2 * ng + 2 * m
    rows, rhs = [], []
    for j in range(n):
        for k in range(m):
            coef = np.zeros(nvar)
            if j > 0:
                coef[1 + (j - 1)] = 1.0
                coef[1 + ng + (j - 1)] = -1.0
            coef[1 + 2 * ng + k] = 1.0
            coef[1 + 2 * ng + m + k] = -1.0
            # K - g - h <= r   ->  -r - (g + h) <= -K
            upper = -coef.copy()
            upper[0] = -1.0
            rows.append(upper)
            rhs.append(-K[j, k])
            # -(K - g - h) <= r  ->  -r + (g + h) <= K
            lower = coef.copy()
            lower[0] = -1.0
            rows.append(lower)
            rhs.append(K[j, k])
    c = np.zeros(nvar)
    c[0] = 1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs))
    x = res.x
    g = np.concatenate([[0.0], x[1:1 + ng] - x[1 + ng:1 + 2 * ng]])
    h = x[1 + 2 * ng:1 + 2 * ng + m] - x[1 + 2 * ng + m:]
    # report the attained radius of the returned witness, which equals the LP optimum
    r = float(np.max(np.abs(K - np.add.outer(g, h))))
    return ChebyshevFit(r=r, g=g, h=h)


def l2_trivial_projection(K) -> tuple[TrivialMatrix, np.ndarray, float]:
    """Frobenius-orthogonal projection of K onto the trivial matrices.

    Returns the projection, the residual K - projection, and the residual norm.
    """
    K = np.asarray(K, dtype=float)
    grand = K.mean()
    u = K.mean(axis=1) - grand
    v = K.mean(axis=0)
    T = TrivialMatrix(u, v)
    residual = K - T.materialize()
    return T, residual, float(np.linalg.norm(residual))


def is_bimatrix_potential(game: BimatrixGame, tol: float = 1e-9) -> bool:
    """Exact potential games are exactly those whose zero-sum part is trivial."""
    return is_trivial(game.A - game.B, tol)


def extract_bimatrix_potential(game: BimatrixGame, tol: float = 1e-9) -> np.ndarray | None:
    """Potential matrix P with A - P and B - P trivial, or None for non-potential games."""
    if not is_bimatrix_potential(game, tol):
        return None
    A, B = game.A, game.B
    P = A - A[0:1, :] + B[0:1, :]
    if not (is_trivial(A - P, tol) and is_trivial(B - P, tol)):
        return None
    return P


def is_potential(game: NormalFormGame, P, tol: float = 1e-9) -> bool:
    """Whether every u_i - P is independent of player i's own strategy."""
    P = np.asarray(P, dtype=float)
    g = game.to_normal_form()
    if P.shape != g.strategy_counts:
        raise GameFormatError(f"potential: shape {P.shape} != {g.strategy_counts}")
    for i, u in enumerate(g.payoffs):
        d = u - P
        if np.max(np.abs(d - d.mean(axis=i, keepdims=True)), initial=0.0) > tol:
            return False
    return True


def extract_potential(game, tol: float = 1e-9) -> np.ndarray | None:
    """Potential tensor of an N-player exact potential game, or None.

    Built by walking from the all-zeros profile one player at a time, then
    verified against every player's unilateral deviations.
    """
    g = game.to_normal_form()
    N = g.num_players
    P = np.zeros(g.strategy_counts)
    for i in range(N):
        # u_i(s_1..s_i, 0..0) - u_i(s_1..s_{i-1}, 0, 0..0)
        idx_tail = (slice(None),) * (i + 1) + (slice(0, 1),) * (N - i - 1)
        step = g.payoffs[i][idx_tail] - np.take(g.payoffs[i][idx_tail], [0], axis=i)
        P = P + step
    if not is_potential(g, P, tol):
        return None
    return P


def potential_coordination_lift(game, P) -> NormalFormGame:
    """The common-payoff game U^P in which every player receives P(s)."""
    P = np.asarray(P, dtype=float)
    counts = tuple(game.strategy_counts)
    if P.shape != counts:
        raise GameFormatError(f"potential: shape {P.shape} != {counts}")
    return NormalFormGame(tuple(P for _ in counts))
