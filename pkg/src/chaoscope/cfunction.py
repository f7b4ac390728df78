"""The volume-change function C in its bimatrix, graphical and normal-form forms.

All evaluators broadcast over leading batch dimensions of the dual point, so
``c_bimatrix(game, [P, Q])`` with ``P`` of shape ``(S, n)`` returns ``S`` values.
"""

from __future__ import annotations

import itertools

import numpy as np

from .game_core import (
    BimatrixGame,
    GraphicalGame,
    NormalFormGame,
    as_dual_point,
    dual_to_primal,
)


def c_bimatrix_primal(A, B, x, y):
    """C_{(A,B)} evaluated directly at mixed strategies x, y."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Ay = y @ A.T                          # [A y]_j
    BTx = x @ B                           # [B^T x]_k
    dev_a = A - Ay[..., :, None]
    dev_b = B - BTx[..., None, :]
    w = x[..., :, None] * y[..., None, :]
    return -np.sum(w * dev_a * dev_b, axis=(-2, -1))


def c_bimatrix(game: BimatrixGame, p):
    x, y = dual_to_primal(as_dual_point(p, game.strategy_counts))
    return c_bimatrix_primal(game.A, game.B, x, y)


def c_bimatrix_expectation_form(game: BimatrixGame, p):
    """-E[(A_jk - A_j - A_k)(B_jk - B_j - B_k)] + E[A_jk] E[B_jk] over (x(p), y(q))."""
    x, y = dual_to_primal(as_dual_point(p, game.strategy_counts))
    A, B = game.A, game.B
    A_row = (y @ A.T)[..., :, None]       # A_j = [A y]_j
    A_col = (x @ A)[..., None, :]         # A_k = [A^T x]_k
    B_row = (y @ B.T)[..., :, None]
    B_col = (x @ B)[..., None, :]
    w = x[..., :, None] * y[..., None, :]
    cross = np.sum(w * (A - A_row - A_col) * (B - B_row - B_col), axis=(-2, -1))
    EA = np.sum(w * A, axis=(-2, -1))
    EB = np.sum(w * B, axis=(-2, -1))
    return -cross + EA * EB


def c_zero_sum_quadruple(Z, p):
    """C_{(Z,-Z)} as a quarter of the weighted sum of squared 2x2 contrasts.

    O(n^2 m^2); kept as an independent check on the zero-sum case.
    """
    Z = np.asarray(Z, dtype=float)
    x, y = dual_to_primal(as_dual_point(p, Z.shape))
    Q = (Z[:, None, :, None] + Z[None, :, None, :]
         - Z[:, None, None, :] - Z[None, :, :, None])
    w = (x[..., :, None, None, None] * x[..., None, :, None, None]
         * y[..., None, None, :, None] * y[..., None, None, None, :])
    return 0.25 * np.sum(w * Q**2, axis=(-4, -3, -2, -1))


def c_multi(game, p):
    """C_G for an N-player game, summing over player pairs i < k.

    The pair expectations U^{ik} and U^{ki} are computed once per pair; the
    single-player expectations come from the same contraction.
    """
    g = game.to_normal_form() if isinstance(game, BimatrixGame) else game
    counts = g.strategy_counts
    xs = dual_to_primal(as_dual_point(p, counts))
    U = g.payoff_vectors(xs)
    total = 0.0
    for i, k in itertools.combinations(range(g.num_players), 2):
        U_ik = g.pair_payoffs(xs, i, k)               # (..., n_i, n_k)
        U_ki = g.pair_payoffs(xs, k, i)               # (..., n_k, n_i)
        dev_k = np.swapaxes(U_ki, -1, -2) - U[k][..., None, :]   # U^{ki}_{lj} - U^k_l
        dev_i = U_ik - U[i][..., :, None]                        # U^{ik}_{jl} - U^i_j
        w = xs[i][..., :, None] * xs[k][..., None, :]
        total = total - np.sum(w * dev_k * dev_i, axis=(-2, -1))
    return total


def induced_graphical_game(game, p) -> GraphicalGame:
    """The graphical game with H^{ik} = U^{ik}(x(p)); it reproduces C_G at p only."""
    g = game.to_normal_form() if isinstance(game, BimatrixGame) else game
    xs = dual_to_primal(as_dual_point(p, g.strategy_counts))
    if any(np.ndim(x) != 1 for x in xs):
        raise ValueError("induced_graphical_game takes a single dual point, not a batch")
    edges = {(i, k): np.array(g.pair_payoffs(xs, i, k))
             for i, k in itertools.permutations(range(g.num_players), 2)}
    return GraphicalGame(g.strategy_counts, edges)


def c_graphical(h: GraphicalGame, p):
    """Sum of the edge games' bimatrix C values; never expands the profile space."""
    ps = as_dual_point(p, h.strategy_counts)
    xs = dual_to_primal(ps)
    total = 0.0
    for i, k in itertools.combinations(range(h.num_players), 2):
        total = total + c_bimatrix_primal(h.edges[(i, k)], h.edges[(k, i)].T, xs[i], xs[k])
    return total


def c_value(game, p):
    """Dispatch to the natural evaluator for the game's representation."""
    if isinstance(game, BimatrixGame):
        return c_bimatrix(game, p)
    if isinstance(game, GraphicalGame):
        return c_graphical(game, p)
    if isinstance(game, NormalFormGame):
        return c_multi(game, p)
    raise TypeError(f"unsupported game type {type(game).__name__}")
