"""Game representations, expected payoffs, the dual-to-primal map and S^delta.

Dual points and mixed profiles are sequences of per-player vectors. Every
numeric routine here also accepts per-player arrays with leading batch
dimensions, shape ``(..., n_i)``, so that ensembles and sample clouds can be
evaluated in one call.
"""

from __future__ import annotations

import itertools
import json
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

SIMPLEX_TOL = 1e-12
DEFAULT_PROFILE_BUDGET = 10**7


class GameFormatError(ValueError):
    """Raised for malformed games, dual points or game files."""


class BudgetExceededError(ValueError):
    """Raised when a dense expansion would exceed the profile-space budget."""


def _as_matrix(name: str, value) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim != 2:
        raise GameFormatError(f"{name}: expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GameFormatError(f"{name}: entries must be finite")
    arr.setflags(write=False)
    return arr


# --------------------------------------------------------------------------
# games


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    """Dense N-player game; ``payoffs[i][s]`` is u_i(s)."""

    payoffs: tuple[np.ndarray, ...]

    def __post_init__(self):
        tensors = tuple(np.array(t, dtype=float) for t in self.payoffs)
        if len(tensors) < 2:
            raise GameFormatError(f"payoffs: need at least 2 players, got {len(tensors)}")
        shape = tensors[0].shape
        if len(shape) != len(tensors):
            raise GameFormatError(
                f"payoffs[0]: tensor rank {len(shape)} does not match {len(tensors)} players"
            )
        for i, t in enumerate(tensors):
            if t.shape != shape:
                raise GameFormatError(f"payoffs[{i}]: shape {t.shape} != {shape}")
            if not np.all(np.isfinite(t)):
                raise GameFormatError(f"payoffs[{i}]: entries must be finite")
            if any(n < 1 for n in t.shape):
                raise GameFormatError(f"payoffs[{i}]: every strategy count must be >= 1")
            t.setflags(write=False)
        object.__setattr__(self, "payoffs", tensors)

    @property
    def num_players(self) -> int:
        return len(self.payoffs)

    @property
    def strategy_counts(self) -> tuple[int, ...]:
        return tuple(self.payoffs[0].shape)

    def scale(self) -> float:
        return max(float(np.max(np.abs(t))) for t in self.payoffs)

    def payoff_vectors(self, xs: Sequence[np.ndarray]) -> list[np.ndarray]:
        """U^i_j(x) for every player, each of shape ``(..., n_i)``."""
        return [_contract(self.payoffs[i], xs, (i,)) for i in range(self.num_players)]

    def pair_payoffs(self, xs: Sequence[np.ndarray], i: int, k: int) -> np.ndarray:
        """U^{ik}_{jl}(x): player i's payoff with i on j and k on l; shape ``(..., n_i, n_k)``."""
        return _contract(self.payoffs[i], xs, (i, k))

    def to_normal_form(self) -> "NormalFormGame":
        return self


@dataclass(frozen=True, eq=False)
class BimatrixGame:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = _as_matrix("A", self.A)
        B = _as_matrix("B", self.B)
        if A.shape != B.shape:
            raise GameFormatError(f"B: shape {B.shape} does not match A {A.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    num_players = 2

    @property
    def strategy_counts(self) -> tuple[int, int]:
        return self.A.shape

    def scale(self) -> float:
        return max(float(np.max(np.abs(self.A))), float(np.max(np.abs(self.B))))

    def payoff_vectors(self, xs):
        x, y = xs
        return [y @ self.A.T, x @ self.B]

    def pair_payoffs(self, xs, i, k):
        if (i, k) == (0, 1):
            return np.broadcast_to(self.A, np.shape(xs[0])[:-1] + self.A.shape)
        if (i, k) == (1, 0):
            return np.broadcast_to(self.B.T, np.shape(xs[0])[:-1] + self.B.T.shape)
        raise IndexError(f"no player pair ({i}, {k}) in a bimatrix game")

    def to_normal_form(self) -> NormalFormGame:
        return NormalFormGame((self.A, self.B))


@dataclass(frozen=True, eq=False)
class GraphicalGame:
    """Pairwise game: u_i(s) = sum_{k != i} H^{ik}[s_i, s_k].

    ``edges`` maps ordered pairs ``(i, k)`` to H^{ik}; missing pairs are zero.
    """

    strategy_counts: tuple[int, ...]
    edges: Mapping[tuple[int, int], np.ndarray]

    def __post_init__(self):
        counts = tuple(int(n) for n in self.strategy_counts)
        if len(counts) < 2 or any(n < 1 for n in counts):
            raise GameFormatError(f"strategy_counts: invalid {counts}")
        N = len(counts)
        full = {}
        for i, k in itertools.permutations(range(N), 2):
            full[(i, k)] = np.zeros((counts[i], counts[k]))
        for key, H in dict(self.edges).items():
            i, k = key
            if not (0 <= i < N and 0 <= k < N) or i == k:
                raise GameFormatError(f"edges: invalid player pair {key}")
            H = np.array(H, dtype=float)
            if H.shape != (counts[i], counts[k]):
                raise GameFormatError(
                    f"edges[{i},{k}]: shape {H.shape} != ({counts[i]}, {counts[k]})"
                )
            if not np.all(np.isfinite(H)):
                raise GameFormatError(f"edges[{i},{k}]: entries must be finite")
            full[(i, k)] = H
        for H in full.values():
            H.setflags(write=False)
        object.__setattr__(self, "strategy_counts", counts)
        object.__setattr__(self, "edges", full)

    @property
    def num_players(self) -> int:
        return len(self.strategy_counts)

    def scale(self) -> float:
        return max((float(np.max(np.abs(H))) for H in self.edges.values()), default=0.0)

    def edge_game(self, i: int, k: int) -> BimatrixGame:
        """The bimatrix edge game (H^{ik}, (H^{ki})^T) between players i and k."""
        return BimatrixGame(self.edges[(i, k)], self.edges[(k, i)].T)

    def payoff_vectors(self, xs):
        out = []
        for i in range(self.num_players):
            u = 0.0
            for k in range(self.num_players):
                if k != i:
                    u = u + np.asarray(xs[k]) @ self.edges[(i, k)].T
            out.append(np.asarray(u, dtype=float))
        return out

    def pair_payoffs(self, xs, i, k):
        rest = 0.0
        for r in range(self.num_players):
            if r not in (i, k):
                rest = rest + np.asarray(xs[r]) @ self.edges[(i, r)].T
        return self.edges[(i, k)] + np.asarray(rest)[..., :, None]

    def to_normal_form(self, budget: int = DEFAULT_PROFILE_BUDGET) -> NormalFormGame:
        return graphical_to_normal_form(self, budget)


Game = NormalFormGame | BimatrixGame | GraphicalGame


# --------------------------------------------------------------------------
# dual and primal points


def split(vec: np.ndarray, counts: Sequence[int]) -> list[np.ndarray]:
    """Split a flat ``(..., d)`` array into per-player ``(..., n_i)`` views."""
    vec = np.asarray(vec, dtype=float)
    if vec.shape[-1] != sum(counts):
        raise GameFormatError(
            f"dual point: length {vec.shape[-1]} != sum of strategy counts {sum(counts)}"
        )
    return np.split(vec, np.cumsum(counts)[:-1], axis=-1)


def flatten(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.asarray(p, dtype=float) for p in parts], axis=-1)


def as_dual_point(p, counts: Sequence[int]) -> list[np.ndarray]:
    """Coerce a dual point into checked per-player arrays.

    An ndarray is read as a flat ``(..., d)`` vector; any other sequence as
    one vector per player.
    """
    if isinstance(p, np.ndarray):
        return _check_parts(split(p, counts), counts)
    return _check_parts([np.asarray(v, dtype=float) for v in p], counts)


def _check_parts(parts, counts):
    if len(parts) != len(counts):
        raise GameFormatError(f"dual point: {len(parts)} players, game has {len(counts)}")
    for i, (v, n) in enumerate(zip(parts, counts)):
        if v.shape[-1:] != (n,):
            raise GameFormatError(f"dual point[{i}]: length {v.shape[-1:]} != {n}")
        if not np.all(np.isfinite(v)):
            raise GameFormatError(f"dual point[{i}]: entries must be finite")
    return parts


def softmax(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    z = np.exp(p - np.max(p, axis=-1, keepdims=True))
    return z / np.sum(z, axis=-1, keepdims=True)


def dual_to_primal(p: Sequence[np.ndarray]) -> list[np.ndarray]:
    """x_ij = exp(p_ij) / sum_l exp(p_il), per player, with max-subtraction."""
    return [softmax(v) for v in p]


def check_mixed_profile(xs: Sequence[np.ndarray], counts: Sequence[int] | None = None,
                        tol: float = SIMPLEX_TOL) -> list[np.ndarray]:
    xs = [np.asarray(v, dtype=float) for v in xs]
    if counts is not None and [v.shape[-1] for v in xs] != list(counts):
        raise GameFormatError(f"mixed profile: lengths do not match strategy counts {tuple(counts)}")
    for i, v in enumerate(xs):
        if np.any(v < -tol) or np.any(np.abs(v.sum(axis=-1) - 1.0) > tol):
            raise GameFormatError(f"mixed profile[{i}]: not in the simplex")
    return xs


def _contract(tensor: np.ndarray, xs: Sequence[np.ndarray], keep: tuple[int, ...]) -> np.ndarray:
    """Contract every axis of ``tensor`` not in ``keep`` against the matching mixture."""
    N = tensor.ndim
    letters = string.ascii_lowercase
    operands = [tensor]
    subs = [letters[:N]]
    for a in range(N):
        if a not in keep:
            operands.append(np.asarray(xs[a], dtype=float))
            subs.append("..." + letters[a])
    out = "..." + "".join(letters[a] for a in keep)
    return np.einsum(",".join(subs) + "->" + out, *operands, optimize=len(operands) > 3)


def expected_payoff(game: Game, x: Sequence[np.ndarray],
                    focal_players: Sequence[tuple[int, int]]) -> float:
    """U^{i_1..i_g}_{j_1..j_g}(x): payoff to the first focal player with the
    focal players pinned and everyone else mixing independently per ``x``."""
    g = game.to_normal_form()
    counts = g.strategy_counts
    xs = check_mixed_profile(x, counts)
    if not focal_players:
        raise ValueError("focal_players: at least one (player, strategy) pair is required")
    seen = set()
    index: list = [None] * g.num_players
    for player, strategy in focal_players:
        if not 0 <= player < g.num_players:
            raise ValueError(f"focal_players: player {player} out of range")
        if player in seen:
            raise ValueError(f"focal_players: duplicate player {player}")
        if not 0 <= strategy < counts[player]:
            raise ValueError(f"focal_players: strategy {strategy} out of range for player {player}")
        seen.add(player)
        index[player] = strategy
    tensor = g.payoffs[focal_players[0][0]]
    free = [a for a in range(g.num_players) if index[a] is None]
    sub = tensor[tuple(slice(None) if s is None else s for s in index)]
    for xa in reversed([xs[a] for a in free]):
        sub = sub @ xa
    return float(sub)


def graphical_to_normal_form(h: GraphicalGame, budget: int = DEFAULT_PROFILE_BUDGET) -> NormalFormGame:
    counts = h.strategy_counts
    size = int(np.prod(counts))
    if size * h.num_players > budget:
        raise BudgetExceededError(
            f"graphical game expands to {size * h.num_players} entries, budget {budget}"
        )
    N = h.num_players
    tensors = []
    for i in range(N):
        t = np.zeros(counts)
        for k in range(N):
            if k == i:
                continue
            shape = [1] * N
            shape[i], shape[k] = counts[i], counts[k]
            H = h.edges[(i, k)] if i < k else h.edges[(i, k)].T
            t = t + H.reshape(shape)
        tensors.append(t)
    return NormalFormGame(tuple(tensors))


# --------------------------------------------------------------------------
# the S^delta region


@dataclass(frozen=True)
class RegionSpec:
    """S^delta: dual points whose primal image puts at least ``delta`` on every strategy."""

    delta: float

    def validate(self, counts: Sequence[int]) -> None:
        if not 0 < self.delta <= 1.0 / max(counts) + 1e-15:
            raise ValueError(
                f"delta: must lie in (0, 1/{max(counts)}], got {self.delta}"
            )


def in_region(p: Sequence[np.ndarray], region: RegionSpec) -> bool | np.ndarray:
    """True iff x_ij(p) >= delta for every player and strategy (batched over leading dims)."""
    ok = None
    for v in p:
        inside = np.all(softmax(v) >= region.delta, axis=-1)
        ok = inside if ok is None else ok & inside
    return bool(ok) if np.ndim(ok) == 0 else ok


def uniform_dual_point(counts: Sequence[int]) -> list[np.ndarray]:
    return [np.zeros(n) for n in counts]


# --------------------------------------------------------------------------
# JSON game files


def game_from_dict(data: dict) -> Game:
    if not isinstance(data, dict) or "kind" not in data:
        raise GameFormatError("kind: missing game kind")
    kind = data["kind"]
    try:
        if kind == "bimatrix":
            return BimatrixGame(data["A"], data["B"])
        if kind == "normal_form":
            counts = tuple(data["strategy_counts"])
            tensors = []
            for i, t in enumerate(data["payoffs"]):
                arr = np.array(t, dtype=float)
                if arr.shape != counts:
                    raise GameFormatError(f"payoffs[{i}]: shape {arr.shape} != {counts}")
                tensors.append(arr)
            if len(tensors) != len(counts):
                raise GameFormatError(
                    f"payoffs: {len(tensors)} tensors for {len(counts)} players"
                )
            return NormalFormGame(tuple(tensors))
        if kind == "graphical":
            edges = {}
            for e in data.get("edges", []):
                i, k = int(e["i"]), int(e["k"])
                if "H_ik" in e:
                    edges[(i, k)] = e["H_ik"]
                if "H_ki" in e:
                    edges[(k, i)] = e["H_ki"]
            return GraphicalGame(tuple(data["strategy_counts"]), edges)
    except KeyError as exc:
        raise GameFormatError(f"{exc.args[0]}: missing field for kind {kind!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GameFormatError):
            raise
        raise GameFormatError(f"{kind}: {exc}") from None
    raise GameFormatError(f"kind: unknown game kind {kind!r}")


def game_to_dict(game: Game) -> dict:
    if isinstance(game, BimatrixGame):
        return {"kind": "bimatrix", "A": game.A.tolist(), "B": game.B.tolist()}
    if isinstance(game, GraphicalGame):
        edges = []
        for i, k in itertools.combinations(range(game.num_players), 2):
            edges.append({"i": i, "k": k, "H_ik": game.edges[(i, k)].tolist(),
                          "H_ki": game.edges[(k, i)].tolist()})
        return {"kind": "graphical", "strategy_counts": list(game.strategy_counts), "edges": edges}
    return {"kind": "normal_form", "strategy_counts": list(game.strategy_counts),
            "payoffs": [t.tolist() for t in game.payoffs]}


def load_game(path: str | Path) -> Game:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"game file: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    return game_from_dict(data)
