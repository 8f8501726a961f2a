"""Exact parity game solving.

`solve_zielonka` is the production solver used for dataset labels.
`solve_bruteforce` enumerates memoryless strategy pairs and serves as an
independent oracle on small games; it relies on positional determinacy only.
"""
from __future__ import annotations

import itertools
import math
import sys
from collections import deque
from typing import Iterable, NamedTuple

import numpy as np

from .games import Arena, ParityGame, Strategy, WinningRegions, check_game

BRUTEFORCE_LIMIT = 10**7


class InstanceTooLarge(ValueError):
    pass


class Solution(NamedTuple):
    regions: WinningRegions
    strategies: tuple[Strategy, Strategy] | None


def _attract(arena, preds, player, target, alive):
    """Attractor of `target` inside the subgame `alive` (a set of vertices).

    Returns the attractor and the attracting moves for `player`'s vertices.
    """
    owner, succ = arena.owner, arena.successors
    attr = set(target)
    choice = {}
    # opponent vertices: number of successors inside the subgame not yet attracted
    remaining = {}
    queue = deque(sorted(attr))
    while queue:
        w = queue.popleft()
        for v in preds[w]:
            if v in attr or v not in alive:
                continue
            if owner[v] == player:
                attr.add(v)
                choice[v] = w
                queue.append(v)
            else:
                if v not in remaining:
                    remaining[v] = sum(1 for u in succ[v] if u in alive)
                remaining[v] -= 1
                if remaining[v] == 0:
                    attr.add(v)
                    queue.append(v)
    return attr, choice


def attractor(arena: Arena, player: int, target: Iterable[int]) -> frozenset[int]:
    """Vertices from which `player` can force a visit to `target`."""
    attr, _ = _attract(arena, arena.predecessors(), player, set(target), set(range(arena.vertex_count)))
    return frozenset(attr)


def _zielonka(game, preds, alive):
    """Returns (W0, W1, choice0, choice1) for the subgame induced by `alive`."""
    if not alive:
        return set(), set(), {}, {}
    color, owner, succ = game.color, game.owner, game.successors
    top = max(color[v] for v in alive)
    i = top % 2
    top_vertices = {v for v in alive if color[v] == top}
    attr_i, attr_choice = _attract(game.arena, preds, i, top_vertices, alive)
    sub = _zielonka(game, preds, alive - attr_i)
    won = [sub[0], sub[1]]
    strat = [sub[2], sub[3]]
    if not won[1 - i]:
        choice_i = dict(strat[i])
        choice_i.update(attr_choice)
        for v in sorted(top_vertices):
            if owner[v] == i:
                choice_i[v] = next(w for w in succ[v] if w in alive)
        regions = [None, None]
        regions[i], regions[1 - i] = set(alive), set()
        choices = [None, None]
        choices[i], choices[1 - i] = choice_i, {}
        return regions[0], regions[1], choices[0], choices[1]
    attr_o, attr_o_choice = _attract(game.arena, preds, 1 - i, won[1 - i], alive)
    rest = _zielonka(game, preds, alive - attr_o)
    choice_o = dict(strat[1 - i])
    choice_o.update(rest[2 + (1 - i)])
    choice_o.update(attr_o_choice)
    regions = [None, None]
    regions[1 - i] = rest[1 - i] | attr_o
    regions[i] = rest[i]
    choices = [None, None]
    choices[1 - i], choices[i] = choice_o, rest[2 + i]
    return regions[0], regions[1], choices[0], choices[1]


def solve_zielonka(game: ParityGame, strategies: bool = True) -> Solution:
    """Exact winning regions (and positional winning strategies).

    Strategies are total on each player's vertices; outside the player's
    winning region the lowest-id successor is chosen.
    """
    check_game(game)
    n = game.vertex_count
    limit = sys.getrecursionlimit()
    if 2 * n + 100 > limit:
        sys.setrecursionlimit(2 * n + 100)
    try:
        w0, w1, c0, c1 = _zielonka(game, game.arena.predecessors(), set(range(n)))
    finally:
        sys.setrecursionlimit(limit)
    regions = WinningRegions(frozenset(w0), frozenset(w1))
    if not strategies:
        return Solution(regions, None)
    pair = []
    for player, chosen in ((0, c0), (1, c1)):
        choice = {}
        for v in game.arena.vertices_of(player):
            w = chosen.get(v) if v in regions[player] else None
            choice[v] = game.successors[v][0] if w is None else w
        pair.append(Strategy(player, choice))
    return Solution(regions, (pair[0], pair[1]))


def play_winner(game: ParityGame, s0: Strategy, s1: Strategy, start: int) -> int:
    """Winner of the unique play from `start` consistent with both strategies."""
    strategies = (s0.choice, s1.choice)
    seen = {}
    path = []
    v = start
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = strategies[game.owner[v]][v]
    cycle = path[seen[v]:]
    return max(game.color[u] for u in cycle) % 2


def _strategy_space(game, player):
    verts = game.arena.vertices_of(player)
    return verts, [game.successors[v] for v in verts]


def strategy_pair_count(game: ParityGame) -> int:
    return math.prod(len(s) for s in game.successors)


def solve_bruteforce(game: ParityGame) -> WinningRegions:
    """Winning regions by enumerating all memoryless strategy pairs."""
    check_game(game)
    pairs = strategy_pair_count(game)
    if pairs > BRUTEFORCE_LIMIT:
        raise InstanceTooLarge(f"instance too large: {pairs} strategy pairs")
    n = game.vertex_count
    color = np.array(game.color)
    v0, opts0 = _strategy_space(game, 0)
    v1, opts1 = _strategy_space(game, 1)
    # every Player-1 strategy as a row of successors on V1
    if v1:
        table1 = np.array(list(itertools.product(*opts1)), dtype=np.intp)
    else:
        table1 = np.zeros((1, 0), dtype=np.intp)
    rows = np.arange(len(table1))[:, None]
    succ = np.zeros((len(table1), n), dtype=np.intp)
    succ[:, v1] = table1
    w0 = np.zeros(n, dtype=bool)
    for sigma0 in itertools.product(*opts0):
        succ[:, v0] = sigma0
        pos = np.broadcast_to(np.arange(n), succ.shape).copy()
        for _ in range(n):
            pos = succ[rows, pos]
        # pos is now on the cycle; walking n more steps covers the whole cycle
        best = color[pos]
        for _ in range(n):
            pos = succ[rows, pos]
            best = np.maximum(best, color[pos])
        w0 |= np.all(best % 2 == 0, axis=0)
    return WinningRegions.from_winners([0 if w else 1 for w in w0])


def strategy_wins(game: ParityGame, strategy: Strategy, region: Iterable[int]) -> bool:
    """True if `strategy` wins from every vertex of `region` against every
    memoryless opponent strategy (exhaustive enumeration)."""
    region = sorted(region)
    if not region:
        return True
    player = strategy.player
    verts, opts = _strategy_space(game, 1 - player)
    for picks in itertools.product(*opts):
        other = Strategy(1 - player, dict(zip(verts, picks)))
        pair = (strategy, other) if player == 0 else (other, strategy)
        for v in region:
            if play_winner(game, pair[0], pair[1], v) != player:
                return False
    return True
