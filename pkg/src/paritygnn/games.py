"""Parity game data model: arenas, colorings, winning regions and strategies."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class ArenaError(ValueError):
    """Raised when an arena violates totality, range or ownership constraints."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Arena:
    """Vertices 0..n-1, an owner per vertex and ordered successor tuples."""

    owner: tuple[int, ...]
    successors: tuple[tuple[int, ...], ...]

    @property
    def vertex_count(self) -> int:
        return len(self.owner)

    def vertices_of(self, player: int) -> list[int]:
        return [v for v, p in enumerate(self.owner) if p == player]

    def predecessors(self) -> list[list[int]]:
        preds: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for v, succ in enumerate(self.successors):
            for w in succ:
                preds[w].append(v)
        return preds

    def edge_count(self) -> int:
        return sum(len(s) for s in self.successors)


@dataclass(frozen=True)
class ParityGame:
    arena: Arena
    color: tuple[int, ...]

    @classmethod
    def from_lists(
        cls,
        owner: Iterable[int],
        color: Iterable[int],
        successors: Iterable[Iterable[int]],
    ) -> "ParityGame":
        return cls(
            Arena(tuple(int(p) for p in owner), tuple(tuple(int(w) for w in s) for s in successors)),
            tuple(int(c) for c in color),
        )

    @property
    def vertex_count(self) -> int:
        return self.arena.vertex_count

    @property
    def owner(self) -> tuple[int, ...]:
        return self.arena.owner

    @property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        return self.arena.successors

    def permuted(self, perm: Sequence[int]) -> "ParityGame":
        """Relabel vertex v as perm[v]."""
        n = self.vertex_count
        inv = [0] * n
        for v, p in enumerate(perm):
            inv[p] = v
        return ParityGame.from_lists(
            [self.owner[inv[i]] for i in range(n)],
            [self.color[inv[i]] for i in range(n)],
            [sorted(perm[w] for w in self.successors[inv[i]]) for i in range(n)],
        )

    def dual(self) -> "ParityGame":
        """Swap the players: flip owners and shift every color by one."""
        return ParityGame.from_lists(
            [1 - p for p in self.owner], [c + 1 for c in self.color], self.successors
        )


@dataclass(frozen=True)
class WinningRegions:
    w0: frozenset[int]
    w1: frozenset[int]

    def __getitem__(self, player: int) -> frozenset[int]:
        return self.w0 if player == 0 else self.w1

    def winner(self, v: int) -> int:
        return 0 if v in self.w0 else 1

    def is_partition_of(self, n: int) -> bool:
        return not (self.w0 & self.w1) and (self.w0 | self.w1) == frozenset(range(n))

    @classmethod
    def from_winners(cls, winners: Sequence[int]) -> "WinningRegions":
        return cls(
            frozenset(v for v, p in enumerate(winners) if p == 0),
            frozenset(v for v, p in enumerate(winners) if p == 1),
        )

    def winners(self, n: int) -> list[int]:
        return [0 if v in self.w0 else 1 for v in range(n)]


@dataclass(frozen=True)
class Strategy:
    """A memoryless strategy: one chosen successor per vertex of `player`."""

    player: int
    choice: Mapping[int, int] = field(default_factory=dict)

    def restricted(self, region: Iterable[int]) -> "Strategy":
        keep = set(region)
        return Strategy(self.player, {v: w for v, w in sorted(self.choice.items()) if v in keep})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Strategy):
            return NotImplemented
        return self.player == other.player and dict(self.choice) == dict(other.choice)

    def __hash__(self) -> int:
        return hash((self.player, tuple(sorted(self.choice.items()))))

    def violations(self, arena: Arena) -> list[str]:
        out = []
        for v in arena.vertices_of(self.player):
            if v not in self.choice:
                out.append(f"vertex {v} has no choice")
            elif self.choice[v] not in arena.successors[v]:
                out.append(f"choice ({v}, {self.choice[v]}) is not an edge")
        return out


def validate_arena(arena: Arena) -> list[str]:
    """Return every violation of the arena invariants; an empty list means ok."""
    n = len(arena.owner)
    problems = []
    if len(arena.successors) != n:
        problems.append(
            f"owner defined for {n} vertices but successors for {len(arena.successors)}"
        )
    for v, p in enumerate(arena.owner):
        if p not in (0, 1):
            problems.append(f"vertex {v} has invalid owner {p}")
    for v, succ in enumerate(arena.successors):
        if not succ:
            problems.append(f"vertex {v} has no successor")
        for w in succ:
            if not 0 <= w < n:
                problems.append(f"vertex {v} has dangling edge to {w}")
    return problems


def validate_game(game: ParityGame) -> list[str]:
    problems = validate_arena(game.arena)
    if len(game.color) != game.vertex_count:
        problems.append(
            f"color defined for {len(game.color)} of {game.vertex_count} vertices"
        )
    problems.extend(f"vertex {v} has negative color {c}" for v, c in enumerate(game.color) if c < 0)
    return problems


def check_game(game: ParityGame) -> None:
    problems = validate_game(game)
    if problems:
        raise ArenaError(problems)
