"""Random parity games.

Randomness comes from numpy's Philox counter-based generator keyed with the
128-bit pair (seed, index), so every game is a pure function of the dataset
seed and its position in the dataset.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .games import ParityGame

# second key word reserved for the train/test split permutation
SPLIT_STREAM = 2**64 - 1


@dataclass(frozen=True)
class GeneratorParams:
    min_vertices: int = 10
    max_vertices: int = 200

    def __post_init__(self):
        if self.min_vertices < 1:
            raise ValueError("min_vertices must be at least 1")
        if self.max_vertices < self.min_vertices:
            raise ValueError("max_vertices must be >= min_vertices")

    def as_dict(self) -> dict:
        return asdict(self)


def degree_range(n: int) -> tuple[int, int]:
    """Inclusive out-degree bounds for an n-vertex game: {n//100, ..., n//2}
    with the lower end clamped to 1 so the arena stays total."""
    lo = max(1, n // 100)
    return lo, max(lo, n // 2)


def make_rng(seed: int, index: int = 0) -> np.random.Generator:
    key = np.array([seed % 2**64, index % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def generate_game(params: GeneratorParams, seed: int, index: int = 0) -> ParityGame:
    rng = make_rng(seed, index)
    n = int(rng.integers(params.min_vertices, params.max_vertices + 1))
    lo, hi = degree_range(n)
    owner = rng.integers(0, 2, size=n)
    color = rng.integers(1, n + 1, size=n)
    degrees = rng.integers(lo, hi + 1, size=n)
    successors = [np.sort(rng.choice(n, size=int(d), replace=False)) for d in degrees]
    return ParityGame.from_lists(owner, color, successors)


def train_count(count: int, split_fraction: float) -> int:
    # round first: 3000 * 0.7 must give 2100, not ceil(2100.0000000000002)
    return math.ceil(round(count * split_fraction, 9))


def split_assignment(count: int, split_fraction: float, seed: int) -> list[str]:
    """'train'/'test' label per record index, from a seeded permutation."""
    if not 0 < split_fraction < 1:
        raise ValueError("split fraction must lie strictly between 0 and 1")
    order = make_rng(seed, SPLIT_STREAM).permutation(count)
    labels = ["test"] * count
    for i in order[: train_count(count, split_fraction)]:
        labels[int(i)] = "train"
    return labels


def _solved_game(params: GeneratorParams, seed: int, index: int):
    from .solvers import solve_zielonka

    game = generate_game(params, seed, index)
    return game, solve_zielonka(game)


def generate_dataset(
    count: int,
    params: GeneratorParams,
    seed: int,
    split_fraction: float,
    root,
    jobs: int = 1,
):
    """Generate, solve and persist `count` games; returns the DatasetManifest."""
    from . import pgio

    if count < 1:
        raise ValueError("count must be at least 1")
    splits = split_assignment(count, split_fraction, seed)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            solved = list(
                pool.map(_solved_game, [params] * count, [seed] * count, range(count), chunksize=8)
            )
    else:
        solved = [_solved_game(params, seed, i) for i in range(count)]
    return pgio.save_dataset(
        root,
        [g for g, _ in solved],
        [tuple(s) for _, s in solved],
        splits,
        seed=seed,
        params=params.as_dict(),
        split_fraction=split_fraction,
    )
