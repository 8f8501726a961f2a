"""PGSolver-compatible text formats and on-disk datasets.

Game:      ``parity <max-id>;`` then ``<id> <color> <owner> <succ>,<succ>... ["name"];``
Solution:  ``paritysol <max-id>;`` then ``<id> <winner> [<strategy-succ>];``
Manifest:  ``#key=value`` header lines, then one tab-separated record per line:
           ``<game-file>\\t<solution-file>\\t<vertex-count>\\t<split>``
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .games import ParityGame, Strategy, WinningRegions, check_game

MANIFEST_NAME = "manifest.tsv"

_HEADER = re.compile(r"^(parity|paritysol|start)\s+(\d+)\s*;?$")
_GAME_LINE = re.compile(r'^(\d+)\s+(\d+)\s+(\d+)\s+([^\s";]*)\s*(?:"[^"]*")?\s*;?$')
_SOL_LINE = re.compile(r"^(\d+)\s+(\d+)(?:\s+(\d+))?\s*;?$")
_SUCC = re.compile(r"^\d+(,\d+)*$")


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"{message} at line {line}")


class DatasetError(IOError):
    pass


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line:
            yield lineno, line


def parse_game(text: str) -> ParityGame:
    """Parse a game; vertex ids are compacted to dense indices in file order."""
    ids: list[int] = []
    colors, owners, raw_succ, where = [], [], [], []
    seen_header = False
    for lineno, line in _content_lines(text):
        head = _HEADER.match(line)
        if head:
            if head.group(1) == "paritysol":
                raise FormatError("solution header in game file", lineno)
            if head.group(1) == "parity":
                seen_header = True
            continue
        m = _GAME_LINE.match(line)
        if not m:
            raise FormatError(f"syntax error: {line!r}", lineno)
        if not m.group(4):
            raise FormatError("empty successor list", lineno)
        if not _SUCC.match(m.group(4)):
            raise FormatError(f"malformed successor list {m.group(4)!r}", lineno)
        vid, owner = int(m.group(1)), int(m.group(3))
        if owner not in (0, 1):
            raise FormatError(f"owner must be 0 or 1, got {owner}", lineno)
        ids.append(vid)
        colors.append(int(m.group(2)))
        owners.append(owner)
        raw_succ.append([int(s) for s in m.group(4).split(",")])
        where.append(lineno)
    if not seen_header:
        raise FormatError("missing 'parity <max-id>;' header", 1)
    if not ids:
        raise FormatError("game has no vertices")
    index: dict[int, int] = {}
    for vid, lineno in zip(ids, where):
        if vid in index:
            raise FormatError(f"duplicate vertex id {vid}", lineno)
        index[vid] = len(index)
    successors = []
    for succ, lineno in zip(raw_succ, where):
        try:
            successors.append(sorted({index[s] for s in succ}))
        except KeyError as exc:
            raise FormatError(f"dangling successor {exc.args[0]}", lineno) from None
    game = ParityGame.from_lists(owners, colors, successors)
    check_game(game)
    return game


def serialize_game(game: ParityGame) -> str:
    lines = [f"parity {game.vertex_count - 1};"]
    for v in range(game.vertex_count):
        succ = ",".join(str(w) for w in game.successors[v])
        lines.append(f"{v} {game.color[v]} {game.owner[v]} {succ};")
    return "\n".join(lines) + "\n"


def parse_solution(
    text: str, vertex_count: int | None = None
) -> tuple[WinningRegions, tuple[Strategy, Strategy]]:
    """Parse a solution; strategies hold only the entries present in the file."""
    max_id = None
    winners: dict[int, int] = {}
    choices: tuple[dict, dict] = ({}, {})
    for lineno, line in _content_lines(text):
        head = _HEADER.match(line)
        if head:
            if head.group(1) != "paritysol":
                raise FormatError(f"unexpected header {head.group(1)!r}", lineno)
            max_id = int(head.group(2))
            continue
        m = _SOL_LINE.match(line)
        if not m:
            raise FormatError(f"syntax error: {line!r}", lineno)
        if max_id is None:
            raise FormatError("missing 'paritysol <max-id>;' header", lineno)
        v, winner = int(m.group(1)), int(m.group(2))
        n = vertex_count if vertex_count is not None else max_id + 1
        if v >= n:
            raise FormatError(f"unknown vertex id {v}", lineno)
        if winner not in (0, 1):
            raise FormatError(f"winner must be 0 or 1, got {winner}", lineno)
        if v in winners:
            raise FormatError(f"vertex {v} listed twice", lineno)
        winners[v] = winner
        if m.group(3) is not None:
            choices[winner][v] = int(m.group(3))
    if max_id is None:
        raise FormatError("missing 'paritysol <max-id>;' header", 1)
    n = vertex_count if vertex_count is not None else max_id + 1
    missing = sorted(set(range(n)) - set(winners))
    if missing:
        raise FormatError(f"vertices without winner: {missing[:10]}")
    regions = WinningRegions.from_winners([winners[v] for v in range(n)])
    return regions, (Strategy(0, choices[0]), Strategy(1, choices[1]))


def serialize_solution(
    regions: WinningRegions,
    strategies: tuple[Strategy, Strategy] | None = None,
    vertex_count: int | None = None,
) -> str:
    """Strategy successors are written only for vertices whose winner's
    strategy has an entry there (i.e. the owner wins)."""
    n = vertex_count if vertex_count is not None else len(regions.w0) + len(regions.w1)
    lines = [f"paritysol {n - 1};"]
    for v in range(n):
        winner = regions.winner(v)
        entry = f"{v} {winner}"
        if strategies is not None and v in strategies[winner].choice:
            entry += f" {strategies[winner].choice[v]}"
        lines.append(entry + ";")
    return "\n".join(lines) + "\n"


@dataclass
class Record:
    game_file: str
    solution_file: str
    vertex_count: int
    split: str


@dataclass
class DatasetManifest:
    root: Path
    records: list[Record] = field(default_factory=list)
    seed: int = 0
    params: dict = field(default_factory=dict)
    split_fraction: float = 0.7

    def split(self, name: str) -> list[Record]:
        if name == "all":
            return list(self.records)
        return [r for r in self.records if r.split == name]

    def load_game(self, record: Record) -> ParityGame:
        return parse_game((self.root / record.game_file).read_text())

    def load_solution(self, record: Record) -> WinningRegions:
        regions, _ = parse_solution(
            (self.root / record.solution_file).read_text(), record.vertex_count
        )
        return regions

    def load_pairs(self, split: str = "all") -> list[tuple[ParityGame, WinningRegions]]:
        return [(self.load_game(r), self.load_solution(r)) for r in self.split(split)]


def write_manifest(manifest: DatasetManifest) -> Path:
    lines = [
        f"#seed={manifest.seed}",
        f"#split_fraction={manifest.split_fraction!r}",
        f"#params={json.dumps(manifest.params, sort_keys=True)}",
    ]
    for r in manifest.records:
        lines.append(f"{r.game_file}\t{r.solution_file}\t{r.vertex_count}\t{r.split}")
    path = Path(manifest.root) / MANIFEST_NAME
    path.write_text("\n".join(lines) + "\n")
    return path


def save_dataset(
    root: str | Path,
    games: list[ParityGame],
    solutions: list[tuple[WinningRegions, tuple[Strategy, Strategy] | None]],
    splits: list[str],
    seed: int = 0,
    params: dict | None = None,
    split_fraction: float = 0.7,
) -> DatasetManifest:
    root = Path(root)
    (root / "games").mkdir(parents=True, exist_ok=True)
    (root / "solutions").mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(len(games))))
    records = []
    for i, (game, (regions, strategies), split) in enumerate(zip(games, solutions, splits)):
        gname = f"games/game_{i:0{width}d}.gm"
        sname = f"solutions/game_{i:0{width}d}.sol"
        (root / gname).write_text(serialize_game(game))
        (root / sname).write_text(serialize_solution(regions, strategies, game.vertex_count))
        records.append(Record(gname, sname, game.vertex_count, split))
    manifest = DatasetManifest(root, records, seed, dict(params or {}), split_fraction)
    write_manifest(manifest)
    return manifest


def load_dataset(root: str | Path, check_files: bool = True) -> DatasetManifest:
    root = Path(root)
    path = root / MANIFEST_NAME
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {path}: {exc}") from exc
    manifest = DatasetManifest(root)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key == "seed":
                manifest.seed = int(value)
            elif key == "split_fraction":
                manifest.split_fraction = float(value)
            elif key == "params":
                manifest.params = json.loads(value)
            continue
        parts = line.split("\t")
        if len(parts) != 4 or parts[3] not in ("train", "test"):
            raise DatasetError(f"{path}: malformed record at line {lineno}")
        record = Record(parts[0], parts[1], int(parts[2]), parts[3])
        if check_files:
            for name in (record.game_file, record.solution_file):
                if not (root / name).is_file():
                    raise DatasetError(
                        f"record {len(manifest.records)} (line {lineno}): missing file {name}"
                    )
        manifest.records.append(record)
    return manifest
