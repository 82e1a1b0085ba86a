from __future__ import annotations

import hashlib
import json
import logging
import os
import pathlib
import struct
from typing import List, NamedTuple, Optional, Sequence

import pandas as pd

from game_zipf.definitions import GameId
from game_zipf.engines import ConnectFourParams, GameState, state_from_key
from game_zipf.errors import DataFormatError
from game_zipf.harness import FrequencyTable, TableEntry

logger = logging.getLogger("game_zipf")

MAGIC = b"GZLF"
FORMAT_VERSION = 1
DIGEST_SIZE = 32
# magic, version, game, config digest, games_played, states_recorded, n_entries
HEADER = struct.Struct(f">4sHB{DIGEST_SIZE}sQQQ")
KEY_LENGTH = struct.Struct(">H")
# count, turn_sum, turn_sq_sum, first_seen_turn, capture_diff
RECORD = struct.Struct(">QQQIh")


class TableHeader(NamedTuple):
    version: int
    game: GameId
    config_digest: bytes
    games_played: int
    states_recorded: int
    n_entries: int


class StateRow(NamedTuple):
    rank: int
    key_hex: str
    state: GameState


def config_digest(config: Optional[dict]) -> bytes:
    """sha256 over the canonical JSON form of a config; all zero bytes when there is none."""
    if config is None:
        return bytes(DIGEST_SIZE)
    blob = json.dumps(config, sort_keys=True, default=str, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).digest()


def _ensure_parent(path) -> pathlib.Path:
    path = pathlib.Path(path)
    if not path.parent.exists():
        path.parent.mkdir(parents=True)
    return path


def save_table(table: FrequencyTable, path, config: Optional[dict] = None) -> int:
    """Writes the binary table file with records sorted by key; returns the number of records."""
    path = _ensure_parent(path)
    with open(path, "wb") as f:
        f.write(
            HEADER.pack(
                MAGIC,
                FORMAT_VERSION,
                int(table.game),
                config_digest(config),
                table.games_played,
                table.states_recorded,
                len(table),
            )
        )
        for key, e in table.sorted_items():
            f.write(KEY_LENGTH.pack(len(key)))
            f.write(key)
            f.write(RECORD.pack(e.count, e.turn_sum, e.turn_sq_sum, e.first_seen_turn, e.capture_diff))
    logger.info(f"Wrote {len(table)} entries to {path}")
    return len(table)


def _read_exact(f, n: int, what: str) -> bytes:
    blob = f.read(n)
    if len(blob) != n:
        raise DataFormatError(f"Truncated table file while reading {what}")
    return blob


def _read_header(f) -> TableHeader:
    magic, version, game, digest, games, states, n = HEADER.unpack(_read_exact(f, HEADER.size, "the header"))
    if magic != MAGIC:
        raise DataFormatError(f"Not a frequency table file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"Unsupported table format version {version}, expected {FORMAT_VERSION}")
    try:
        game = GameId(game)
    except ValueError:
        raise DataFormatError(f"Unknown game id {game} in table header") from None
    return TableHeader(version, game, digest, games, states, n)


def read_header(path) -> TableHeader:
    with open(path, "rb") as f:
        return _read_header(f)


def load_table(path) -> FrequencyTable:
    with open(path, "rb") as f:
        header = _read_header(f)
        entries = {}
        for _ in range(header.n_entries):
            (key_len,) = KEY_LENGTH.unpack(_read_exact(f, KEY_LENGTH.size, "a key length"))
            key = _read_exact(f, key_len, "a key")
            entries[key] = TableEntry(*RECORD.unpack(_read_exact(f, RECORD.size, "a record")))
        if f.read(1):
            raise DataFormatError(f"Trailing bytes after {header.n_entries} records")
    table = FrequencyTable(header.game, entries, header.games_played, header.states_recorded)
    if sum(e.count for e in entries.values()) != header.states_recorded:
        raise DataFormatError("Entry counts do not add up to the recorded state total")
    logger.info(f"Loaded {table!r} from {path}")
    return table


def export_table_csv(table: FrequencyTable, path, min_count: int = 1) -> int:
    """CSV with key_hex, count and mean_turn, one row per state in rank order."""
    from game_zipf.zipfstats import rank_curve

    curve = rank_curve(table, min_count=min_count)
    df = pd.DataFrame(
        {"key_hex": [k.hex() for k in curve.keys], "count": curve.freqs, "mean_turn": curve.mean_turns}
    )
    write_csv(df, path)
    return len(df)


def write_csv(df: pd.DataFrame, path) -> int:
    path = _ensure_parent(path)
    df.to_csv(path, index=False, encoding="utf-8")
    logger.info(f"Wrote {len(df)} rows to {path}")
    return len(df)


def write_json(obj, path) -> None:
    path = _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=2, sort_keys=True, default=str)
        f.write("\n")


def write_annotated_csv(rows: Sequence[dict], path) -> int:
    """
    Annotated-dataset CSV: key_hex, value, optimal_actions (semicolon-joined), nodes, cpu_seconds.
    Each row is a dict with those keys where optimal_actions is a sequence of ints.
    """
    df = pd.DataFrame(
        {
            "key_hex": [r["key_hex"] for r in rows],
            "value": [int(r["value"]) for r in rows],
            "optimal_actions": [";".join(str(a) for a in r["optimal_actions"]) for r in rows],
            "nodes": [int(r["nodes"]) for r in rows],
            "cpu_seconds": [float(r["cpu_seconds"]) for r in rows],
        },
        columns=["key_hex", "value", "optimal_actions", "nodes", "cpu_seconds"],
    )
    return write_csv(df, path)


def load_states_csv(path, params: Optional[ConnectFourParams] = None, limit: Optional[int] = None) -> List[StateRow]:
    """
    Reads Connect Four states from a CSV with a key_hex column (for example a table export).
    Row order is the rank order unless the file carries an explicit rank column.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"State file {path} does not exist")
    df = pd.read_csv(path, dtype={"key_hex": str})
    if "key_hex" not in df.columns:
        raise DataFormatError(f"{path} has no key_hex column")
    if limit is not None:
        df = df.head(limit)
    ranks = df["rank"].tolist() if "rank" in df.columns else list(range(1, len(df) + 1))
    rows = []
    for rank, key_hex in zip(ranks, df["key_hex"]):
        try:
            key = bytes.fromhex(key_hex)
        except (TypeError, ValueError):
            raise DataFormatError(f"Malformed key_hex {key_hex!r} in {path}") from None
        rows.append(StateRow(int(rank), key_hex, state_from_key(key, params)))
    logger.info(f"Loaded {len(rows)} states from {path}")
    return rows
