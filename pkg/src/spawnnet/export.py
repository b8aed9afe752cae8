"""Deterministic on-disk format for runs, theory tables and analysis outputs.

A run directory holds::

    edges.csv            child_id,parent_id,birth_tick
    events.jsonl         {"tick":..,"parent":..,"child":..} per line
    births_per_tick.csv  tick,births
    degree_by_label.csv  id,degree
    manifest.json        config, counts and the FNV-1a 64 digest of events.jsonl

All integers base 10, UTF-8, LF endings, header rows, no quoting. The same
:class:`~spawnnet.engine.SimResult` always serializes to the same bytes.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from . import __version__
from .engine import SimConfig, SimResult, result_from_events

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

EDGES = "edges.csv"
EVENTS = "events.jsonl"
BIRTHS = "births_per_tick.csv"
DEGREES = "degree_by_label.csv"
MANIFEST = "manifest.json"


class RunIOError(OSError):
    """Filesystem failure while reading or writing a run directory."""


class MissingRunFileError(RunIOError, FileNotFoundError):
    pass


class RunCorruptionError(ValueError):
    """A run file disagrees with its manifest or with the other files."""


@numba.njit(cache=True)
def _fnv1a64(data):
    h = np.uint64(FNV_OFFSET)
    prime = np.uint64(FNV_PRIME)
    for b in data:
        h ^= np.uint64(b)
        h *= prime
    return h


def fnv1a64(data: bytes) -> int:
    if not data:
        return FNV_OFFSET
    return int(_fnv1a64(np.frombuffer(data, dtype=np.uint8)))


def digest_hex(data: bytes) -> str:
    return f"{fnv1a64(data):016x}"


@dataclass(frozen=True)
class RunManifest:
    config: dict
    final_tick: int
    node_count: int
    event_count: int
    events_digest: str
    artifact_version: str

    def to_json(self) -> str:
        body = {
            "artifact_version": self.artifact_version,
            "config": self.config,
            "event_count": self.event_count,
            "events_digest": self.events_digest,
            "final_tick": self.final_tick,
            "node_count": self.node_count,
        }
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RunManifest:
        body = json.loads(text)
        return cls(
            config=body["config"],
            final_tick=int(body["final_tick"]),
            node_count=int(body["node_count"]),
            event_count=int(body["event_count"]),
            events_digest=body["events_digest"],
            artifact_version=body["artifact_version"],
        )


def _lines(header: str, rows) -> str:
    return header + "\n" + "".join(f"{line}\n" for line in rows)


def events_bytes(result: SimResult) -> bytes:
    """The canonical event-log bytes the manifest digest is taken over."""
    ticks = result.event_tick.tolist()
    parents = result.event_parent.tolist()
    text = "".join(
        f'{{"tick":{t},"parent":{p},"child":{c}}}\n' for c, (t, p) in enumerate(zip(ticks, parents), start=3)
    )
    return text.encode("utf-8")


def _render(result: SimResult) -> dict[str, bytes]:
    ids = range(1, result.node_count + 1)
    parent = result.parent.tolist()
    birth = result.birth_tick.tolist()
    edges = _lines("child_id,parent_id,birth_tick", (f"{i},{parent[i - 1]},{birth[i - 1]}" for i in ids if i > 1))
    degrees = _lines("id,degree", (f"{i},{d}" for i, d in zip(ids, result.degree.tolist())))
    births = _lines("tick,births", (f"{t},{c}" for t, c in result.births_per_tick))
    return {EDGES: edges.encode(), EVENTS: events_bytes(result), BIRTHS: births.encode(), DEGREES: degrees.encode()}


def _write(path: Path, data: bytes) -> None:
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise RunIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_run(result: SimResult, directory) -> RunManifest:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RunIOError(f"cannot create run directory {directory}: {exc.strerror or exc}") from exc
    files = _render(result)
    for name, data in files.items():
        _write(directory / name, data)
    manifest = RunManifest(
        config=result.config.to_dict(),
        final_tick=result.final_tick,
        node_count=result.node_count,
        event_count=result.event_count,
        events_digest=digest_hex(files[EVENTS]),
        artifact_version=__version__,
    )
    _write(directory / MANIFEST, manifest.to_json().encode())
    return manifest


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except FileNotFoundError as exc:
        raise MissingRunFileError(f"run file missing: {path}") from exc
    except OSError as exc:
        raise RunIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _parse_csv(path: Path, data: bytes, header: str, width: int) -> np.ndarray:
    lines = data.decode("utf-8").split("\n")
    if lines[0] != header or lines[-1] != "":
        raise RunCorruptionError(f"{path}: unexpected header or missing final newline")
    body = lines[1:-1]
    try:
        arr = np.array([[int(v) for v in line.split(",")] for line in body], dtype=np.int64)
    except ValueError as exc:
        raise RunCorruptionError(f"{path}: {exc}") from exc
    return arr.reshape(-1, width)


def read_manifest(directory) -> RunManifest:
    path = Path(directory) / MANIFEST
    try:
        return RunManifest.from_json(_read(path).decode("utf-8"))
    except (KeyError, ValueError) as exc:
        raise RunCorruptionError(f"{path}: malformed manifest ({exc})") from exc


def read_run(directory) -> SimResult:
    """Rebuild a :class:`SimResult` from a run directory, cross-checking every file."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    events_path = directory / EVENTS
    raw = _read(events_path)
    if digest_hex(raw) != manifest.events_digest:
        raise RunCorruptionError(f"{events_path}: digest {digest_hex(raw)} != manifest {manifest.events_digest}")
    ticks, parents = [], []
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        try:
            rec = json.loads(line)
            ticks.append(int(rec["tick"]))
            parents.append(int(rec["parent"]))
            child = int(rec["child"])
        except (ValueError, KeyError, TypeError) as exc:
            raise RunCorruptionError(f"{events_path}:{lineno}: bad event record") from exc
        if child != lineno + 2:
            raise RunCorruptionError(f"{events_path}:{lineno}: child {child}, expected {lineno + 2}")
    if len(ticks) != manifest.event_count:
        raise RunCorruptionError(f"{events_path}: {len(ticks)} events, manifest says {manifest.event_count}")
    config = SimConfig.from_dict(manifest.config)
    result = result_from_events(config, manifest.final_tick, np.array(ticks), np.array(parents))
    if result.node_count != manifest.node_count:
        raise RunCorruptionError(f"{directory}: node count disagrees with manifest")

    expected = _render(result)
    for name in (EDGES, DEGREES):
        path = directory / name
        data = _read(path)
        if data != expected[name]:
            header = expected[name].split(b"\n", 1)[0].decode()
            _parse_csv(path, data, header, 2 if name == DEGREES else 3)
            raise RunCorruptionError(f"{path}: contents disagree with the event log")
    births_path = directory / BIRTHS
    if births_path.exists():
        if _read(births_path) != expected[BIRTHS]:
            raise RunCorruptionError(f"{births_path}: contents disagree with the event log")
    else:
        warnings.warn(f"{births_path} missing; reconstructed from events", stacklevel=2)
    return result


def write_dot(result: SimResult, directory, node_limit: int, filename: str = "network.dot") -> Path:
    """Undirected DOT graph of nodes ``1..node_limit`` for external layout tools."""
    if node_limit < 2:
        raise ValueError("node_limit must be >= 2")
    if node_limit > result.node_count:
        warnings.warn(f"node_limit {node_limit} exceeds run size; clamped to {result.node_count}", stacklevel=2)
        node_limit = result.node_count
    parent = result.parent.tolist()
    out = ["graph spawned {"]
    out += [f"  {i};" for i in range(1, node_limit + 1)]
    out += [f"  {parent[i - 1]} -- {i};" for i in range(2, node_limit + 1)]
    out.append("}")
    path = Path(directory) / filename
    path.parent.mkdir(parents=True, exist_ok=True)
    _write(path, ("\n".join(out) + "\n").encode())
    return path


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    """Plain CSV with ``repr`` float formatting (shortest round-trip)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = ",".join(header) + "\n" + "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)
    _write(path, text.encode())
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write(path, (json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n").encode())
    return path


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def write_theory_table(table, path) -> Path:
    return write_csv(path, ("q", "p_recursive", "p_closed", "p_asymptotic"), table.rows())
