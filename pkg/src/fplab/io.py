"""CSV writers for trajectories and simulator output, checksums and run manifests.

All tabular files are written with ``repr`` floats (round-trip exact) and
``\\n`` line endings so identical data always hashes identically.  Checksums
are XXH64 (seed 0) of the file bytes, rendered as 16 hex digits.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import os
import platform
import sys
from typing import Iterable, Sequence

import numpy as np
import xxhash

from . import __version__
from .trajectory import SCALAR_SERIES, Trajectory

TRAJECTORY_HEADER = ("t", "side", "series", "k", "value")
SERIES_ORDER = (*SCALAR_SERIES, "v", "w")
_SIDE_ORDER = {"pre": 0, "": 1, "post": 2}


def file_checksum(path: str) -> str:
    h = xxhash.xxh64()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_rows(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    return file_checksum(path)


def trajectory_rows(traj: Trajectory | None):
    """Long-format rows ordered by ``t`` (pre before post), series, then ``k``."""
    if traj is None or traj.times.size == 0:
        return
    snaps = {}
    for i, ts in enumerate(np.asarray(traj.snapshot_times, dtype=float)):
        snaps[float(ts)] = i
    done_snap = set()
    for i, t in enumerate(traj.times):
        t = float(t)
        side = traj.sides[i]
        for name in SCALAR_SERIES:
            yield (_num(t), side, name, "", _num(traj.series[name][i]))
        # spectra attach to the right-continuous (non-pre) row at a snapshot time
        j = snaps.get(t)
        if j is not None and side != "pre" and j not in done_snap:
            done_snap.add(j)
            v = traj.snapshots[j]
            for k, val in enumerate(v, start=1):
                yield (_num(t), side, "v", str(k), _num(val))
            for k, val in enumerate(np.cumsum(v), start=1):
                yield (_num(t), side, "w", str(k), _num(val))


def write_trajectory(traj: Trajectory | None, path: str) -> str:
    """Write the long CSV ``t,side,series,k,value`` and return its checksum."""
    return _write_rows(path, TRAJECTORY_HEADER, trajectory_rows(traj))


def read_trajectory_rows(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_burns(burns, path: str) -> str:
    rows = ((e.i, _num(e.bt), _num(e.theta), _num(e.gel_before)) for e in burns)
    return _write_rows(path, ("i", "bt", "theta", "gel_before"), rows)


def write_sim_output(times, series: dict, w: np.ndarray, path: str) -> str:
    """Simulator observables in the long trajectory format (side always blank)."""
    names = [n for n in ("m0", "Phi", "m1", "m2", "cmax") if n in series]

    def rows():
        for i, t in enumerate(times):
            for n in names:
                yield (_num(t), "", n, "", _num(series[n][i]))
            for k in range(w.shape[1]):
                yield (_num(t), "", "w", str(k + 1), _num(w[i, k]))

    return _write_rows(path, TRAJECTORY_HEADER, rows())


_EVENT_NAMES = {0: "merge", 1: "burn", 2: "reject"}


def write_events(events, path: str) -> str:
    """``t,type,size``: merged size for merges, burnt size for burns, 0 for rejects."""
    et, ek, es = events
    rows = ((_num(t), _EVENT_NAMES.get(int(k), str(int(k))), int(s)) for t, k, s in zip(et, ek, es))
    return _write_rows(path, ("t", "type", "size"), rows)


def write_histogram(rows, path: str) -> str:
    return _write_rows(path, ("t_bin", "k_bin", "mass"),
                       ((_num(a), int(k), _num(m)) for a, k, m in rows))


def write_table(columns: dict, path: str) -> str:
    names = list(columns)
    data = [np.asarray(columns[n]).tolist() for n in names]
    return _write_rows(path, names, ([_num(v) if isinstance(v, float) else v for v in r]
                                     for r in zip(*data)))


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class Manifest:
    """Reproducibility record written as ``manifest.json`` next to the outputs."""

    def __init__(self, argv: Sequence[str], config: dict, seed: int | None):
        self.data = {
            "tool": "fplab",
            "version": __version__,
            "command": list(argv),
            "config": config,
            "seed": seed,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "platform": platform.platform(),
            "checksum": "xxh64",
            "started": _now(),
            "finished": None,
            "outputs": {},
        }

    def add(self, path: str, checksum: str | None = None) -> None:
        self.data["outputs"][os.path.basename(path)] = checksum or file_checksum(path)

    def write(self, out_dir: str) -> str:
        self.data["finished"] = _now()
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def read_manifest(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def verify_manifest(path: str) -> dict[str, bool]:
    """Recompute the checksum of every listed output next to the manifest."""
    m = read_manifest(path)
    d = os.path.dirname(os.path.abspath(path))
    return {name: os.path.exists(os.path.join(d, name))
            and file_checksum(os.path.join(d, name)) == cs
            for name, cs in m["outputs"].items()}
