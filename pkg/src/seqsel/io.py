"""CSV ingestion, numeric formatting and run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import os
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError, SeqselError


class InstallError(SeqselError):
    exit_code = 1


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_observations(path) -> np.ndarray:
    """Read a one-observation-per-line CSV.

    A header line is optional. If the header names several columns, the one
    called ``y`` is used, which lets files written by ``simulate`` be read back.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [(i + 1, r) for i, r in enumerate(csv.reader(io.StringIO(text))) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no observations")
    col = 0
    first_line, first = rows[0]
    if not all(_is_number(c) for c in first):
        header = [c.strip() for c in first]
        if len(header) == 1:
            col = 0
        elif "y" in header:
            col = header.index("y")
        else:
            raise DataError(f"{path}:{first_line}: expected a 'y' column in header {header}")
        rows = rows[1:]
    values = []
    for line, row in rows:
        if col >= len(row):
            raise DataError(f"{path}:{line}: missing value")
        cell = row[col].strip()
        try:
            v = float(cell)
        except ValueError:
            raise DataError(f"{path}:{line}: not a number: {cell!r}") from None
        if not np.isfinite(v):
            raise DataError(f"{path}:{line}: non-finite value {cell!r}")
        values.append(v)
    if not values:
        raise DataError(f"{path}: no observations")
    return np.asarray(values)


def bundled_faithful_path():
    ref = resources.files("seqsel") / "data" / "old_faithful_waiting.csv"
    if not ref.is_file():
        raise InstallError("bundled Old Faithful data is missing; reinstall the package")
    return ref


def load_faithful() -> np.ndarray:
    with resources.as_file(bundled_faithful_path()) as p:
        return read_observations(p)


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {path} is not writable: {exc}") from exc
    return path


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating, int, np.integer)) and not isinstance(v, bool) else v
                        for v in row])


def _round_trip(obj):
    if isinstance(obj, dict):
        return {k: _round_trip(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_trip(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round_trip(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def write_json(path, obj):
    # json emits the shortest repr that round-trips, which is at most 17 digits
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_round_trip(obj), f, indent=2)
        f.write("\n")


def now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir, command, config, seed, started, outputs):
    from . import __version__

    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "started": started,
        "finished": now_iso(),
        "outputs": sorted(str(Path(p).name) for p in outputs),
    }
    path = Path(out_dir) / "manifest.json"
    write_json(path, manifest)
    return path


def read_manifest(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            m = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    for key in ("command", "config"):
        if key not in m:
            raise DataError(f"manifest {path} lacks '{key}'")
    return m


def worker_count() -> int:
    cap = os.environ.get("SEQSEL_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n
