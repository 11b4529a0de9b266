"""Atomic CSV/JSON writers (write to a temporary sibling, then rename).

A path of None or "-" writes to standard output instead.
"""

from __future__ import annotations

import csv
import json
import os
import sys
import tempfile


def _atomic(path: str | None, writer) -> None:
    if path is None or path == "-":
        writer(sys.stdout)
        sys.stdout.flush()
        return
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str | None, header, rows) -> None:
    def w(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for r in rows:
            out.writerow([_fmt(v) for v in r])
    _atomic(path, w)


def _fmt(v):
    if isinstance(v, float) or hasattr(v, "dtype"):
        return repr(float(v))
    return v


def write_json(path: str | None, obj) -> None:
    def w(fh):
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    _atomic(path, w)


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def read_csv(path: str):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def load_schema(name: str) -> dict:
    """A shipped JSON schema by short name, e.g. ``bm_report``."""
    from importlib.resources import files
    return json.loads(files("singweyl").joinpath("schemas", f"{name}.schema.json").read_text())
