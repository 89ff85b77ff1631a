"""File formats: HEMAP v1 maps, parenthesis trees, CSV/JSON reports, manifests.

HEMAP v1 is line based and whitespace separated::

    HEMAP 1
    <id> <twin> <next_at_vertex> <origin>     one line per half-edge
    root <id>
    marked <id> <id> ...                      optional, tree decorations
    boundary <id> <id> ...                    optional, boundary quads

Every artifact goes through a temporary file in the target directory and
``os.replace``, so readers never see a half-written file.
"""
import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, is_dataclass
from typing import Optional

import numpy as np

from . import __version__
from .errors import ConfigError, MapError
from .gluing import TreeDecoratedQuad, decorate
from .maps import HalfEdgeMap, build_map
from .quads import GeneralBoundaryQuad, as_simple
from .trees import ContourFunction, PlaneTree, contour_of, from_paren, to_paren, tree_of


class FormatError(ConfigError):
    """A file does not follow the expected format."""


@dataclass(frozen=True, eq=False)
class HemapRecord:
    map: HalfEdgeMap
    marked: Optional[np.ndarray] = None
    boundary: Optional[np.ndarray] = None


# atomic writes

def atomic_write_bytes(path, data: bytes):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


# HEMAP v1

def hemap_text(m: HalfEdgeMap, marked=None, boundary=None) -> str:
    lines = ["HEMAP 1"]
    for h in range(m.n_half_edges):
        lines.append(f"{h} {int(m.twin[h])} {int(m.next_at_vertex[h])} {int(m.origin[h])}")
    lines.append(f"root {int(m.root)}")
    if marked is not None:
        lines.append(" ".join(["marked"] + [str(int(x)) for x in marked]))
    if boundary is not None:
        lines.append(" ".join(["boundary"] + [str(int(x)) for x in boundary]))
    return "\n".join(lines) + "\n"


def parse_hemap(text: str) -> HemapRecord:
    rows, root, marked, boundary = [], None, None, None
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != ["HEMAP", "1"]:
        raise FormatError("missing 'HEMAP 1' header")
    try:
        for parts in lines[1:]:
            key = parts[0]
            if key == "root":
                if len(parts) != 2:
                    raise FormatError("root line takes exactly one id")
                root = int(parts[1])
            elif key == "marked":
                marked = np.array([int(x) for x in parts[1:]], np.int64)
            elif key == "boundary":
                boundary = np.array([int(x) for x in parts[1:]], np.int64)
            elif len(parts) == 4:
                rows.append([int(x) for x in parts])
            else:
                raise FormatError(f"cannot parse line {' '.join(parts)!r}")
    except ValueError as exc:
        raise FormatError(f"ids must be decimal integers ({exc})") from None
    if root is None:
        raise FormatError("missing root line")
    if not rows:
        raise FormatError("no half-edges")
    tab = np.array(rows, np.int64)
    n = tab.shape[0]
    if root < 0 or root >= n:
        raise MapError(f"root {root} is not a half-edge id")
    for name, ids in (("marked", marked), ("boundary", boundary)):
        if ids is not None and ids.size and (ids.min() < 0 or ids.max() >= n):
            raise MapError(f"{name} id out of range")
    vcount = int(tab[:, 3].max()) + 1 if tab[:, 3].min() >= 0 else 0
    return HemapRecord(build_map(tab, root, vcount), marked, boundary)


def write_hemap(path, m: HalfEdgeMap, marked=None, boundary=None):
    atomic_write_text(path, hemap_text(m, marked, boundary))


def read_hemap(path) -> HemapRecord:
    with open(path, encoding="utf-8") as fh:
        return parse_hemap(fh.read())


def write_quad(path, q: GeneralBoundaryQuad):
    write_hemap(path, q.map, boundary=q.boundary)


def read_quad(path):
    """Simple-boundary quad; a stored boundary line must match the one implied by the root."""
    rec = read_hemap(path)
    q = as_simple(rec.map)
    if rec.boundary is not None and not np.array_equal(rec.boundary, q.boundary):
        raise FormatError("boundary line does not match the boundary of the root face")
    return q


def write_decorated(path, d: TreeDecoratedQuad):
    write_hemap(path, d.map, marked=d.tree_half_edges)


def read_decorated(path) -> TreeDecoratedQuad:
    rec = read_hemap(path)
    if rec.marked is None:
        raise FormatError("decorated map needs a 'marked' line")
    return decorate(rec.map, rec.marked)


# trees

def write_tree(path, t):
    c = contour_of(t) if isinstance(t, PlaneTree) else t
    atomic_write_text(path, to_paren(c) + "\n")


def read_tree(path) -> PlaneTree:
    with open(path, encoding="utf-8") as fh:
        return tree_of(from_paren(fh.read()))


# reports

def _plain(x):
    """JSON-ready copy: numpy to Python, non-finite floats to None."""
    if is_dataclass(x) and not isinstance(x, type):
        return _plain(asdict(x))
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return _plain(x.item())
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, ContourFunction):
        return to_paren(x)
    return x


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    atomic_write_text(path, json_text(obj))


def csv_text(rows, columns=None) -> str:
    """CSV of a list of dicts (columns default to the first row's keys) or of a 2-d table."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if len(rows) and isinstance(rows[0], dict):
        columns = list(columns or rows[0].keys())
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r[c]) for c in columns])
    else:
        if columns:
            w.writerow(columns)
        for r in rows:
            w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def write_csv(path, rows, columns=None):
    atomic_write_text(path, csv_text(rows, columns))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir, command: str, config: dict, artifacts):
    """manifest.json: command, config echo, code version and a hash of every artifact.

    The thread count is left out of the echo on purpose, since it must not
    change any artifact.
    """
    files = {}
    for name in sorted(artifacts):
        files[name] = sha256_file(os.path.join(out_dir, name))
    man = {"command": command, "config": config, "code_version": __version__, "artifacts": files}
    write_json(os.path.join(out_dir, "manifest.json"), man)
    return man
