"""Edge-list file format and atomic artifact writes.

A graph file is a header line ``spectralforge-graph v1 <n> <m>`` followed by
exactly ``m`` lines ``u v`` with ``u < v``, in strictly increasing
lexicographic order, each line ending in a newline. Because the layout is
canonical, formatting a parsed file reproduces it byte for byte.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

from .graph_core import Graph, GraphError

MAGIC = "spectralforge-graph"
VERSION = "v1"


class FormatError(GraphError):
    pass


class DuplicateEdgeError(FormatError):
    pass


def format_graph(g: Graph) -> bytes:
    lines = [f"{MAGIC} {VERSION} {g.n} {g.edge_count}"]
    lines += [f"{u} {v}" for u, v in g.edges]
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_graph(data: bytes | str) -> Graph:
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    if not text.endswith("\n"):
        raise FormatError("file must end with a newline")
    lines = text[:-1].split("\n")
    head = lines[0].split(" ")
    if len(head) != 4 or head[0] != MAGIC or head[1] != VERSION:
        raise FormatError(f"malformed header: {lines[0]!r}")
    try:
        n, m = int(head[2]), int(head[3])
    except ValueError:
        raise FormatError(f"malformed header: {lines[0]!r}") from None
    if n < 0 or m < 0 or head[2] != str(n) or head[3] != str(m):
        raise FormatError(f"malformed header: {lines[0]!r}")
    rows = lines[1:] if lines[1:] != [""] or m else []
    if len(rows) != m:
        raise FormatError(f"header announces {m} edges, found {len(rows)}")
    edges = []
    seen = set()
    prev = None
    for lineno, row in enumerate(rows, start=2):
        parts = row.split(" ")
        if len(parts) != 2 or not all(p.isdigit() and p == str(int(p)) for p in parts):
            raise FormatError(f"line {lineno}: malformed row {row!r}")
        u, v = int(parts[0]), int(parts[1])
        if u >= n or v >= n:
            raise FormatError(f"line {lineno}: vertex index out of range for n={n}")
        if u >= v:
            raise FormatError(f"line {lineno}: rows need u < v, got {u} {v}")
        if (u, v) in seen:
            raise DuplicateEdgeError(f"line {lineno}: duplicate edge {u} {v}")
        if prev is not None and (u, v) < prev:
            raise FormatError(f"line {lineno}: rows out of order")
        seen.add((u, v))
        prev = (u, v)
        edges.append((u, v))
    return Graph.from_edges(n, edges)


def read_graph(path) -> Graph:
    return parse_graph(Path(path).read_bytes())


def atomic_write(path, data: bytes | str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def derive_seed(seed: int, stage: str) -> int:
    """Stable per-stage seed: first 8 bytes of ``sha256("<seed>/<stage>")``."""
    digest = hashlib.sha256(f"{seed}/{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
