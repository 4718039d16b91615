"""Plain-text file formats.

Matrix file::

    # optional comment lines anywhere
    <rows> <cols>
    v11 v12 ...
    ...

Graph file::

    nodes <N>
    self_loops          # optional flag line
    normalize           # optional flag line
    u v                 # one undirected edge per line, 0-indexed

Config file: ``key = value`` lines, ``#`` comments.

Numbers are written with 17 significant digits, which round-trips any double.
"""

from pathlib import Path

import numpy as np

from .graph import build_adjacency

__all__ = [
    "ParseError",
    "format_float",
    "read_matrix",
    "write_matrix",
    "read_graph",
    "load_graph",
    "read_config",
    "write_loss_history",
    "read_loss_history",
    "resolve",
]


class ParseError(ValueError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def format_float(x):
    return format(float(x), ".17g")


def _content_lines(path):
    """Yield ``(line_no, stripped_text)`` for non-blank, non-comment lines."""
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield line_no, text


def read_matrix(path):
    lines = list(_content_lines(path))
    if not lines:
        raise ParseError(path, 0, "empty matrix file")
    line_no, header = lines[0]
    parts = header.split()
    try:
        rows, cols = (int(p) for p in parts)
    except ValueError:
        raise ParseError(path, line_no, f"expected '<rows> <cols>', got {header!r}") from None
    if rows < 1 or cols < 1:
        raise ParseError(path, line_no, f"matrix dimensions must be positive, got {rows} x {cols}")
    body = lines[1:]
    if len(body) != rows:
        where = body[rows][0] if len(body) > rows else (body[-1][0] if body else line_no)
        raise ParseError(path, where, f"expected {rows} data rows, found {len(body)}")
    out = np.empty((rows, cols))
    for i, (line_no, text) in enumerate(body):
        fields = text.split()
        if len(fields) != cols:
            raise ParseError(path, line_no, f"expected {cols} values, found {len(fields)}")
        try:
            out[i] = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(path, line_no, str(exc)) from None
    return out


def write_matrix(path, m, comment=None):
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(format_float(v) for v in row) + "\n")


def read_graph(path):
    """Parse a graph file into ``(n_nodes, edges, self_loops, normalize)``."""
    lines = list(_content_lines(path))
    if not lines:
        raise ParseError(path, 0, "empty graph file")
    line_no, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "nodes":
        raise ParseError(path, line_no, f"expected 'nodes <N>', got {header!r}")
    try:
        n_nodes = int(parts[1])
    except ValueError:
        raise ParseError(path, line_no, f"invalid node count {parts[1]!r}") from None
    if n_nodes < 1:
        raise ParseError(path, line_no, "node count must be positive")
    self_loops = normalize = False
    edges = []
    for line_no, text in lines[1:]:
        if text == "self_loops":
            self_loops = True
            continue
        if text == "normalize":
            normalize = True
            continue
        fields = text.split()
        try:
            u, v = (int(f) for f in fields)
        except ValueError:
            raise ParseError(path, line_no, f"expected 'u v' edge, got {text!r}") from None
        if not (0 <= u < n_nodes and 0 <= v < n_nodes):
            raise ParseError(path, line_no, f"node id out of range 0..{n_nodes - 1} in edge ({u}, {v})")
        edges.append((u, v))
    return n_nodes, edges, self_loops, normalize


def load_graph(path):
    """Read a graph file and return its dense symmetric adjacency."""
    n_nodes, edges, self_loops, normalize = read_graph(path)
    return build_adjacency(n_nodes, edges, self_loops=self_loops, normalize=normalize)


def read_config(path):
    """Flat ``key = value`` config; values stay strings."""
    out = {}
    for line_no, text in _content_lines(path):
        key, sep, value = text.partition("=")
        if not sep or not key.strip():
            raise ParseError(path, line_no, f"expected 'key = value', got {text!r}")
        out[key.strip()] = value.strip()
    return out


def write_loss_history(path, losses):
    with open(path, "w") as fh:
        for epoch, loss in enumerate(losses):
            fh.write(f"{epoch} {format_float(loss)}\n")


def read_loss_history(path):
    out = []
    for line_no, text in _content_lines(path):
        fields = text.split()
        if len(fields) != 2:
            raise ParseError(path, line_no, f"expected 'epoch loss', got {text!r}")
        out.append(float(fields[1]))
    return out


def resolve(base, value):
    """Resolve a config-file path relative to the config's directory."""
    p = Path(value)
    return p if p.is_absolute() else Path(base) / p
