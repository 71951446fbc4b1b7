"""Parity-check matrices: alist and quasi-cyclic parsing, Tanner graphs, syndromes."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .dde import DegreeDistribution


class CodeParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class TannerGraph:
    """Bipartite graph of a parity-check matrix with variable-major edge numbering.

    Edge ``e`` joins variable ``edge_var[e]`` and check ``edge_check[e]``; the
    edges of variable ``v`` are ``var_ptr[v]:var_ptr[v+1]``.  The edges
    meeting check ``c`` are ``chk_edges[chk_ptr[c]:chk_ptr[c+1]]``, ordered by
    variable index.
    """

    def __init__(self, n_vars: int, n_checks: int, pairs):
        pairs = np.asarray(sorted(map(tuple, pairs)), dtype=np.int64).reshape(-1, 2)
        if n_vars < 1 or n_checks < 1:
            raise ValueError("graph needs at least one variable and one check")
        if pairs.size:
            if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= n_vars:
                raise ValueError("variable index out of range")
            if pairs[:, 1].min() < 0 or pairs[:, 1].max() >= n_checks:
                raise ValueError("check index out of range")
            if np.any(np.all(pairs[1:] == pairs[:-1], axis=1)):
                raise ValueError("repeated edge")
        self.n_vars = int(n_vars)
        self.n_checks = int(n_checks)
        self.edge_var = pairs[:, 0].copy()
        self.edge_check = pairs[:, 1].copy()
        vdeg = np.bincount(self.edge_var, minlength=n_vars)
        cdeg = np.bincount(self.edge_check, minlength=n_checks)
        if vdeg.min() < 1 or cdeg.min() < 1:
            raise ValueError("every node needs at least one edge")
        self.var_ptr = np.concatenate([[0], np.cumsum(vdeg)]).astype(np.int64)
        order = np.lexsort((self.edge_var, self.edge_check))
        self.chk_edges = order.astype(np.int64)
        self.chk_ptr = np.concatenate([[0], np.cumsum(cdeg)]).astype(np.int64)
        for arr in (self.edge_var, self.edge_check, self.var_ptr, self.chk_edges, self.chk_ptr):
            arr.setflags(write=False)

    @classmethod
    def from_dense(cls, H) -> "TannerGraph":
        H = np.asarray(H)
        rows, cols = np.nonzero(H)
        return cls(H.shape[1], H.shape[0], np.column_stack([cols, rows]))

    @property
    def n_edges(self) -> int:
        return self.edge_var.size

    @property
    def var_degrees(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    @property
    def check_degrees(self) -> np.ndarray:
        return np.diff(self.chk_ptr)

    @property
    def var_adj(self) -> list:
        return [self.edge_check[self.var_ptr[v] : self.var_ptr[v + 1]].tolist() for v in range(self.n_vars)]

    @property
    def check_adj(self) -> list:
        return [
            self.edge_var[self.chk_edges[self.chk_ptr[c] : self.chk_ptr[c + 1]]].tolist()
            for c in range(self.n_checks)
        ]

    @property
    def rate(self) -> float:
        """Design rate ``1 - m/n`` (assumes full-rank ``H``)."""
        return 1.0 - self.n_checks / self.n_vars

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.n_checks, self.n_vars), dtype=np.uint8)
        H[self.edge_check, self.edge_var] = 1
        return H

    def same_structure(self, other: "TannerGraph") -> bool:
        return (
            self.n_vars == other.n_vars
            and self.n_checks == other.n_checks
            and np.array_equal(self.edge_var, other.edge_var)
            and np.array_equal(self.edge_check, other.edge_check)
        )

    @cached_property
    def layout(self) -> "GraphLayout":
        return GraphLayout(self)

    def __repr__(self):
        return f"TannerGraph(n_vars={self.n_vars}, n_checks={self.n_checks}, n_edges={self.n_edges})"


class GraphLayout:
    """Contiguous index arrays and per-degree node groups consumed by the kernels."""

    def __init__(self, g: TannerGraph):
        self.n_vars = g.n_vars
        self.n_checks = g.n_checks
        self.var_ptr = np.ascontiguousarray(g.var_ptr, dtype=np.int64)
        self.chk_ptr = np.ascontiguousarray(g.chk_ptr, dtype=np.int64)
        self.chk_edges = np.ascontiguousarray(g.chk_edges, dtype=np.int64)
        self.edge_var = np.ascontiguousarray(g.edge_var, dtype=np.int64)
        self.max_check_degree = int(g.check_degrees.max())
        self.var_groups = {}
        vdeg = g.var_degrees
        for d in np.unique(vdeg):
            vars_ = np.flatnonzero(vdeg == d)
            self.var_groups[int(d)] = (vars_, self.var_ptr[vars_][:, None] + np.arange(d))
        self.check_groups = {}
        cdeg = g.check_degrees
        for d in np.unique(cdeg):
            checks = np.flatnonzero(cdeg == d)
            self.check_groups[int(d)] = self.chk_edges[self.chk_ptr[checks][:, None] + np.arange(d)]


def _int_tokens(line: str, lineno: int) -> list:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError:
        raise CodeParseError(f"non-integer token in {line.strip()!r}", lineno) from None


def parse_alist(text: str) -> TannerGraph:
    """Parse MacKay's alist format.

    Layout: ``n m``; max column and row degree; the ``n`` column degrees; the
    ``m`` row degrees; ``n`` lines of 1-based row indices per column; ``m``
    lines of 1-based column indices per row.  Zero entries are padding.
    """
    lines = [(no, ln) for no, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    pos = 0

    def take(section):
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 0
            raise CodeParseError(f"file ends before the {section}", last + 1)
        no, ln = lines[pos]
        pos += 1
        return no, _int_tokens(ln, no)

    no, head = take("header")
    if len(head) != 2 or min(head) < 1:
        raise CodeParseError("header must hold two positive counts 'n m'", no)
    n, m = head
    no, maxdeg = take("maximum degree line")
    if len(maxdeg) != 2:
        raise CodeParseError("expected the two maximum degrees", no)
    no, col_deg = take("column degree list")
    if len(col_deg) != n:
        raise CodeParseError(f"expected {n} column degrees, got {len(col_deg)}", no)
    no, row_deg = take("row degree list")
    if len(row_deg) != m:
        raise CodeParseError(f"expected {m} row degrees, got {len(row_deg)}", no)
    if max(col_deg) > maxdeg[0] or max(row_deg) > maxdeg[1]:
        raise CodeParseError("a node degree exceeds the stated maximum", no)
    if sum(col_deg) != sum(row_deg):
        raise CodeParseError("column and row degrees imply different edge counts", no)

    col_edges = set()
    for j in range(n):
        no, idx = take(f"column index lists (column {j + 1} of {n})")
        nz = [i for i in idx if i != 0]
        if len(nz) != col_deg[j]:
            raise CodeParseError(f"column {j + 1} lists {len(nz)} rows, degree says {col_deg[j]}", no)
        for i in nz:
            if not 1 <= i <= m:
                raise CodeParseError(f"row index {i} out of range 1..{m}", no)
            if (j, i - 1) in col_edges:
                raise CodeParseError(f"duplicate edge between column {j + 1} and row {i}", no)
            col_edges.add((j, i - 1))
    row_edges = set()
    for i in range(m):
        no, idx = take(f"row index lists (row {i + 1} of {m})")
        nz = [j for j in idx if j != 0]
        if len(nz) != row_deg[i]:
            raise CodeParseError(f"row {i + 1} lists {len(nz)} columns, degree says {row_deg[i]}", no)
        for j in nz:
            if not 1 <= j <= n:
                raise CodeParseError(f"column index {j} out of range 1..{n}", no)
            if (j - 1, i) in row_edges:
                raise CodeParseError(f"duplicate edge between row {i + 1} and column {j}", no)
            row_edges.add((j - 1, i))
    if col_edges != row_edges:
        raise CodeParseError("column lists and row lists describe different matrices", no)
    try:
        return TannerGraph(n, m, sorted(col_edges))
    except ValueError as exc:
        raise CodeParseError(str(exc)) from exc


def serialize_alist(g: TannerGraph) -> str:
    vdeg, cdeg = g.var_degrees, g.check_degrees
    out = [f"{g.n_vars} {g.n_checks}", f"{vdeg.max()} {cdeg.max()}"]
    out.append(" ".join(map(str, vdeg)))
    out.append(" ".join(map(str, cdeg)))
    for rows in g.var_adj:
        out.append(" ".join(str(r + 1) for r in rows + [-1] * (vdeg.max() - len(rows))))
    for cols in g.check_adj:
        out.append(" ".join(str(c + 1) for c in cols + [-1] * (cdeg.max() - len(cols))))
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class QcBaseMatrix:
    """Base matrix of a quasi-cyclic code; ``-1`` is the zero block."""

    entries: np.ndarray
    lift: int

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int64)
        if e.ndim != 2 or e.size == 0:
            raise ValueError("base matrix must be a non-empty 2-D array")
        if self.lift < 1:
            raise ValueError("lifting size must be positive")
        object.__setattr__(self, "entries", e)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


def parse_qc(text: str) -> QcBaseMatrix:
    """``rows cols Z`` followed by ``rows*cols`` shift values."""
    lines = [(no, ln) for no, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise CodeParseError("empty base-matrix file", 1)
    no, head = lines[0][0], _int_tokens(lines[0][1], lines[0][0])
    if len(head) != 3 or min(head) < 1:
        raise CodeParseError("header must be 'rows cols Z' with positive values", no)
    rows, cols, z = head
    vals = []
    for no, ln in lines[1:]:
        tok = _int_tokens(ln, no)
        for t in tok:
            if t < -1 or t >= z:
                raise CodeParseError(f"shift {t} outside -1..{z - 1}", no)
        vals += tok
    if len(vals) != rows * cols:
        raise CodeParseError(f"expected {rows * cols} base entries, got {len(vals)}", lines[-1][0])
    return QcBaseMatrix(np.array(vals).reshape(rows, cols), z)


def expand_qc(base: QcBaseMatrix) -> TannerGraph:
    """Replace each shift ``s`` by the ``Z x Z`` identity rotated right by ``s``."""
    z = base.lift
    e = base.entries
    if e.max() >= z or e.min() < -1:
        raise ValueError(f"shift values must lie in -1..{z - 1}")
    pairs = []
    for r, c in zip(*np.nonzero(e >= 0)):
        s = int(e[r, c])
        i = np.arange(z)
        pairs.append(np.column_stack([c * z + (i + s) % z, r * z + i]))
    return TannerGraph(base.cols * z, base.rows * z, np.concatenate(pairs))


def load_code(path, fmt: str | None = None) -> TannerGraph:
    """Load an alist (``.alist``) or QC base-matrix file (anything else, or ``fmt='qc'``)."""
    path = Path(path)
    text = path.read_text()
    if fmt is None:
        fmt = "alist" if path.suffix.lower() == ".alist" else "qc"
    if fmt == "alist":
        return parse_alist(text)
    if fmt == "qc":
        return expand_qc(parse_qc(text))
    raise ValueError(f"unknown code format {fmt!r}")


def ieee80211n_path() -> Path:
    return Path(str(resources.files("rcqldpc") / "data" / "ieee80211n_1296_r12.qc"))


def ieee80211n_1296() -> TannerGraph:
    """The IEEE 802.11n rate-1/2 code with Z = 54 (n = 1296)."""
    return load_code(ieee80211n_path())


def random_regular_graph(n_vars: int, dv: int, dc: int, seed: int = 0, max_tries: int = 1000) -> TannerGraph:
    """A ``(dv, dc)``-regular graph from the configuration model, without repeated edges.

    Sockets are matched by a seeded random permutation; permutations that
    would repeat an edge are redrawn.
    """
    if n_vars * dv % dc:
        raise ValueError("n_vars * dv must be divisible by dc")
    n_checks = n_vars * dv // dc
    var_sockets = np.repeat(np.arange(n_vars), dv)
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        chk_sockets = np.repeat(np.arange(n_checks), dc)[rng.permutation(n_vars * dv)]
        pairs = np.stack([var_sockets, chk_sockets], axis=1)
        if len(np.unique(pairs, axis=0)) == len(pairs):
            return TannerGraph(n_vars, n_checks, pairs)
    raise RuntimeError(f"no simple ({dv},{dc}) graph found in {max_tries} draws")


def degree_fractions(g: TannerGraph) -> tuple[dict, dict]:
    """Exact edge-perspective fractions ``({d: Fraction}, {d: Fraction})``."""
    e = g.n_edges
    lam = {int(d): Fraction(int(d) * c, e) for d, c in Counter(g.var_degrees.tolist()).items()}
    rho = {int(d): Fraction(int(d) * c, e) for d, c in Counter(g.check_degrees.tolist()).items()}
    return dict(sorted(lam.items())), dict(sorted(rho.items()))


def degree_distributions(g: TannerGraph) -> DegreeDistribution:
    lam, rho = degree_fractions(g)
    return DegreeDistribution({d: float(v) for d, v in lam.items()}, {d: float(v) for d, v in rho.items()})


def syndrome(g: TannerGraph, bits) -> tuple[bool, int]:
    """``(is_codeword, number of unsatisfied checks)`` for a hard decision."""
    bits = np.asarray(bits)
    if bits.shape != (g.n_vars,):
        raise ValueError(f"expected {g.n_vars} bits, got shape {bits.shape}")
    parity = np.bincount(g.edge_check, weights=(bits[g.edge_var] & 1), minlength=g.n_checks).astype(np.int64) & 1
    unsat = int(parity.sum())
    return unsat == 0, unsat


def has_four_cycle(g: TannerGraph) -> bool:
    H = g.to_dense().astype(np.int32)
    overlap = H @ H.T
    np.fill_diagonal(overlap, 0)
    return bool(overlap.max() > 1)
