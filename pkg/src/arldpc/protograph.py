"""Protograph data model: base matrices with parallel edges, degrees, rates."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class ProtographError(ValueError):
    """Raised for malformed base matrices or invalid protograph operations."""


@dataclass(frozen=True, eq=False)
class BaseMatrix:
    """Non-negative integer biadjacency matrix; entry (x, y) counts edges c_x -- v_y."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.int64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ProtographError(f"base matrix must be 2-D and non-empty, got shape {arr.shape}")
        if (arr < 0).any():
            raise ProtographError("base matrix entries must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "BaseMatrix":
        return cls(np.array([list(r) for r in rows], dtype=np.int64))

    @property
    def n_c(self) -> int:
        return self.entries.shape[0]

    @property
    def n_v(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def tolist(self) -> list[list[int]]:
        return self.entries.tolist()

    def __eq__(self, other) -> bool:
        if not isinstance(other, BaseMatrix):
            return NotImplemented
        return self.shape == other.shape and bool((self.entries == other.entries).all())

    def __hash__(self) -> int:
        return hash((self.shape, self.entries.tobytes()))

    def __add__(self, other: "BaseMatrix") -> "BaseMatrix":
        return BaseMatrix(self.entries + other.entries)

    def __sub__(self, other: "BaseMatrix") -> "BaseMatrix":
        return BaseMatrix(self.entries - other.entries)

    def __repr__(self) -> str:
        return f"BaseMatrix({self.tolist()})"

    def to_text(self) -> str:
        """Render in the matrix literal format (header "n_c n_v", then rows)."""
        lines = [f"{self.n_c} {self.n_v}"]
        lines += [" ".join(str(v) for v in row) for row in self.tolist()]
        return "\n".join(lines) + "\n"


def parse_matrices(text: str) -> list[BaseMatrix]:
    """Parse one or more consecutive matrix literals.

    Each literal is a header line ``n_c n_v`` followed by ``n_c`` rows of
    ``n_v`` integers. Blank lines and ``#`` comments are ignored.
    """
    tokens: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens.append((lineno, line.split()))
    out = []
    i = 0
    while i < len(tokens):
        lineno, head = tokens[i]
        if len(head) != 2:
            raise ProtographError(f"line {lineno}: expected header 'n_c n_v', got {' '.join(head)!r}")
        try:
            n_c, n_v = int(head[0]), int(head[1])
        except ValueError:
            raise ProtographError(f"line {lineno}: non-integer header {' '.join(head)!r}") from None
        if n_c < 1 or n_v < 1:
            raise ProtographError(f"line {lineno}: dimensions must be positive")
        rows = tokens[i + 1 : i + 1 + n_c]
        if len(rows) < n_c:
            raise ProtographError(f"line {lineno}: expected {n_c} rows, found {len(rows)}")
        data = []
        for rl, row in rows:
            if len(row) != n_v:
                raise ProtographError(f"line {rl}: expected {n_v} entries, got {len(row)}")
            try:
                data.append([int(v) for v in row])
            except ValueError:
                raise ProtographError(f"line {rl}: non-integer entry in {' '.join(row)!r}") from None
        out.append(BaseMatrix(np.array(data, dtype=np.int64)))
        i += 1 + n_c
    return out


def parse_matrix(text: str) -> BaseMatrix:
    mats = parse_matrices(text)
    if len(mats) != 1:
        raise ProtographError(f"expected exactly one matrix literal, found {len(mats)}")
    return mats[0]


@dataclass(frozen=True)
class DegreeCensus:
    checks: dict[int, int]
    variables: dict[int, int]


@dataclass(frozen=True, eq=False)
class Protograph:
    """A protograph with its edge types enumerated.

    Edge types are listed row-major over the base matrix; an entry of
    multiplicity ``m`` contributes ``m`` consecutive edge types with slots
    ``0..m-1``. ``edge_check[e]`` and ``edge_var[e]`` give the endpoints of
    edge type ``e``.
    """

    base: BaseMatrix
    edge_types: tuple[tuple[int, int, int], ...] = field(repr=False)
    edge_check: np.ndarray = field(repr=False)
    edge_var: np.ndarray = field(repr=False)
    var_degrees: np.ndarray = field(repr=False)
    check_degrees: np.ndarray = field(repr=False)

    @property
    def n_c(self) -> int:
        return self.base.n_c

    @property
    def n_v(self) -> int:
        return self.base.n_v

    @property
    def n_edges(self) -> int:
        return len(self.edge_types)

    def check_edges(self, x: int) -> np.ndarray:
        return np.flatnonzero(self.edge_check == x)

    def var_edges(self, y: int) -> np.ndarray:
        return np.flatnonzero(self.edge_var == y)


def build_protograph(base: BaseMatrix | Sequence[Sequence[int]] | np.ndarray) -> Protograph:
    if not isinstance(base, BaseMatrix):
        base = BaseMatrix(np.asarray(base))
    B = base.entries
    if B.sum() == 0:
        raise ProtographError("base matrix has no edges")
    edges = []
    for x in range(base.n_c):
        for y in range(base.n_v):
            for slot in range(int(B[x, y])):
                edges.append((x, y, slot))
    edge_check = np.array([e[0] for e in edges], dtype=np.int64)
    edge_var = np.array([e[1] for e in edges], dtype=np.int64)
    var_deg = B.sum(axis=0)
    check_deg = B.sum(axis=1)
    for a in (edge_check, edge_var, var_deg, check_deg):
        a.setflags(write=False)
    return Protograph(base, tuple(edges), edge_check, edge_var, var_deg, check_deg)


def degree_census(p: Protograph) -> DegreeCensus:
    checks = Counter(int(d) for d in p.check_degrees)
    variables = Counter(int(d) for d in p.var_degrees)
    return DegreeCensus(dict(sorted(checks.items())), dict(sorted(variables.items())))


def design_rate(p: Protograph) -> Fraction:
    """Design rate ``1 - n_c/n_v``; may be non-positive for short terminations."""
    return 1 - Fraction(p.n_c, p.n_v)


def permute(p: Protograph, row_perm: Sequence[int], col_perm: Sequence[int]) -> Protograph:
    """Relabel checks and variables: new row i is old row ``row_perm[i]``."""
    row_perm = np.asarray(row_perm, dtype=np.int64)
    col_perm = np.asarray(col_perm, dtype=np.int64)
    if sorted(row_perm.tolist()) != list(range(p.n_c)):
        raise ProtographError(f"row_perm is not a permutation of range({p.n_c})")
    if sorted(col_perm.tolist()) != list(range(p.n_v)):
        raise ProtographError(f"col_perm is not a permutation of range({p.n_v})")
    return build_protograph(BaseMatrix(p.base.entries[row_perm][:, col_perm]))


def shannon_limit_bec(rate: Fraction | float) -> Fraction | float:
    """BEC capacity limit on the erasure probability for a given rate."""
    if rate < 0 or rate > 1:
        raise ValueError(f"rate must lie in [0, 1], got {rate}")
    return 1 - rate


def binary_entropy(p: float, base: float = 2.0) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    h = -p * math.log(p) - (1 - p) * math.log(1 - p)
    return h / math.log(base)


def gilbert_varshamov(rate: Fraction | float, tol: float = 1e-10) -> float:
    """Relative distance delta in (0, 1/2) with H_2(delta) = 1 - rate."""
    if not 0 < rate < 1:
        raise ValueError(f"rate must lie in (0, 1), got {rate}")
    target = 1.0 - float(rate)
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
