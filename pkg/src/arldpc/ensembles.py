"""Convolutional protographs (GCD method, edge spreading) and their termination."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .protograph import BaseMatrix, Protograph, ProtographError, build_protograph


class EnsembleWarning(UserWarning):
    """Construction succeeded but the result is structurally questionable."""


@dataclass(frozen=True)
class ConvolutionalProtograph:
    """Component submatrices ``B_0..B_ms`` of a protograph-based convolutional code."""

    components: tuple[BaseMatrix, ...]
    target_sum: BaseMatrix
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.components:
            raise ProtographError("need at least one component submatrix")
        shape = self.components[0].shape
        for i, comp in enumerate(self.components):
            if comp.shape != shape:
                raise ProtographError(f"component B_{i} has shape {comp.shape}, expected {shape}")
        if self.target_sum.shape != shape:
            raise ProtographError(f"target has shape {self.target_sum.shape}, components have {shape}")
        total = sum(c.entries for c in self.components)
        if not (total == self.target_sum.entries).all():
            raise ProtographError("component submatrices do not sum to the target base matrix")

    @property
    def m_s(self) -> int:
        return len(self.components) - 1

    @property
    def b_c(self) -> int:
        return self.components[0].n_c

    @property
    def b_v(self) -> int:
        return self.components[0].n_v


@dataclass(frozen=True)
class TerminatedEnsemble:
    protograph: Protograph
    L: int
    source: ConvolutionalProtograph
    rate: Fraction

    @property
    def rate_nonpositive(self) -> bool:
        return self.rate <= 0


def _zero_line_warnings(components: Sequence[BaseMatrix]) -> list[str]:
    out = []
    for i, comp in enumerate(components):
        B = comp.entries
        zr = np.flatnonzero(B.sum(axis=1) == 0)
        zc = np.flatnonzero(B.sum(axis=0) == 0)
        if len(zr):
            out.append(f"B_{i} has all-zero row(s) {zr.tolist()}")
        if len(zc):
            out.append(f"B_{i} has all-zero column(s) {zc.tolist()}")
    return out


def gcd_spread(J: int, K: int) -> ConvolutionalProtograph:
    """Split the all-``a`` (J/a x K/a) matrix into ``a = gcd(J, K)`` all-ones components."""
    if J < 2 or K <= J:
        raise ProtographError(f"need J >= 2 and K > J, got J={J}, K={K}")
    a = math.gcd(J, K)
    ones = BaseMatrix(np.ones((J // a, K // a), dtype=np.int64))
    notes = ()
    if a == 1:
        notes = ("disconnected: gcd = 1, so m_s = 0 and the convolutional protograph is not fully connected",)
        warnings.warn(notes[0], EnsembleWarning, stacklevel=2)
    return ConvolutionalProtograph(tuple([ones] * a), BaseMatrix(np.full(ones.shape, a)), notes)


def edge_spread(target: BaseMatrix, components: Sequence[BaseMatrix]) -> ConvolutionalProtograph:
    """Validate a decomposition of ``target`` into component submatrices."""
    components = tuple(c if isinstance(c, BaseMatrix) else BaseMatrix(np.asarray(c)) for c in components)
    if not isinstance(target, BaseMatrix):
        target = BaseMatrix(np.asarray(target))
    notes = tuple(_zero_line_warnings(components))
    conv = ConvolutionalProtograph(components, target, notes)
    for msg in notes:
        warnings.warn(msg, EnsembleWarning, stacklevel=2)
    return conv


def terminated_matrix(c: ConvolutionalProtograph, L: int) -> np.ndarray:
    """Block-banded (L+m_s)b_c x L b_v matrix with block (r, t) = B_{r-t}."""
    if L < 1:
        raise ProtographError(f"termination factor must be >= 1, got {L}")
    b_c, b_v, ms = c.b_c, c.b_v, c.m_s
    out = np.zeros(((L + ms) * b_c, L * b_v), dtype=np.int64)
    for t in range(L):
        for i, comp in enumerate(c.components):
            r = t + i
            out[r * b_c : (r + 1) * b_c, t * b_v : (t + 1) * b_v] = comp.entries
    return out


def terminate(c: ConvolutionalProtograph, L: int) -> TerminatedEnsemble:
    p = build_protograph(BaseMatrix(terminated_matrix(c, L)))
    return TerminatedEnsemble(p, L, c, terminated_rate_formula(c, L))


def terminated_rate_formula(c: ConvolutionalProtograph, L: int) -> Fraction:
    if L < 1:
        raise ProtographError(f"termination factor must be >= 1, got {L}")
    return 1 - Fraction((L + c.m_s) * c.b_c, L * c.b_v)


def average_check_degree(c: ConvolutionalProtograph, L: int) -> Fraction:
    edges = L * int(c.target_sum.entries.sum())
    return Fraction(edges, (L + c.m_s) * c.b_c)


def constraint_length(c: ConvolutionalProtograph) -> int:
    """Decoding constraint length in units of the lifting factor N."""
    return (c.m_s + 1) * c.b_v


@dataclass(frozen=True)
class FamilySpec:
    """A named family of terminated ensembles indexed by ``L``.

    ``kind`` is ``"gcd"`` (uses ``J``, ``K``) or ``"spread"`` (uses ``target``
    and ``components``). ``tabulated_as = (J, K, s)`` makes row ``L`` of the
    family the GCD ``(J, K)`` ensemble terminated at ``s * L`` instead of the
    family's own components terminated at ``L``; the staircase preset uses it
    because its tabulated rows are those terminations of the (3, 6) GCD band.
    """

    name: str
    kind: str
    J: int | None = None
    K: int | None = None
    target: BaseMatrix | None = None
    components: tuple[BaseMatrix, ...] = ()
    L_list: tuple[int, ...] = ()
    tabulated_as: tuple[int, int, int] | None = None
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.kind == "gcd":
            if self.J is None or self.K is None:
                raise ProtographError(f"family {self.name!r}: gcd families need J and K")
        elif self.kind == "spread":
            if self.target is None or not self.components:
                raise ProtographError(f"family {self.name!r}: spread families need target and components")
        else:
            raise ProtographError(f"family {self.name!r}: unknown kind {self.kind!r}")
        self.convolutional()  # validates the decomposition

    def convolutional(self) -> ConvolutionalProtograph:
        """The family's own convolutional protograph."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EnsembleWarning)
            if self.kind == "gcd":
                return gcd_spread(self.J, self.K)
            return edge_spread(self.target, self.components)

    def analysis_source(self) -> ConvolutionalProtograph:
        """Convolutional protograph whose terminations form the family's rows."""
        if self.tabulated_as is None:
            return self.convolutional()
        J, K, _ = self.tabulated_as
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EnsembleWarning)
            return gcd_spread(J, K)

    def termination_factor(self, L: int) -> int:
        return L if self.tabulated_as is None else self.tabulated_as[2] * L

    def terminated(self, L: int) -> TerminatedEnsemble:
        return terminate(self.analysis_source(), self.termination_factor(L))

    def rate(self, L: int) -> Fraction:
        return terminated_rate_formula(self.analysis_source(), self.termination_factor(L))

    @property
    def m_s(self) -> int:
        return self.convolutional().m_s


def _rows(*rows) -> BaseMatrix:
    return BaseMatrix(np.array(rows, dtype=np.int64))


_ONES_3x6 = BaseMatrix(np.ones((3, 6), dtype=np.int64))
_EX1_B0 = _rows([1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 1, 1])
_EX2_B0 = _rows([1, 1, 1, 0, 0, 0], [0, 1, 1, 1, 0, 0], [0, 0, 0, 1, 1, 1])
_EX4_B0 = _rows([1, 1, 0, 0, 0, 0], [1, 1, 1, 1, 0, 0], [1, 1, 1, 1, 1, 1])
_TABLE3_L = (2, 3, 4, 5, 6, 7, 8, 20)
GCD_PRESETS = ((3, 6), (4, 8), (5, 10), (3, 9), (3, 12), (4, 6))


def preset(example_id) -> FamilySpec:
    """Named families: edge-spreading examples ``1``-``4`` and ``"gcd(J,K)"`` families.

    Example 4 keeps its own staircase components (``m_s = 1``); its rows are the
    (3, 6) GCD band terminated at ``2L``, which has the same rate ``(L-1)/2L``.
    """
    key = str(example_id).replace(" ", "").lower()
    if key.startswith("example"):
        key = key[len("example"):]
    if key in ("1", "2", "4"):
        b0 = {"1": _EX1_B0, "2": _EX2_B0, "4": _EX4_B0}[key]
        return FamilySpec(
            name=f"example{key}",
            kind="spread",
            target=_ONES_3x6,
            components=(b0, _ONES_3x6 - b0),
            L_list=_TABLE3_L,
            tabulated_as=(3, 6, 2) if key == "4" else None,
        )
    if key == "3":
        return FamilySpec(name="example3", kind="spread", target=_rows([3, 3]),
                          components=(_rows([2, 1]), _rows([1, 2])), L_list=_TABLE3_L)
    for J, K in GCD_PRESETS:
        if key in (f"gcd({J},{K})", f"gcd-{J}-{K}", f"({J},{K})"):
            return FamilySpec(name=f"gcd({J},{K})", kind="gcd", J=J, K=K,
                              L_list=tuple(range(max(2, math.gcd(J, K)), 21)))
    raise ProtographError(f"unknown preset {example_id!r}")
