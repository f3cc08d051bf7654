"""Protograph density evolution on the binary erasure channel."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .protograph import Protograph


@dataclass(frozen=True)
class DEConfig:
    max_iterations: int = 20_000
    residual_target: float = 1e-10
    bisection_tolerance: float = 1e-5
    # a run whose largest per-iteration change falls below this has reached a
    # non-zero fixed point and cannot converge
    stall_tolerance: float = 1e-15

    def __post_init__(self):
        if self.residual_target <= 0 or self.bisection_tolerance <= 0:
            raise ValueError("residual_target and bisection_tolerance must be positive")


@dataclass
class DEState:
    q: np.ndarray  # variable-to-check erasure probability per edge type
    p: np.ndarray  # check-to-variable erasure probability per edge type
    iteration: int = 0


class _Neighbourhoods:
    """Index tables listing, for every edge, the other edges sharing its node.

    Rows are padded with the sentinel index ``n_edges`` so a gather from an
    array extended by a neutral element (1.0 for products) gives the
    leave-one-out product in one vectorized call.
    """

    def __init__(self, p: Protograph):
        self.n_edges = p.n_edges
        self.at_var = self._others(p.edge_var, p.n_v)
        self.at_check = self._others(p.edge_check, p.n_c)

    def _others(self, owner: np.ndarray, n_nodes: int) -> np.ndarray:
        groups = [np.flatnonzero(owner == k) for k in range(n_nodes)]
        width = max(1, max(len(g) for g in groups) - 1)
        table = np.full((self.n_edges, width), self.n_edges, dtype=np.int64)
        for g in groups:
            for j, e in enumerate(g):
                others = np.delete(g, j)
                table[e, : len(others)] = others
        return table


class DensityEvolution:
    """Reusable DE engine for one protograph."""

    def __init__(self, p: Protograph):
        self.protograph = p

    @cached_property
    def _nb(self) -> _Neighbourhoods:
        return _Neighbourhoods(self.protograph)

    def initial_state(self) -> DEState:
        n = self.protograph.n_edges
        return DEState(np.ones(n), np.ones(n), 0)

    def step(self, eps: float, s: DEState) -> DEState:
        nb = self._nb
        p_ext = np.append(s.p, 1.0)
        q = eps * p_ext[nb.at_var].prod(axis=1)
        one_minus_q = np.append(1.0 - q, 1.0)
        p = 1.0 - one_minus_q[nb.at_check].prod(axis=1)
        return DEState(q, p, s.iteration + 1)

    def converges(self, eps: float, cfg: DEConfig = DEConfig()) -> tuple[bool, int]:
        nb = self._nb
        n = self.protograph.n_edges
        p_ext = np.ones(n + 1)
        omq_ext = np.ones(n + 1)
        q_prev = None
        for it in range(1, cfg.max_iterations + 1):
            q = eps * p_ext[nb.at_var].prod(axis=1)
            if q.max() < cfg.residual_target:
                return True, it
            omq_ext[:n] = 1.0 - q
            p_ext[:n] = 1.0 - omq_ext[nb.at_check].prod(axis=1)
            if q_prev is not None and np.abs(q_prev - q).max() < cfg.stall_tolerance:
                return False, it
            q_prev = q
        return False, cfg.max_iterations


def de_step(p: Protograph, eps: float, s: DEState) -> DEState:
    return DensityEvolution(p).step(eps, s)


def de_converges(p: Protograph, eps: float, cfg: DEConfig = DEConfig()) -> tuple[bool, int]:
    return DensityEvolution(p).converges(eps, cfg)


@dataclass(frozen=True)
class ThresholdResult:
    epsilon: float
    lo: float
    hi: float
    iterations: int  # DE iterations used at the last converging probe
    zero_threshold: bool = False


def threshold(p: Protograph, cfg: DEConfig = DEConfig()) -> ThresholdResult:
    """Bisection for the largest erasure probability at which DE converges.

    Keeps ``lo`` converging and ``hi`` failing until ``hi - lo`` drops below
    the bisection tolerance, then returns the midpoint.
    """
    de = DensityEvolution(p)
    lo, hi = 0.0, 1.0
    iters = 1
    ok, it = de.converges(hi, cfg)
    if ok:
        return ThresholdResult(1.0, 1.0, 1.0, it)
    floor = cfg.bisection_tolerance
    ok, it = de.converges(floor, cfg)
    if not ok:
        return ThresholdResult(0.0, 0.0, floor, it, zero_threshold=True)
    lo, iters = floor, it
    while hi - lo >= cfg.bisection_tolerance:
        mid = 0.5 * (lo + hi)
        ok, it = de.converges(mid, cfg)
        if ok:
            lo, iters = mid, it
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), lo, hi, iters)


@dataclass(frozen=True)
class ThresholdRow:
    L: int
    rate: Fraction
    epsilon: float
    shannon: float
    gap: float
    iterations: int
    zero_threshold: bool = False


def threshold_curve(family, L_list, cfg: DEConfig = DEConfig()) -> list[ThresholdRow]:
    """Threshold, capacity limit and gap ``(1 - R_L) - eps*`` for each ``L`` of a family."""
    rows = []
    for L in L_list:
        ens = family.terminated(L)
        res = threshold(ens.protograph, cfg)
        shannon = float(1 - ens.rate)
        rows.append(ThresholdRow(L, ens.rate, res.epsilon, shannon, shannon - res.epsilon,
                                 res.iterations, res.zero_threshold))
    return rows
