"""Asymptotic weight enumerator (spectral shape) of protograph ensembles.

For weight fractions ``d_v`` on the variable nodes the ensemble-average
codeword count grows like ``exp(N * F(d))`` with

    F(d) = sum_c a_c(d restricted to c) - sum_v (deg(v) - 1) H(d_v)

where ``a_c`` is the exponent of the number of even-parity ``N x deg(c)``
binary arrays with prescribed column weights,

    a_c(d) = inf_{x > 0}  ln g_c(x) - sum_i d_i ln x_i,
    g_c(x) = (prod(1 + x_i) + prod(1 - x_i)) / 2.

The spectral shape is ``r(delta) = max F(d) / n_v`` over ``mean(d) = delta``
and the growth rate ``delta_min`` is its first positive zero. Logs are natural.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import entr, expit

from .protograph import Protograph

INNER_GTOL = 1e-12
# inner solutions with a larger final gradient are treated as failures
INNER_ACCEPT = 1e-6
NEG_INF = -math.inf
# log-coordinates are kept within this distance of the largest one, so the
# smallest weight fraction is ~e^-70 times the largest instead of underflowing
Z_SPAN = 70.0


def entropy(d):
    """Binary entropy in nats, elementwise; exact at 0 and 1."""
    d = np.asarray(d, dtype=float)
    return entr(d) + entr(1.0 - d)


def _entropy_slope(d):
    """ln((1 - d) / d), the derivative of the entropy."""
    return np.log1p(-d) - np.log(d)


def in_parity_polytope(d, slack: float = 0.0) -> bool:
    """Whether a column-weight profile lies in the convex hull of even-weight vectors."""
    d = np.asarray(d, dtype=float)
    if d.size == 0:
        return True
    return bool(_polytope_rows(d[None, :], slack)[0])


def _polytope_rows(D: np.ndarray, slack: float = 0.0) -> np.ndarray:
    """Row-wise parity-polytope membership.

    Uses the standard separation: the most violated odd-set inequality takes
    ``S = {i : d_i > 1/2}``, flipping the coordinate nearest 1/2 if ``|S|`` is even.
    """
    m, k = D.shape
    ok = (D >= -slack).all(axis=1) & (D <= 1 + slack).all(axis=1)
    if k == 1:
        return ok & (D[:, 0] <= slack)
    if k == 2:
        return ok & (np.abs(D[:, 0] - D[:, 1]) <= slack)
    inS = D > 0.5
    even = inS.sum(axis=1) % 2 == 0
    j = np.argmin(np.abs(D - 0.5), axis=1)
    rows = np.flatnonzero(even)
    inS[rows, j[rows]] = ~inS[rows, j[rows]]
    lhs = np.where(inS, D, -D).sum(axis=1)
    return ok & (lhs <= inS.sum(axis=1) - 1 + slack)


# ---------------------------------------------------------------------------
# inner problem: one check node
# ---------------------------------------------------------------------------


def _leave_one_out(a: np.ndarray) -> np.ndarray:
    """Products over the last axis with each position left out, without division."""
    ones = np.ones(a.shape[:-1] + (1,))
    pre = np.cumprod(np.concatenate([ones, a[..., :-1]], axis=-1), axis=-1)
    suf = np.cumprod(np.concatenate([ones, a[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    return pre * suf


def _inner_terms(S: np.ndarray, D: np.ndarray, want_hess: bool = True):
    """Value, gradient and Hessian of ``ln g(e^s) - d.s`` for a batch of checks.

    ``S`` and ``D`` have shape (m, k). Uses
    ``ln g = sum softplus(s_i) + ln((1 + P) / 2)``, ``P = (-1)^k prod tanh(s_i/2)``.
    """
    m, k = S.shape
    sig = expit(S)
    sigm = expit(-S)
    tau = sig - sigm  # tanh(s/2)
    dtau = 2.0 * sig * sigm  # d tau / d s
    sign = -1.0 if k % 2 else 1.0
    loo = _leave_one_out(tau)
    onep = 1.0 + sign * tau[:, 0] * loo[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.logaddexp(0.0, S).sum(axis=1) + np.log(0.5 * onep) - (D * S).sum(axis=1)
        T = sign * loo * dtau / onep[:, None]
    grad = sig + T - D
    if not want_hess:
        return val, grad, None
    # leave-two-out products: set entry i to 1, then leave one out
    tt = np.repeat(tau[:, None, :], k, axis=1)
    idx = np.arange(k)
    tt[:, idx, idx] = 1.0
    H = sign * _leave_one_out(tt) * dtau[:, :, None] * dtau[:, None, :]
    H[:, idx, idx] = -sign * loo * tau * dtau
    H /= onep[:, None, None]
    H -= T[:, :, None] * T[:, None, :]
    H[:, idx, idx] += sig * sigm
    return val, grad, H


def _solve_inner_batch(D: np.ndarray, S0: np.ndarray | None = None, max_iter: int = 100):
    """Damped Newton for a batch of same-degree checks (feasible, positive weights).

    Stops per row once the gradient is below ``INNER_GTOL`` or the Newton
    decrement reaches rounding level. Returns (values, minimizers s*, Hessians at s*,
    ok) where ``ok`` flags rows whose gradient is small and whose value respects
    the upper bound ``sum_i H(d_i)`` (even arrays are a subset of all arrays).
    """
    D = np.clip(D, 1e-300, 1 - 1e-15)
    S = np.log(D) - np.log1p(-D) if S0 is None else S0.copy()
    m, k = S.shape
    val, grad, H = _inner_terms(S, D)
    bad0 = ~np.isfinite(val)
    if bad0.any():
        S[bad0] = np.log(D[bad0]) - np.log1p(-D[bad0])
        val[bad0], grad[bad0], H[bad0] = _inner_terms(S[bad0], D[bad0])
    done = np.zeros(m, dtype=bool)
    for _ in range(max_iter):
        done |= np.abs(grad).max(axis=1) <= INNER_GTOL
        if done.all():
            break
        idx = np.flatnonzero(~done)
        Sa, Da, ga = S[idx], D[idx], grad[idx]
        try:
            step = -np.linalg.solve(H[idx], ga[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = -(np.linalg.pinv(H[idx], hermitian=True) @ ga[..., None])[..., 0]
        decrement = -(ga * step).sum(axis=1)
        # fall back to steepest descent where Newton is not a descent direction
        bad = ~np.isfinite(step).all(axis=1) | (decrement <= 0)
        step[bad] = -ga[bad]
        decrement[bad] = (ga[bad] ** 2).sum(axis=1)
        tiny = decrement < 1e-24 * (1.0 + np.abs(val[idx]))
        t = np.ones(len(idx))
        gnorm = np.abs(ga).max(axis=1)
        slack = 1e-13 * (1.0 + np.abs(val[idx]))
        newval, newgrad, _ = _inner_terms(Sa + step, Da, want_hess=False)
        fail = np.zeros(len(idx), dtype=bool)
        for _ls in range(40):
            # Armijo, or (at rounding level, where Armijo cannot be verified) no
            # increase beyond rounding together with a halved gradient
            armijo = newval <= val[idx] - 1e-4 * t * decrement
            rounding = (newval <= val[idx] + slack) & (np.abs(newgrad).max(axis=1) <= 0.5 * gnorm)
            fail = ~(armijo | rounding) | ~np.isfinite(newval)
            fail &= ~tiny
            if not fail.any():
                break
            t[fail] *= 0.5
            nv, ng, _ = _inner_terms(Sa[fail] + t[fail, None] * step[fail], Da[fail], want_hess=False)
            newval[fail] = nv
            newgrad[fail] = ng
        move = ~tiny & ~fail
        Snew = Sa[move] + t[move, None] * step[move]
        v2, g2, H2 = _inner_terms(Snew, Da[move])
        upd = idx[move]
        S[upd], val[upd], grad[upd], H[upd] = Snew, v2, g2, H2
        done[idx[~move]] = True
    ok = (np.abs(grad).max(axis=1) <= INNER_ACCEPT) & (val <= entropy(D).sum(axis=1) + 1e-9)
    return val, S, H, ok


@dataclass(frozen=True)
class CheckGrowth:
    value: float
    x: np.ndarray  # optimizing point; 0 on zero-weight edges, empty when infeasible


def check_growth(deltas) -> CheckGrowth:
    """Exponent ``a_c`` of the even-parity array count for one check node.

    ``deltas`` lists the column-weight fraction on each edge (parallel edges
    repeated). Zero-weight edges drop out; infeasible profiles (outside the
    parity polytope, e.g. a single odd edge) give ``value = -inf``.
    """
    d = np.asarray(deltas, dtype=float)
    if ((d < 0) | (d > 1)).any():
        raise ValueError("weight fractions must lie in [0, 1]")
    keep = d > 0.0
    dk = d[keep]
    x = np.zeros(d.size)
    if dk.size == 0:
        return CheckGrowth(0.0, x)
    if not in_parity_polytope(dk, slack=1e-12):
        return CheckGrowth(NEG_INF, np.array([]))
    if dk.size == 2:
        # both columns must be identical; the infimum is attained along
        # x1 * x2 = d / (1 - d), report the symmetric point
        if dk[0] >= 1.0:
            x[keep] = np.inf
            return CheckGrowth(0.0, x)
        x[keep] = math.sqrt(dk[0] / (1.0 - dk[0]))
        return CheckGrowth(float(entropy(dk[0])), x)
    if (dk >= 1.0).any():
        # full-weight columns are forced; complement them (parity of the rest flips)
        full = dk >= 1.0
        rest = dk[~full]
        if full.sum() % 2 == 1:
            rest = rest.copy()
            if rest.size == 0:
                return CheckGrowth(NEG_INF, np.array([]))
            rest[0] = 1.0 - rest[0]
        sub = check_growth(rest)
        x[keep] = np.inf
        return CheckGrowth(sub.value, x)
    val, S, _, _ = _solve_inner_batch(dk[None, :])
    x[keep] = np.exp(S[0])
    return CheckGrowth(float(val[0]), x)


# ---------------------------------------------------------------------------
# outer problem: maximize over variable-node weight fractions
# ---------------------------------------------------------------------------


class _Structure:
    """Reduction of a protograph to free weight groups.

    Degree-2 checks force their two endpoints to carry equal weight (the
    exponent is -inf otherwise), so endpoints are merged with union-find.
    Degree-1 checks force weight 0 on their variable's group.
    """

    def __init__(self, p: Protograph):
        n_v = p.n_v
        parent = list(range(n_v))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        zero = np.zeros(n_v, dtype=bool)
        deg2_vars = []
        big = []
        for c in range(p.n_c):
            vars_c = p.edge_var[p.edge_check == c].tolist()
            if len(vars_c) == 1:
                zero[vars_c[0]] = True
            elif len(vars_c) == 2:
                a, b = find(vars_c[0]), find(vars_c[1])
                if a != b:
                    parent[a] = b
                deg2_vars.append(vars_c[0])
            elif len(vars_c) >= 3:
                big.append(vars_c)
        roots = [find(v) for v in range(n_v)]
        zero_roots = {roots[v] for v in range(n_v) if zero[v]}
        free_roots = sorted({r for r in roots if r not in zero_roots}, key=roots.index)
        gid = {r: i for i, r in enumerate(free_roots)}
        self.n_v = n_v
        self.n_groups = len(free_roots)
        # group per variable; -1 marks forced-zero variables
        self.var_group = np.array([gid.get(r, -1) for r in roots], dtype=np.int64)
        vg = self.var_group
        self.group_size = np.bincount(vg[vg >= 0], minlength=self.n_groups).astype(float)
        self.var_degree = np.asarray(p.var_degrees, dtype=float)
        # coefficient of -H(y_g): sum of (deg - 1) over members minus degree-2 checks inside
        self.entropy_coef = np.zeros(self.n_groups)
        np.add.at(self.entropy_coef, vg[vg >= 0], self.var_degree[vg >= 0] - 1.0)
        for v in deg2_vars:
            if vg[v] >= 0:
                self.entropy_coef[vg[v]] -= 1.0
        # degree >= 3 checks bucketed by degree; forced-zero edges are removed
        by_deg: dict[int, list[list[int]]] = {}
        self.infeasible_structure = False
        for vars_c in big:
            rows = [int(vg[v]) for v in vars_c if vg[v] >= 0]
            if len(rows) >= 3:
                by_deg.setdefault(len(rows), []).append(rows)
            elif len(rows) == 1 or (len(rows) == 2 and rows[0] != rows[1]):
                # would need zero weight or a further tie; not produced by terminated families
                self.infeasible_structure = True
            elif len(rows) == 2:
                self.entropy_coef[rows[0]] -= 1.0
        self.buckets = {k: np.array(rows, dtype=np.int64) for k, rows in sorted(by_deg.items())}
        # mean column position of each group, used for localized starting points
        pos = np.zeros(self.n_groups)
        np.add.at(pos, vg[vg >= 0], np.flatnonzero(vg >= 0) / max(1, n_v - 1))
        self.group_pos = pos / np.maximum(self.group_size, 1)

    def expand(self, y: np.ndarray) -> np.ndarray:
        """Per-variable fractions from group values."""
        return np.append(y, 0.0)[self.var_group]

    def reduce(self, weights: np.ndarray) -> np.ndarray | None:
        """Group values from per-variable fractions, or None if ties are violated."""
        w = np.asarray(weights, dtype=float)
        vg = self.var_group
        if (w[vg < 0] != 0).any():
            return None
        y = np.zeros(self.n_groups)
        y[vg[vg >= 0]] = w[vg >= 0]
        if not np.allclose(self.expand(y), w, rtol=0, atol=1e-15):
            return None
        return y


@dataclass
class _Eval:
    value: float
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None
    inner_s: dict = field(default_factory=dict)


class SpectralShapeSolver:
    """Evaluates the spectral-shape objective and maximizes it at fixed mean weight.

    Maximization runs in log-coordinates ``z`` with ``y = T exp(z) / sum(n exp(z))``,
    which holds the total weight ``T`` fixed and lets groups collapse towards
    zero weight smoothly (low-weight codewords of terminated chains are
    localized, so many groups sit at the zero boundary at the optimum).
    """

    def __init__(self, p: Protograph, n_starts: int = 16, seed: int = 0, tol: float = 1e-10,
                 max_iter: int = 200):
        self.protograph = p
        self.st = _Structure(p)
        self.n_starts = n_starts
        self.seed = seed
        self.tol = tol
        self.max_iter = max_iter

    # -- objective ---------------------------------------------------------

    def feasible(self, y: np.ndarray) -> bool:
        if (y <= 0).any() or (y >= 1).any():
            return False
        for rows in self.st.buckets.values():
            if not _polytope_rows(y[rows]).all():
                return False
        return True

    def evaluate(self, y: np.ndarray, order: int = 2, warm: dict | None = None) -> _Eval:
        """Objective ``F`` (not divided by n_v) at strictly positive group values ``y``."""
        st = self.st
        total = -float((st.entropy_coef * entropy(y)).sum())
        grad = -st.entropy_coef * _entropy_slope(y) if order >= 1 else None
        hess = np.diag(st.entropy_coef / (y * (1 - y))) if order >= 2 else None
        inner_s = {}
        for k, rows in st.buckets.items():
            D = y[rows]
            S0 = None if warm is None else warm.get(k)
            val, S, H, ok = _solve_inner_batch(D, S0)
            if not ok.all():
                return _Eval(NEG_INF, None, None, {})
            inner_s[k] = S
            total += float(val.sum())
            if grad is not None:
                np.add.at(grad, rows.ravel(), -S.ravel())
            if hess is not None:
                try:
                    Hinv = np.linalg.inv(H)
                except np.linalg.LinAlgError:
                    # a saturated check (weights at rounding level) has a flat direction
                    Hinv = np.linalg.pinv(H, hermitian=True)
                m, kk = rows.shape
                gi = np.repeat(rows, kk, axis=1).ravel()
                gj = np.tile(rows, (1, kk)).ravel()
                np.add.at(hess, (gi, gj), -Hinv.reshape(m, kk * kk).ravel())
        return _Eval(total, grad, hess, inner_s)

    # -- maximization ------------------------------------------------------

    def _y_of_z(self, z: np.ndarray, total: float) -> np.ndarray:
        e = np.exp(z - z.max())
        return total * e / (self.st.group_size @ e)

    def _z_derivs(self, y: np.ndarray, total: float, ev: _Eval):
        """Gradient and Hessian of F(y(z)) with respect to z."""
        n = self.st.group_size
        u = n * y / total
        g = ev.grad
        w = g * y
        sw = w.sum()
        gz = w - u * sw
        J = np.diag(y) - np.outer(y, u)
        Hz = J.T @ ev.hess @ J
        Hz += np.diag(w - sw * u) - np.outer(u, w) - np.outer(w, u) + 2.0 * sw * np.outer(u, u)
        return gz, 0.5 * (Hz + Hz.T)

    def local_max(self, y0: np.ndarray) -> tuple[float, np.ndarray, bool]:
        """Modified-Newton ascent in log-coordinates from a feasible start.

        Converged when the predicted gain of a Newton step (the Newton
        decrement) drops below ``tol`` relative to the objective scale.
        """
        n = self.st.group_size
        total = float(n @ y0)
        if self.st.n_groups <= 1:
            return self.evaluate(y0, order=0).value, y0, True
        z = np.log(y0)
        z = np.maximum(z, z.max() - Z_SPAN)
        y = self._y_of_z(z, total)
        ev = self.evaluate(y)
        if not math.isfinite(ev.value):
            return ev.value, y, False
        scale = 1.0 + abs(ev.value)
        stalled = 0
        for _ in range(self.max_iter):
            gz, Hz = self._z_derivs(y, total, ev)
            lam, V = np.linalg.eigh(Hz)
            floor = 1e-8 * max(1.0, np.abs(lam).max())
            proj = V.T @ gz
            coef = proj / np.maximum(np.abs(lam), floor)
            gain = float(coef @ proj)
            if gain < self.tol * scale:
                return ev.value, y, True
            # near-converged: the predicted gain may sit above tol only because the
            # gradient is limited by the inner solves' precision
            near = gain < 1e4 * self.tol * scale
            step = V @ coef
            # keep each iteration to a bounded move in log-coordinates
            t = min(1.0, 20.0 / max(1e-300, np.abs(step).max()))
            accepted = False
            for _ls in range(20):
                zn = z + t * step
                zn = np.maximum(zn, zn.max() - Z_SPAN)
                yn = self._y_of_z(zn, total)
                if self.feasible(yn):
                    evn = self.evaluate(yn, warm=ev.inner_s)
                    if evn.value >= ev.value + 1e-4 * t * gain:
                        accepted = True
                        break
                t *= 0.5
            if not accepted:
                return ev.value, y, near
            stalled = stalled + 1 if evn.value - ev.value < 1e-12 * scale else 0
            z, y, ev = zn, yn, evn
            if stalled >= 2 and near:
                return ev.value, y, True
        return ev.value, y, False

    def feasible_start(self, y: np.ndarray, delta: float) -> np.ndarray | None:
        """Rescale ``y`` to mean ``delta`` and pull it towards uniform until feasible."""
        st = self.st
        uniform = np.full(st.n_groups, st.n_v * delta / st.group_size.sum())
        if not self.feasible(uniform):
            return None
        y = y * (st.n_v * delta) / (st.group_size @ y)
        lam = 1.0
        while lam > 1e-6:
            cand = lam * y + (1 - lam) * uniform
            if self.feasible(cand):
                return cand
            lam *= 0.5
        return uniform

    def starts(self, delta: float) -> list[np.ndarray]:
        """Uniform, chain-end-localized, and random feasible starting profiles."""
        st = self.st
        raw = [np.ones(st.n_groups)]
        pos = st.group_pos
        for rate in (4.0, 12.0, 30.0):
            raw.append(np.exp(-rate * pos))
            raw.append(np.exp(-rate * (1.0 - pos)))
            raw.append(np.exp(-rate * np.minimum(pos, 1.0 - pos)))
        rng = np.random.default_rng(self.seed)
        while len(raw) < self.n_starts:
            raw.append(rng.exponential(size=st.n_groups))
        out = []
        for y in raw[: max(self.n_starts, 1)]:
            s = self.feasible_start(y, delta)
            if s is not None:
                out.append(s)
        return out

    def maximize(self, delta: float, extra_starts=None, n_starts: int | None = None):
        """Best local maximum over the starts. Returns (F, y, converged)."""
        best = (NEG_INF, None, False)
        starts = self.starts(delta)
        if n_starts is not None:
            starts = starts[:n_starts]
        for y0 in list(extra_starts or []) + starts:
            y0 = self.feasible_start(np.asarray(y0, dtype=float), delta)
            if y0 is None:
                continue
            val, y, conv = self.local_max(y0)
            if not math.isfinite(val):
                continue
            if best[1] is None or val > best[0] + 1e-14:
                best = (val, y, conv)
        return best


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralPoint:
    delta: float
    r: float
    weights: np.ndarray  # per-variable weight fractions at the maximizer
    converged: bool


def objective(p: Protograph, weights, with_grad: bool = False):
    """Spectral-shape objective ``F(d) / n_v`` at per-variable fractions ``weights``.

    With ``with_grad`` also returns the envelope gradient
    ``-sum_{e at v} ln x*_e - (deg(v) - 1) ln((1 - d_v)/d_v)``, divided by ``n_v``
    (requires every check degree >= 3 and interior weights).
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (p.n_v,):
        raise ValueError(f"expected {p.n_v} weights, got shape {w.shape}")
    if ((w < 0) | (w > 1)).any():
        raise ValueError("weights must lie in [0, 1]")
    total = -float(((p.var_degrees - 1) * entropy(w)).sum())
    grad = None
    if with_grad:
        if (p.check_degrees < 3).any() or ((w <= 0) | (w >= 1)).any():
            raise ValueError("gradient needs check degrees >= 3 and interior weights")
        grad = -(p.var_degrees - 1) * _entropy_slope(w)
    for c in range(p.n_c):
        edges = np.flatnonzero(p.edge_check == c)
        if edges.size == 0:
            continue
        cg = check_growth(w[p.edge_var[edges]])
        if not np.isfinite(cg.value):
            return (NEG_INF, None) if with_grad else NEG_INF
        total += cg.value
        if grad is not None:
            np.add.at(grad, p.edge_var[edges], -np.log(cg.x))
    if with_grad:
        return total / p.n_v, grad / p.n_v
    return total / p.n_v


def spectral_shape(p: Protograph, delta: float, n_starts: int = 16, seed: int = 0,
                   solver: SpectralShapeSolver | None = None, extra_starts=None) -> SpectralPoint:
    """Spectral shape ``r(delta)`` with its maximizing weight profile."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if delta == 0.0:
        return SpectralPoint(0.0, 0.0, np.zeros(p.n_v), True)
    if delta == 1.0:
        r = 0.0 if (p.check_degrees % 2 == 0).all() else NEG_INF
        return SpectralPoint(1.0, r, np.ones(p.n_v), True)
    solver = solver or SpectralShapeSolver(p, n_starts=n_starts, seed=seed)
    if solver.st.infeasible_structure:
        return SpectralPoint(delta, NEG_INF, np.zeros(p.n_v), True)
    val, y, conv = solver.maximize(delta, extra_starts=extra_starts)
    if y is None:
        return SpectralPoint(delta, NEG_INF, np.zeros(p.n_v), False)
    return SpectralPoint(delta, val / p.n_v, solver.st.expand(y), conv)


def default_delta_grid(n: int = 400) -> np.ndarray:
    """Geometric-then-linear grid over (1e-4, 0.5]."""
    n_geo = n * 3 // 10
    geo = np.geomspace(1e-4, 0.02, n_geo, endpoint=False)
    lin = np.linspace(0.02, 0.5, n - n_geo)
    return np.concatenate([geo, lin])


@dataclass(frozen=True)
class GrowthRateResult:
    delta_min: float | None
    bracket: tuple[float, float] | None
    asymptotically_good: bool
    status: str  # "ok", "no-crossing", "not-converged"
    evaluations: int = 0


def delta_min(p: Protograph, tol: float = 1e-5, grid: np.ndarray | None = None, n_starts: int = 16,
              scan_starts: int = 4, seed: int = 0, coarse_stride: int = 10) -> GrowthRateResult:
    """First positive zero of the spectral shape.

    The grid is walked in strides of ``coarse_stride`` and then point by point
    inside the first stride where ``r`` turns non-negative; these scan
    evaluations use continuation from the previous maximizer plus
    ``scan_starts`` structured starts. The lower bracket point is confirmed
    with the full multistart (stepping back along the grid if it fails), and
    the bracket is then bisected to width ``tol``. The final lower end is
    confirmed with full multistart again.
    """
    grid = default_delta_grid() if grid is None else np.asarray(grid, dtype=float)
    solver = SpectralShapeSolver(p, n_starts=n_starts, seed=seed)
    if solver.st.infeasible_structure:
        return GrowthRateResult(None, None, False, "no-crossing", 0)
    evals = 0
    all_conv = True

    def point(d, warm, n=None):
        nonlocal evals, all_conv
        evals += 1
        extra = [w for w in (solver.st.reduce(x) for x in warm if x is not None) if w is not None]
        val, y, conv = solver.maximize(d, extra_starts=extra, n_starts=n)
        all_conv &= conv
        if y is None:
            return SpectralPoint(d, NEG_INF, np.zeros(p.n_v), False)
        return SpectralPoint(d, val / p.n_v, solver.st.expand(y), conv)

    # coarse walk, then fine walk inside the first non-negative stride
    coarse = list(range(0, len(grid), coarse_stride))
    if coarse[-1] != len(grid) - 1:
        coarse.append(len(grid) - 1)
    prev = None
    last_neg_idx = None
    first_pos_idx = None
    for i in coarse:
        pt = point(grid[i], [None if prev is None else prev.weights], scan_starts)
        if pt.r >= 0:
            first_pos_idx = i
            break
        prev, last_neg_idx = pt, i
    if first_pos_idx is None:
        return GrowthRateResult(None, None, True, "no-crossing", evals)
    if last_neg_idx is None:
        # non-negative already at the smallest grid value: not asymptotically good
        return GrowthRateResult(None, None, False, "ok", evals)
    lo_pt, hi_pt = prev, None
    for i in range(last_neg_idx + 1, first_pos_idx + 1):
        pt = point(grid[i], [lo_pt.weights], scan_starts)
        if pt.r >= 0:
            hi_pt = pt
            break
        lo_pt = pt
    if hi_pt is None:
        hi_pt = point(grid[first_pos_idx], [lo_pt.weights], scan_starts)

    # confirm the lower end with full multistart; step back along the grid if needed
    idx = int(np.searchsorted(grid, lo_pt.delta))
    lo_full = point(lo_pt.delta, [lo_pt.weights, hi_pt.weights])
    while lo_full.r >= 0:
        hi_pt = lo_full
        idx -= 1
        if idx < 0:
            return GrowthRateResult(None, None, False, "ok", evals)
        lo_full = point(grid[idx], [lo_full.weights])
    lo_pt = lo_full

    for _attempt in range(4):
        lo, hi = lo_pt.delta, hi_pt.delta
        w_lo, w_hi = lo_pt.weights, hi_pt.weights
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            sp = point(mid, [w_lo, w_hi], scan_starts)
            if sp.r < 0:
                lo, w_lo = mid, sp.weights
            else:
                hi, w_hi = mid, sp.weights
        check = point(lo, [w_lo, w_hi])
        if check.r < 0:
            break
        # a better maximizer turned up at the lower end; the crossing is further left
        hi_pt = check
        while lo_pt.r >= 0 or lo_pt.delta >= hi_pt.delta:
            idx = max(idx - 1, 0)
            lo_pt = point(grid[idx], [check.weights])
            if idx == 0:
                break
    status = "ok" if all_conv else "not-converged"
    return GrowthRateResult(0.5 * (lo + hi), (lo, hi), True, status, evals)


def scaled_growth(delta_min_value: float, L: int, m_s: int) -> float:
    """Growth rate scaled by ``L / (m_s + 1)``."""
    if L < 1:
        raise ValueError("L must be >= 1")
    return delta_min_value * L / (m_s + 1)


def estimate_growth_large_L(scaled_limit: float, L: int, m_s: int) -> float:
    """Growth-rate estimate ``scaled_limit * (m_s + 1) / L`` from a converged scaled value."""
    if scaled_limit <= 0 or L < 1:
        raise ValueError("need scaled_limit > 0 and L >= 1")
    return scaled_limit * (m_s + 1) / L


# ---------------------------------------------------------------------------
# exact finite-N ensemble average
# ---------------------------------------------------------------------------

MAX_EXACT_N = 32
MAX_EXACT_EDGES = 16
MAX_EXACT_PROFILES = 2_000_000


def krawtchouk(w: int, j: int, N: int) -> int:
    """Binary Krawtchouk polynomial ``K_w(j) = sum_l (-1)^l C(j, l) C(N - j, w - l)``."""
    return sum((-1) ** l * math.comb(j, l) * math.comb(N - j, w - l) for l in range(0, min(w, j) + 1))


def even_array_count(weights, N: int) -> int:
    """Number of ``N x k`` binary arrays with column weights ``weights`` and every row even.

    Character sum over the row-parity constraints:
    ``2^-N sum_j C(N, j) prod_i K_{w_i}(j)``.
    """
    weights = [int(w) for w in weights]
    if any(w < 0 or w > N for w in weights):
        return 0
    total = 0
    for j in range(N + 1):
        term = math.comb(N, j)
        for w in weights:
            term *= krawtchouk(w, j, N)
            if term == 0:
                break
        total += term
    q, r = divmod(total, 2**N)
    assert r == 0
    return q


def even_array_count_dp(weights, N: int) -> int:
    """Same count by dynamic programming over rows (state: remaining column weights)."""
    weights = tuple(int(w) for w in weights)
    k = len(weights)
    if any(w < 0 or w > N for w in weights):
        return 0
    if k == 0:
        return 1
    even_rows = [r for r in range(2**k) if bin(r).count("1") % 2 == 0]
    bits = [tuple((r >> i) & 1 for i in range(k)) for r in even_rows]
    states = {weights: 1}
    for row in range(N):
        left = N - row - 1
        nxt: dict[tuple[int, ...], int] = {}
        for st, cnt in states.items():
            for b in bits:
                ns = tuple(s - bi for s, bi in zip(st, b))
                if min(ns) < 0 or max(ns) > left:
                    continue
                nxt[ns] = nxt.get(ns, 0) + cnt
        states = nxt
    return states.get((0,) * k, 0)


def exact_average_enumerator(p: Protograph, N: int, counter=even_array_count) -> dict[int, Fraction]:
    """Ensemble-average number of codewords of each weight over independent uniform lifts.

    Every edge type carries an independent uniformly random permutation (parallel
    edges included, with the lifted matrix taken modulo 2). The average is
    ``sum_{w_v} prod_v C(N, w_v) prod_c A_c / prod_e C(N, w_{v(e)})`` grouped by
    total weight ``sum w_v``.
    """
    if N < 1 or N > MAX_EXACT_N:
        raise ValueError(f"N must lie in 1..{MAX_EXACT_N}, got {N}")
    if p.n_edges > MAX_EXACT_EDGES:
        raise ValueError(f"protograph has {p.n_edges} edge types, limit is {MAX_EXACT_EDGES}")
    if (N + 1) ** p.n_v > MAX_EXACT_PROFILES:
        raise ValueError("too many weight profiles for exact enumeration")
    B = p.base.entries
    binom = [math.comb(N, w) for w in range(N + 1)]
    cache: dict[tuple[int, ...], int] = {}

    def check_count(ws: tuple[int, ...]) -> int:
        key = tuple(sorted(ws))
        if key not in cache:
            cache[key] = counter(key, N)
        return cache[key]

    out: dict[int, Fraction] = {}
    for prof in itertools.product(range(N + 1), repeat=p.n_v):
        num = 1
        den = 1
        for y, w in enumerate(prof):
            num *= binom[w]
            den *= binom[w] ** int(p.var_degrees[y])
        for x in range(p.n_c):
            ws = tuple(w for y, w in enumerate(prof) for _ in range(int(B[x, y])))
            a = check_count(ws)
            if a == 0:
                num = 0
                break
            num *= a
        if num == 0:
            continue
        tot = sum(prof)
        out[tot] = out.get(tot, Fraction(0)) + Fraction(num, den)
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class ConsistencyRow:
    N: int
    weight: int
    finite_exponent: float  # ln(A_w) / (N n_v)
    asymptotic: float  # r(delta)
    gap: float


def spectral_consistency(p: Protograph, N_list, delta: float, **spectral_kw) -> list[ConsistencyRow]:
    """Compare ``ln A_w / (N n_v)`` near ``w = delta N n_v`` with ``r(w / (N n_v))``.

    When the average count at ``round(delta N n_v)`` is zero (e.g. parity forces
    even total weight) the nearest weight with a non-zero count is used, and the
    asymptotic side is evaluated at that weight's exact fraction. ``N`` values
    with no usable weight are skipped.
    """
    rows = []
    for N in N_list:
        A = exact_average_enumerator(p, N)
        n = N * p.n_v
        target = delta * n
        cands = [w for w, a in A.items() if a > 0]
        if not cands:
            continue
        w = min(cands, key=lambda v: (abs(v - target), v))
        d = w / n
        r = 0.0 if w == 0 else spectral_shape(p, d, **spectral_kw).r
        fin = math.log(A[w]) / n
        rows.append(ConsistencyRow(N, w, fin, r, fin - r))
    return rows
