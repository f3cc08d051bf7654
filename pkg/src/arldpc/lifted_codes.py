"""Copy-and-permute lifting, GF(2) linear algebra and BEC peeling decoding."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .protograph import Protograph, ProtographError

MAX_LIFT_ATTEMPTS = 10_000


@dataclass(frozen=True, eq=False)
class LiftedCode:
    H: sp.csr_matrix
    N: int
    permutations: tuple[np.ndarray, ...] = field(repr=False)  # one per edge type, row i -> column perm[i]
    seed: int | None = None
    protograph: Protograph | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def m(self) -> int:
        return self.H.shape[0]


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def lift(p: Protograph, N: int, seed=None, disjoint: bool = True) -> LiftedCode:
    """Replace every edge type by an ``N x N`` permutation matrix.

    With ``disjoint=True`` (default) the ``m`` permutations of a base entry of
    multiplicity ``m`` are redrawn together until no two agree anywhere, so
    ``H`` stays 0/1 with exact row and column weights. With ``disjoint=False``
    they are independent and ``H`` is their sum modulo 2 (cancelling overlaps).
    """
    if N < 1:
        raise ProtographError(f"lifting factor must be positive, got {N}")
    B = p.base.entries
    if disjoint and N < B.max():
        raise ProtographError(f"N = {N} is smaller than the largest multiplicity {B.max()}")
    rng = _rng(seed)
    perms: list[np.ndarray] = []
    rows, cols = [], []
    arange = np.arange(N)
    for x in range(p.n_c):
        for y in range(p.n_v):
            m = int(B[x, y])
            if m == 0:
                continue
            for _attempt in range(MAX_LIFT_ATTEMPTS):
                block = [rng.permutation(N) for _ in range(m)]
                if not disjoint or m == 1:
                    break
                if _disjoint(np.stack(block)):
                    break
            else:
                raise ProtographError(f"no disjoint permutations found for entry ({x}, {y})")
            for perm in block:
                perms.append(perm)
                rows.append(x * N + arange)
                cols.append(y * N + perm)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    data = np.ones(len(r), dtype=np.int64)
    H = sp.csr_matrix((data, (r, c)), shape=(p.n_c * N, p.n_v * N))
    H.sum_duplicates()
    if not disjoint:
        H.data %= 2
        H.eliminate_zeros()
    H = H.astype(np.uint8)
    seed_val = seed if isinstance(seed, (int, np.integer)) else None
    return LiftedCode(H, N, tuple(perms), seed_val, p)


def _disjoint(stacked: np.ndarray) -> bool:
    """Whether permutations (rows of ``stacked``) never map a row to the same column."""
    s = np.sort(stacked, axis=0)
    return not (s[1:] == s[:-1]).any()


# ---------------------------------------------------------------------------
# GF(2)
# ---------------------------------------------------------------------------


def _dense_bits(H) -> np.ndarray:
    A = H.toarray() if sp.issparse(H) else np.asarray(H)
    return (A % 2).astype(bool)


def _row_reduce(A: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2); returns (matrix, pivot columns)."""
    A = A.copy()
    m, n = A.shape
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            A[[r, k]] = A[[k, r]]
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        A[others] ^= A[r]
        pivots.append(c)
        r += 1
    return A[:r], pivots


def gf2_rank(H) -> int:
    _, piv = _row_reduce(_dense_bits(H))
    return len(piv)


def nullspace(H) -> np.ndarray:
    """Basis of the GF(2) nullspace as rows of a 0/1 uint8 array."""
    A = _dense_bits(H)
    n = A.shape[1]
    R, piv = _row_reduce(A)
    free = [c for c in range(n) if c not in set(piv)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in enumerate(piv):
            if R[row, f]:
                basis[i, pc] = 1
    return basis


def actual_rate(code: LiftedCode) -> float:
    return 1.0 - gf2_rank(code.H) / code.n


# ---------------------------------------------------------------------------
# peeling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeelingResult:
    recovered: np.ndarray  # indices resolved by peeling
    residual: np.ndarray  # remaining erased indices: the maximal stopping set within the erasures
    iterations: int

    @property
    def success(self) -> bool:
        return self.residual.size == 0


def _as_mask(n: int, erased) -> np.ndarray:
    erased = np.asarray(erased)
    if erased.dtype == bool:
        if erased.shape != (n,):
            raise ValueError(f"erasure mask must have length {n}")
        return erased.copy()
    mask = np.zeros(n, dtype=bool)
    if erased.size:
        if erased.min() < 0 or erased.max() >= n:
            raise ValueError("erased index out of range")
        mask[erased.astype(np.int64)] = True
    return mask


def peeling_decode(code: LiftedCode | sp.spmatrix, erased, order_seed=None) -> PeelingResult:
    """Iteratively resolve erased symbols seen alone by some check.

    Default is flooding: every check with a single erased neighbour fires in
    the same round. With ``order_seed`` the checks fire one at a time in a
    random order instead; the residual set does not depend on the order.
    """
    H = code.H if isinstance(code, LiftedCode) else sp.csr_matrix(code)
    H = H.astype(np.int64).tocsr()
    n = H.shape[1]
    e = _as_mask(n, erased)
    start = e.copy()
    if order_seed is not None:
        return _peel_serial(H, start, e, _rng(order_seed))
    labels = np.arange(1, n + 1, dtype=np.int64)
    it = 0
    while True:
        ei = e.astype(np.int64)
        counts = H @ ei
        single = np.flatnonzero(counts == 1)
        if single.size == 0:
            break
        idx = H[single] @ (ei * labels) - 1
        e[idx] = False
        it += 1
    return PeelingResult(np.flatnonzero(start & ~e), np.flatnonzero(e), it)


def _peel_serial(H: sp.csr_matrix, start: np.ndarray, e: np.ndarray, rng) -> PeelingResult:
    Hc = H.tocsc()
    indptr, indices = H.indptr, H.indices
    counts = np.asarray(H @ e.astype(np.int64)).ravel()
    steps = 0
    while True:
        ready = np.flatnonzero(counts == 1)
        if ready.size == 0:
            break
        rng.shuffle(ready)
        for r in ready:
            if counts[r] != 1:
                continue
            nb = indices[indptr[r] : indptr[r + 1]]
            v = nb[e[nb]][0]
            e[v] = False
            steps += 1
            checks = Hc.indices[Hc.indptr[v] : Hc.indptr[v + 1]]
            np.subtract.at(counts, checks, 1)
    return PeelingResult(np.flatnonzero(start & ~e), np.flatnonzero(e), steps)


def is_stopping_set(H, S) -> bool:
    """No check has exactly one neighbour in ``S`` (the empty set counts)."""
    H = sp.csr_matrix(H).astype(np.int64)
    mask = _as_mask(H.shape[1], S)
    return not (H @ mask.astype(np.int64) == 1).any()


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationReport:
    epsilon: float
    trials: int
    failures: int
    block_failure_rate: float
    bit_erasure_rate: float  # residual erasures per code bit, averaged over trials
    half_width: float  # 95% Wilson interval half-width of the block failure rate
    seed: int
    N: int
    L: int | None = None


def wilson_half_width(failures: int, trials: int, z: float = 1.959963984540054) -> float:
    if trials <= 0:
        return math.nan
    p = failures / trials
    denom = 1 + z * z / trials
    return z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom


def trial_seed(master: int, trial: int) -> np.random.SeedSequence:
    """Seed of one trial, fixed by (master seed, trial index) alone."""
    return np.random.SeedSequence([int(master), int(trial)])


def _one_trial(args) -> tuple[bool, int]:
    p, N, eps, master, t = args
    rng = np.random.default_rng(trial_seed(master, t))
    code = lift(p, N, rng)
    erased = rng.random(code.n) < eps
    res = peeling_decode(code, erased)
    return (not res.success), int(res.residual.size)


def simulate_protograph(p: Protograph, N: int, eps: float, trials: int, seed: int = 0,
                        jobs: int = 1, L: int | None = None) -> SimulationReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability must lie in [0, 1], got {eps}")
    args = [(p, N, eps, seed, t) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_one_trial, args, chunksize=max(1, trials // (4 * jobs))))
    else:
        results = [_one_trial(a) for a in args]
    failures = sum(f for f, _ in results)
    residual = sum(r for _, r in results)
    n = p.n_v * N
    return SimulationReport(float(eps), trials, failures, failures / trials, residual / (trials * n),
                            wilson_half_width(failures, trials), seed, N, L)


def simulate(family, L: int, N: int, eps: float, trials: int, seed: int = 0, jobs: int = 1) -> SimulationReport:
    """Block failure rate of peeling on fresh lifts of ``family`` terminated at ``L``."""
    p = family.terminated(L).protograph
    return simulate_protograph(p, N, eps, trials, seed, jobs, L)


def export_sparse(H, path_or_file=None) -> str:
    """Sparse coordinate text: header ``rows cols nnz`` then one ``r c`` line per one."""
    H = sp.coo_matrix(H)
    order = np.lexsort((H.col, H.row))
    lines = [f"{H.shape[0]} {H.shape[1]} {H.nnz}"]
    lines += [f"{r} {c}" for r, c in zip(H.row[order], H.col[order])]
    text = "\n".join(lines) + "\n"
    if path_or_file is not None:
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w") as fh:
                fh.write(text)
    return text


def read_sparse(text: str) -> sp.csr_matrix:
    lines = [ln.split() for ln in text.strip().splitlines()]
    rows, cols, nnz = (int(v) for v in lines[0])
    rc = np.array([[int(a), int(b)] for a, b in lines[1:]], dtype=np.int64).reshape(-1, 2)
    if len(rc) != nnz:
        raise ValueError(f"header announces {nnz} entries, found {len(rc)}")
    return sp.csr_matrix((np.ones(nnz, dtype=np.uint8), (rc[:, 0], rc[:, 1])), shape=(rows, cols))
