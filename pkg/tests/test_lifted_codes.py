import io

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from arldpc.ensembles import preset
from arldpc.lifted_codes import (
    actual_rate,
    export_sparse,
    gf2_rank,
    is_stopping_set,
    lift,
    nullspace,
    peeling_decode,
    read_sparse,
    simulate,
    simulate_protograph,
    trial_seed,
    wilson_half_width,
)
from arldpc.protograph import ProtographError, build_protograph, degree_census

from oracles import gf2_rank_brute, maximal_stopping_set


def test_single_permutation():
    code = lift(build_protograph([[1]]), 7, seed=1)
    H = code.H.toarray()
    assert (H.sum(axis=0) == 1).all() and (H.sum(axis=1) == 1).all()


def test_disjoint_parallel_edges():
    code = lift(build_protograph([[3, 3]]), 5, seed=2)
    H = code.H.toarray()
    assert H.max() == 1
    for blk in (H[:, :5], H[:, 5:]):
        assert (blk.sum(axis=0) == 3).all() and (blk.sum(axis=1) == 3).all()


def test_lift_rejects_small_N():
    with pytest.raises(ProtographError):
        lift(build_protograph([[3, 3]]), 2, seed=0)
    lift(build_protograph([[3, 3]]), 2, seed=0, disjoint=False)  # allowed: overlaps cancel mod 2


def test_example1_lift_weights():
    p = preset(1).terminated(4).protograph
    code = lift(p, 100, seed=3)
    H = code.H
    assert H.shape == (1500, 2400)
    assert (np.asarray(H.sum(axis=0)).ravel() == 3).all()
    rows = np.asarray(H.sum(axis=1)).ravel()
    census = {int(k): int(v) for k, v in zip(*np.unique(rows, return_counts=True))}
    assert census == {d: 100 * n for d, n in degree_census(p).checks.items()}


def test_lift_is_deterministic():
    p = preset(2).terminated(3).protograph
    a, b = lift(p, 50, seed=11), lift(p, 50, seed=11)
    assert (a.H != b.H).nnz == 0
    assert (a.H != lift(p, 50, seed=12).H).nnz > 0


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(1, 3), (2, 2), (3, 2), (4, 3)]), st.integers(3, 40), st.integers(0, 10**6))
def test_column_weight_exact(fam_L, N, seed):
    f, L = fam_L
    p = preset(f).terminated(L).protograph
    H = lift(p, N, seed=seed).H
    assert H.max() == 1
    assert (np.asarray(H.sum(axis=0)).ravel() == 3).all()


def test_gf2_basics():
    assert gf2_rank(np.eye(5, dtype=int)) == 5
    assert nullspace(np.eye(5, dtype=int)).shape == (0, 5)
    assert gf2_rank([[1, 1]]) == 1
    assert nullspace([[1, 1]]).tolist() == [[1, 1]]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 10), st.integers(0, 10**6))
def test_gf2_against_enumeration(m, n, seed):
    H = np.random.default_rng(seed).integers(0, 2, (m, n))
    r = gf2_rank(H)
    assert r == gf2_rank_brute(H)
    N = nullspace(H)
    assert N.shape == (n - r, n)
    assert not ((N.astype(int) @ H.T) % 2).any()
    assert gf2_rank(N) == n - r


def test_lifted_rate_at_least_design_rate():
    p = preset(3).terminated(3).protograph
    code = lift(p, 20, seed=0)
    from arldpc.protograph import design_rate

    assert actual_rate(code) >= float(design_rate(p))
    basis = nullspace(code.H)
    assert not ((basis.astype(int) @ code.H.toarray().T) % 2).any()


def test_peeling_trivial_cases():
    code = lift(preset(1).terminated(3).protograph, 10, seed=0)
    r = peeling_decode(code, np.array([], dtype=int))
    assert r.success and r.iterations == 0
    H = np.array([[1, 0, 0], [1, 1, 0], [0, 1, 1]])
    r = peeling_decode(sp.csr_matrix(H), [0, 1, 2])
    assert r.success and 0 in r.recovered
    with pytest.raises(ValueError):
        peeling_decode(sp.csr_matrix(H), [5])


def test_residual_independent_of_order():
    code = lift(preset(1).terminated(4).protograph, 60, seed=4)
    rng = np.random.default_rng(0)
    erased = np.flatnonzero(rng.random(code.n) < 0.6)
    ref = peeling_decode(code, erased)
    assert not ref.success  # well above threshold, so a stopping set remains
    for k in range(20):
        r = peeling_decode(code, erased, order_seed=k)
        assert (r.residual == ref.residual).all()
    assert is_stopping_set(code.H, ref.residual)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.2, 0.8))
def test_peeling_vs_brute_force_stopping_sets(seed, eps):
    code = lift(build_protograph([[2, 1], [1, 2]]), 3, seed=seed)
    H = code.H.toarray().astype(int)
    rng = np.random.default_rng(seed)
    erased = np.flatnonzero(rng.random(code.n) < eps)
    res = peeling_decode(code, erased)
    assert set(res.residual.tolist()) == maximal_stopping_set(H, erased)


def test_sparse_roundtrip(tmp_path):
    H = lift(preset(3).terminated(2).protograph, 5, seed=1).H
    text = export_sparse(H)
    first = text.splitlines()[0].split()
    assert first == [str(H.shape[0]), str(H.shape[1]), str(H.nnz)]
    assert (read_sparse(text) != H).nnz == 0
    path = tmp_path / "h.txt"
    export_sparse(H, str(path))
    assert path.read_text() == text
    buf = io.StringIO()
    export_sparse(H, buf)
    assert buf.getvalue() == text


def test_simulation_zero_channel_and_determinism():
    f = preset("gcd(3,6)")
    r = simulate(f, 3, 50, 0.0, 5, seed=1)
    assert r.block_failure_rate == 0 and r.bit_erasure_rate == 0
    a = simulate(f, 3, 50, 0.68, 20, seed=9)
    b = simulate(f, 3, 50, 0.68, 20, seed=9)
    assert a == b
    with pytest.raises(ValueError):
        simulate(f, 3, 50, 0.5, 0)


def test_trial_seeds_are_schedule_independent():
    p = preset(3).terminated(3).protograph
    assert trial_seed(7, 3).entropy == trial_seed(7, 3).entropy
    a = simulate_protograph(p, 40, 0.55, 12, seed=5, jobs=1)
    b = simulate_protograph(p, 40, 0.55, 12, seed=5, jobs=2)
    assert a == b


def test_gcd36_waterfall_below_threshold():
    r = simulate(preset("gcd(3,6)"), 3, 500, 0.65, 100, seed=2)
    assert r.block_failure_rate < 0.10


def test_wilson_half_width():
    assert wilson_half_width(0, 100) > 0
    assert wilson_half_width(50, 100) == pytest.approx(0.0961, abs=1e-3)
