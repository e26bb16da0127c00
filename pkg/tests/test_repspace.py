import numpy as np
import pytest

from qybe import (
    OSPQ12,
    SLQ2,
    build_irrep,
    casimir,
    casimir_value,
    coproduct,
    graded_kron,
    graded_permutation,
    q_number,
    verify_algebra,
)
from qybe.repspace import (
    GradedOperator,
    Space,
    alpha_closed,
    alpha_sum,
    coproduct_pair,
    diag_power,
    embed_at,
    graded_kron_raw,
    invariant_metric,
    nfold_coproduct,
    perm_matrix,
)
from conftest import params_for


@pytest.mark.parametrize("algebra", [SLQ2, OSPQ12])
@pytest.mark.parametrize("r", [1, 2, 3, 4, 5, 6])
def test_defining_relations(algebra, r):
    p = params_for(algebra)
    rep = build_irrep(algebra, r, p)
    assert max(verify_algebra(rep, p).values()) < 1e-12


def test_sl_commutator_exact(params_sl):
    rep = build_irrep(SLQ2, 2, params_sl)
    q = params_sl.q
    lhs = rep.E @ rep.F - rep.F @ rep.E
    rhs = (diag_power(q, rep.H) - diag_power(q, -rep.H)) / (q - 1 / q)
    assert np.abs(lhs - rhs).max() < 1e-13


@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_alpha_sum_equals_closed(r, params_osp, params_sl):
    for p in (params_osp, params_sl):
        j = (r - 1) / 2.0
        for k in range(r - 1):
            i = j - k
            a = alpha_sum(p.algebra, r, i, p.q)
            b = alpha_closed(p.algebra, r, i, p.q)
            assert abs(a - b) < 1e-12 * max(1, abs(a))


@pytest.mark.parametrize("r", [3, 5])
def test_alpha_antisymmetry_odd(r, params_osp):
    # alpha_i = -alpha_{-i+1} on odd-dimensional ladders
    j = (r - 1) / 2.0
    for k in range(r - 1):
        i = j - k
        if -i + 1 > j or -i + 1 < -j + 1:
            continue
        a = alpha_sum(OSPQ12, r, i, params_osp.q)
        b = alpha_sum(OSPQ12, r, -i + 1, params_osp.q)
        assert abs(a + b) < 1e-12 * max(1, abs(a))


@pytest.mark.parametrize("r", [2, 4])
def test_alpha_symmetry_even(r, params_osp):
    # even ladders carry the imaginary weight shift, under which the bracket
    # is even; alpha is then symmetric rather than antisymmetric
    j = (r - 1) / 2.0
    for k in range(r - 1):
        i = j - k
        if abs(-i + 1) > j:
            continue
        a = alpha_sum(OSPQ12, r, i, params_osp.q)
        b = alpha_sum(OSPQ12, r, -i + 1, params_osp.q)
        assert abs(a - b) < 1e-12 * max(1, abs(a))


def test_corrupted_rep_is_detected(params_osp):
    rep = build_irrep(OSPQ12, 3, params_osp)
    E = rep.E.copy()
    E[0, 1] += 1e-3
    bad = type(rep)(rep.algebra, rep.r, rep.j, E, rep.F, rep.H,
                    rep.parities, rep.casimir_value, rep.params)
    res = max(verify_algebra(bad, params_osp).values())
    assert 1e-4 < res < 1e-2


def test_graded_kron_identity(params_osp):
    rep = build_irrep(OSPQ12, 3, params_osp)
    sp = rep.space()
    I = GradedOperator(np.eye(3), sp, sp)
    II = graded_kron(I, I)
    assert np.abs(II.matrix - np.eye(9)).max() == 0


def test_graded_kron_all_even_is_plain(rng):
    A = rng.normal(size=(3, 3))
    B = rng.normal(size=(2, 2))
    pz3, pz2 = (0, 0, 0), (0, 0)
    out = graded_kron_raw(A, B, pz3, pz3, pz2, pz2)
    assert np.abs(out - np.kron(A, B)).max() == 0


def test_graded_kron_product_rule(rng):
    # (A x B)(C x D) = +- (AC x BD) with sign from parities of B and C
    p = (0, 1)
    for pB in (0, 1):
        for pC in (0, 1):
            # homogeneous-parity 2x2 operators: diag = even, offdiag = odd
            def hom(par):
                m = rng.normal(size=(2, 2))
                mask = np.array([[1 - par, par], [par, 1 - par]])
                return m * mask
            A, B, C, D = hom(0), hom(pB), hom(pC), hom(0)
            AB = graded_kron_raw(A, B, p, p, p, p)
            CD = graded_kron_raw(C, D, p, p, p, p)
            ACBD = graded_kron_raw(A @ C, B @ D, p, p, p, p)
            sign = (-1.0) ** (pB * pC)
            assert np.abs(AB @ CD - sign * ACBD).max() < 1e-12


@pytest.mark.parametrize("algebra,r1,r2", [
    (SLQ2, 2, 2), (SLQ2, 3, 3), (OSPQ12, 2, 2), (OSPQ12, 3, 3), (OSPQ12, 2, 3),
])
def test_coproduct_homomorphism(algebra, r1, r2):
    p = params_for(algebra)
    a = build_irrep(algebra, r1, p)
    b = build_irrep(algebra, r2, p)
    pair = coproduct_pair(algebra, a, b, p.q)
    d = np.diag(pair.H)
    qn = np.diag((p.q ** d - p.q ** (-d)) / (p.q - 1 / p.q))
    if algebra == OSPQ12:
        res = pair.E @ pair.F + pair.F @ pair.E - qn
    else:
        res = pair.E @ pair.F - pair.F @ pair.E - qn
    assert np.abs(res).max() < 1e-12


def test_coproduct_weights_add(params_osp):
    rep = build_irrep(OSPQ12, 3, params_osp)
    Dh = coproduct("h", rep, rep, params_osp)
    w = rep.weights
    expect = np.add.outer(w, w).reshape(-1)
    assert np.abs(np.diag(Dh.matrix) - expect).max() < 1e-13


def test_coassociativity(params_osp):
    rep = build_irrep(OSPQ12, 2, params_osp)
    q = params_osp.q
    pair = coproduct_pair(OSPQ12, rep, rep, q)
    left = coproduct_pair(OSPQ12, pair, rep, q)
    right = coproduct_pair(OSPQ12, rep, pair, q)
    for g in ("E", "F", "H"):
        assert np.abs(getattr(left, g) - getattr(right, g)).max() < 1e-12


@pytest.mark.parametrize("algebra", [SLQ2, OSPQ12])
def test_permutation_squares_to_identity(algebra):
    p = params_for(algebra)
    rep = build_irrep(algebra, 3, p)
    P = graded_permutation(rep, rep).matrix
    assert np.abs(P @ P - np.eye(9)).max() == 0


def test_permutation_sign_on_odd_states(params_osp):
    rep = build_irrep(OSPQ12, 3, params_osp)
    P = graded_permutation(rep, rep).matrix
    # state index 1 is odd; v_odd (x) v_odd picks up a minus sign
    vec = np.zeros(9)
    vec[1 * 3 + 1] = 1.0
    assert P @ vec @ vec == -1


def test_permutation_all_even_is_swap(params_sl):
    rep = build_irrep(SLQ2, 2, params_sl)
    P = graded_permutation(rep, rep).matrix
    v = np.zeros(4)
    v[0 * 2 + 1] = 1.0
    out = P @ v
    assert out[1 * 2 + 0] == 1.0 and np.abs(out).sum() == 1.0


def test_perm_matrix_composition(params_osp):
    rep = build_irrep(OSPQ12, 2, params_osp)
    dims = [2, 2, 2]
    pars = [rep.parities] * 3
    s01 = perm_matrix([1, 0, 2], dims, pars)
    s12 = perm_matrix([0, 2, 1], dims, pars)
    sigma = [[1, 0, 2][[0, 2, 1][t]] for t in range(3)]
    assert np.abs(s12 @ s01 - perm_matrix(sigma, dims, pars)).max() == 0


def test_embed_consistency(params_osp, rng):
    rep = build_irrep(OSPQ12, 2, params_osp)
    dims = [2, 2, 2]
    pars = [rep.parities] * 3
    pp = (np.add.outer(np.array(rep.parities), np.array(rep.parities)) % 2).reshape(-1)
    X = rng.normal(size=(4, 4)) * (np.add.outer(pp, pp) % 2 == 0)
    s12 = perm_matrix([0, 2, 1], dims, pars)
    direct = embed_at(X, (0, 2), dims, pars)
    conj = s12 @ embed_at(X, (0, 1), dims, pars) @ s12
    assert np.abs(direct - conj).max() < 1e-12


@pytest.mark.parametrize("algebra,r", [(SLQ2, 2), (SLQ2, 4), (OSPQ12, 3), (OSPQ12, 4)])
def test_casimir_scalar(algebra, r):
    p = params_for(algebra)
    rep = build_irrep(algebra, r, p)
    c = casimir(rep, params=p).matrix
    assert np.abs(c - rep.casimir_value * np.eye(r)).max() < 1e-10


def test_casimir_value_sl(params_sl):
    for r in range(1, 6):
        assert abs(casimir_value(SLQ2, r, params_sl.q)
                   - q_number(r / 2.0, params_sl.q) ** 2) < 1e-13


def test_casimir_apply_osp4(params_osp):
    rep = build_irrep(OSPQ12, 4, params_osp)
    c = casimir(rep, params=params_osp).matrix
    for k in range(4):
        v = np.zeros(4)
        v[k] = 1.0
        assert np.abs(c @ v - rep.casimir_value * v).max() < 1e-10


def test_pair_casimir_spectrum(params_osp):
    rep = build_irrep(OSPQ12, 3, params_osp)
    cc = casimir(rep, rep, params_osp).matrix
    got = np.sort_complex(np.linalg.eigvals(cc))
    want = []
    for r0 in (1, 3, 5):
        want += [casimir_value(OSPQ12, r0, params_osp.q)] * r0
    want = np.sort_complex(np.array(want))
    assert np.abs(got - want).max() < 1e-9


def test_pair_casimir_central(params_osp):
    rep = build_irrep(OSPQ12, 3, params_osp)
    cc = casimir(rep, rep, params_osp).matrix
    pair = coproduct_pair(OSPQ12, rep, rep, params_osp.q)
    for g in ("E", "F", "H"):
        D = getattr(pair, g)
        assert np.abs(cc @ D - D @ cc).max() < 1e-10


@pytest.mark.parametrize("algebra", [SLQ2, OSPQ12])
def test_invariant_metric_consistency(algebra):
    p = params_for(algebra)
    rep = build_irrep(algebra, 3, p)
    tri = nfold_coproduct(algebra, [rep] * 3, p.q)
    md, res = invariant_metric(tri.E, tri.F)
    assert res < 1e-11
    # metric also intertwines f^T with e, up to the residual tolerance
    M = np.diag(md)
    sc = max(1.0, np.abs(tri.F).max() * np.abs(md).max())
    assert np.abs(tri.F.T @ M - M @ tri.E).max() / sc < 1e-10


def test_space_mismatch_raises():
    from qybe import QybeError
    sp2 = Space((2,), ((0, 0),))
    sp3 = Space((3,), ((0, 0, 0),))
    A = GradedOperator(np.eye(2), sp2, sp2)
    B = GradedOperator(np.eye(3), sp3, sp3)
    with pytest.raises(QybeError):
        A @ B
    with pytest.raises(QybeError):
        GradedOperator(np.eye(2), sp3, sp3)
