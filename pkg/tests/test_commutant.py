import numpy as np
import pytest

from qybe import (
    OSPQ12,
    SLQ2,
    build_irrep,
    commutant_nullspace,
    composite_space,
    constraint_system,
    descendant_family,
    elementary_ops,
    hecke_family,
    membership,
    principal_angles,
)
from qybe.repspace import nfold_coproduct
from qybe.toolkit import family_guards, random_points
from conftest import params_for


def test_elementary_ops_count_and_composition(params_sl, rng):
    rep = build_irrep(SLQ2, 3, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    ops = elementary_ops(U)
    assert len(ops) == U.dim ** 2
    # composition law on random pairs
    for _ in range(100):
        a, b = rng.integers(0, len(ops), 2)
        A, B = ops[a], ops[b]
        prod = A.matrix() @ B.matrix()
        if A.source == B.target:
            expect = np.zeros((U.dim, U.dim), dtype=complex)
            expect[A.row, B.col] = 1.0
        else:
            expect = np.zeros((U.dim, U.dim), dtype=complex)
        assert np.abs(prod - expect).max() == 0
    # diagonal resolution of identity
    diag = sum(op.matrix() for op in ops if op.source == op.target)
    assert np.abs(diag - np.eye(U.dim)).max() == 0


@pytest.mark.parametrize("algebra", [SLQ2, OSPQ12])
def test_commutant_of_irrep_pair(algebra):
    # V^2 (x) V^2 decomposes into two distinct blocks: the commutant of the
    # pair action is two dimensional (the two projectors)
    p = params_for(algebra)
    rep = build_irrep(algebra, 2, p)
    U = composite_space(rep, n=1, params=p)
    nb = commutant_nullspace(U, 2, p)
    assert nb.dim == 2


def test_commutant_single_copy_dims(params_sl):
    # n = 1: the commutant of U itself is the span of the per-block
    # projectors, dimension = sum of squared multiplicities
    rep = build_irrep(SLQ2, 3, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    nb = commutant_nullspace(U, 1, params_sl)
    assert nb.dim == 2  # blocks 3 and 5, multiplicity one each
    cb, _ = constraint_system(U, 1, params_sl)
    assert cb.dim == 2


@pytest.mark.parametrize("algebra", [SLQ2, OSPQ12])
def test_commutant_u8_dimension_46(algebra):
    p = params_for(algebra)
    rep = build_irrep(algebra, 3, p)
    U = composite_space(rep, n=2, params=p)
    nb = commutant_nullspace(U, 2, p)
    assert nb.dim == 46  # 2^2 + 4^2 + 4^2 + 3^2 + 1^2
    cb, _ = constraint_system(U, 2, p)
    assert cb.dim == 46
    assert float(np.max(principal_angles(nb, cb))) < 1e-8


def test_commutant_dim_matches_multiplicities(params_sl):
    # brute-force dimension equals the sum of squared multiplicities of the
    # full product decomposition
    from qybe.coupling import decompose

    rep = build_irrep(SLQ2, 2, params_sl)
    U = composite_space(rep, n=2, params=params_sl)  # single triplet block
    nb = commutant_nullspace(U, 2, params_sl)
    chain = nfold_coproduct(SLQ2, [U.replike()] * 2, params_sl.q)
    mult = decompose(chain, params_sl).block_multiplicities()
    assert nb.dim == sum(m * m for m in mult.values())


def test_constraint_system_matches_nullspace_v2(params_sl):
    rep = build_irrep(SLQ2, 2, params_sl)
    U = composite_space(rep, n=1, params=params_sl)
    nb = commutant_nullspace(U, 2, params_sl)
    cb, sys_mat = constraint_system(U, 2, params_sl)
    assert nb.dim == cb.dim == 2
    assert float(np.max(principal_angles(nb, cb))) < 1e-10
    assert sys_mat.shape[1] == 6  # weight sectors 1 + 4 + 1 coefficients


def test_weight_conservation_is_built_in(params_sl):
    # any commutant element annihilates weight-violating components exactly
    rep = build_irrep(SLQ2, 3, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    nb = commutant_nullspace(U, 2, params_sl)
    wts = np.real(np.diag(nfold_coproduct(SLQ2, [U.replike()] * 2, params_sl.q).H)) / 2
    for m in nb.matrices()[:5]:
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                if abs(wts[i] - wts[j]) > 1e-9:
                    assert abs(m[i, j]) < 1e-10


def test_descendant_samples_are_members(params_sl, rng):
    # samples of the fused solution lie in the centralizer, whichever of the
    # two constructions provides the basis
    rep = build_irrep(SLQ2, 3, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    nb = commutant_nullspace(U, 2, params_sl)
    cb, _ = constraint_system(U, 2, params_sl)
    fam = descendant_family(rep, params_sl)
    for u in random_points(rng, 3, guards=family_guards(fam), min_dist=0.1):
        for basis in (nb, cb):
            ok, coef, resid = membership(fam.check_fn(u), basis)
            assert ok and resid < 1e-9


def test_bond_terms_are_centralizer_elements(params_sl):
    from qybe import hamiltonian_projector_form

    rep = build_irrep(SLQ2, 3, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    nb = commutant_nullspace(U, 2, params_sl)
    bundle = hamiltonian_projector_form(rep, 2, params_sl)
    for term in (bundle.pbar_cell, bundle.phat_cell):
        ok, coef, resid = membership(term, nb)
        assert ok and resid < 1e-9


def test_hecke_samples_are_members(params_osp, rng):
    rep = build_irrep(OSPQ12, 3, params_osp)
    U = composite_space(rep, n=1, params=params_osp)
    nb = commutant_nullspace(U, 2, params_osp)
    fam = hecke_family(rep, params_osp)
    for u in random_points(rng, 3, guards=family_guards(fam)):
        ok, coef, resid = membership(fam.check_fn(u), nb)
        assert ok and resid < 1e-9


def test_identity_is_member(params_sl):
    rep = build_irrep(SLQ2, 3, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    nb = commutant_nullspace(U, 2, params_sl)
    ok, coef, resid = membership(np.eye(U.dim ** 2), nb)
    assert ok and resid < 1e-10


def test_generator_is_not_member(params_sl):
    rep = build_irrep(SLQ2, 3, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    nb = commutant_nullspace(U, 2, params_sl)
    chain = nfold_coproduct(SLQ2, [U.replike()] * 2, params_sl.q)
    ok, coef, resid = membership(chain.E, nb)
    assert not ok and resid > 1e-3


def test_random_matrix_rejected(params_sl, rng):
    rep = build_irrep(SLQ2, 3, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    nb = commutant_nullspace(U, 2, params_sl)
    m = rng.normal(size=(U.dim ** 2, U.dim ** 2))
    ok, coef, resid = membership(m, nb)
    assert not ok and resid > 1e-3
