import numpy as np
import pytest

from qybe import (
    OSPQ12,
    SLQ2,
    ChainSpec,
    build_irrep,
    chi_factor,
    composite_space,
    coupled_matrix_elements,
    descendant_family,
    f0_and_chibar,
    hamiltonian_log_derivative,
    hamiltonian_projector_form,
    hecke_family,
    spectrum,
    transfer_matrix,
)
from qybe.rmatrix import f_slope, rel_residual
from qybe.repspace import nfold_coproduct
from qybe.spinchain import bond_expansion_coefficients
from qybe.toolkit import family_guards, random_points
from conftest import params_for


def chain_points(rng, count, fam):
    return random_points(rng, count, guards=family_guards(fam), min_dist=0.1)


def test_f0_and_chibar_values(params_sl):
    f0, chibar = f0_and_chibar(3, params_sl)
    chi = chi_factor(SLQ2, 3, params_sl)
    assert abs(f0 - 2 * params_sl.a / np.sqrt(1 - 4 * chi)) < 1e-12
    assert abs(chibar - chi * 2 * f0 ** 2 / (4 - f0 ** 2)) < 1e-12


def test_f0_matches_finite_difference(params_sl):
    from qybe import hecke_f

    chi = chi_factor(SLQ2, 3, params_sl)
    f0, _ = f0_and_chibar(3, params_sl)
    h = 1e-5
    fd = (hecke_f(h, chi, params_sl.a) - hecke_f(-h, chi, params_sl.a)) / (2 * h)
    assert abs(fd - f0) < 1e-7


def test_chibar_vanishes_with_chi():
    # chibar -> 0 as chi -> 0 (away from the scale where f0^2 hits 4)
    chi = 1e-12
    f0 = f_slope(chi, 0.7)
    chibar = chi * 2 * f0 ** 2 / (4 - f0 ** 2)
    assert abs(chibar) < 1e-10


def test_f0_linear_in_scale():
    p1 = params_for(SLQ2)
    from qybe.qarith import DeformParams

    p2 = DeformParams(q=p1.q, a=2.0, algebra=SLQ2)
    f0a, _ = f0_and_chibar(2, p1)
    f0b, _ = f0_and_chibar(2, p2)
    assert abs(f0b - 2 * f0a) < 1e-12


@pytest.mark.parametrize("algebra,r", [(SLQ2, 2), (SLQ2, 3), (OSPQ12, 3)])
def test_bond_expansion_both_equal_f0(algebra, r):
    p = params_for(algebra)
    rep = build_irrep(algebra, r, p)
    c1p, c2p = bond_expansion_coefficients(rep, p)
    chi = chi_factor(algebra, r, p)
    f0 = f_slope(chi, p.a)
    assert abs(c1p - f0) < 1e-7 * max(1, abs(f0))
    assert abs(c2p - f0) < 1e-7 * max(1, abs(f0))


def test_transfer_matrices_commute_n2(params_sl, rng):
    rep = build_irrep(SLQ2, 3, params_sl)
    fam = descendant_family(rep, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    spec = ChainSpec.from_composite(U, 2)
    pts = chain_points(rng, 4, fam)
    taus = [transfer_matrix(spec, fam, u).matrix for u in pts]
    for i in range(len(taus)):
        for j in range(i + 1, len(taus)):
            assert rel_residual(taus[i] @ taus[j], taus[j] @ taus[i]) < 64 * 1e-12


def test_transfer_matrix_regular_point_is_shift(params_sl):
    rep = build_irrep(SLQ2, 2, params_sl)
    fam = descendant_family(rep, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    spec = ChainSpec.from_composite(U, 2)
    t0 = transfer_matrix(spec, fam, 0.0).matrix
    d = U.dim
    shift = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            shift[b * d + a, a * d + b] = 1.0
    assert rel_residual(t0, shift) < 1e-10


def test_single_site_transfer_invariant(params_sl, rng):
    # N = 1: the trace of R commutes with the site action of h
    rep = build_irrep(SLQ2, 3, params_sl)
    fam = descendant_family(rep, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    spec = ChainSpec.from_composite(U, 1)
    u = chain_points(rng, 1, fam)[0]
    tau = transfer_matrix(spec, fam, u).matrix
    h = U.replike().H
    assert rel_residual(tau @ h, h @ tau) < 1e-10


def test_hamiltonian_reassembles(params_sl):
    rep = build_irrep(SLQ2, 3, params_sl)
    bundle = hamiltonian_projector_form(rep, 2, params_sl)
    total = bundle.f0 * sum(bundle.terms)
    assert np.abs(total - bundle.H.matrix).max() == 0.0


@pytest.mark.parametrize("n_sites", [2, 3])
def test_hamiltonian_log_derivative_matches_projector_form(n_sites, params_sl, rng):
    r = 3 if n_sites == 2 else 2
    rep = build_irrep(SLQ2, r, params_sl)
    fam = descendant_family(rep, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    spec = ChainSpec.from_composite(U, n_sites)
    Hlog = hamiltonian_log_derivative(spec, fam).matrix
    bundle = hamiltonian_projector_form(rep, n_sites, params_sl)
    X = np.stack([bundle.H.matrix.ravel(),
                  np.eye(bundle.H.matrix.shape[0]).ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(X, Hlog.ravel(), rcond=None)
    resid = np.abs(X @ coef - Hlog.ravel()).max() / max(1, np.abs(Hlog).max())
    assert resid < 1e-7


def test_hamiltonian_commutes_with_generators_and_tau(params_sl, rng):
    # every bond term is a centralizer element of its two-cell space; the
    # periodic closure itself only preserves the weight operator (the
    # exchange tails of the coproduct are not translation invariant), so the
    # chain-level invariance checks are per-bond plus the weight and the
    # commuting transfer matrix
    rep = build_irrep(SLQ2, 3, params_sl)
    fam = descendant_family(rep, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    bundle = hamiltonian_projector_form(rep, 2, params_sl)
    H = bundle.H.matrix
    pair = nfold_coproduct(SLQ2, [U.replike()] * 2, params_sl.q)
    bond = bundle.pbar_cell + bundle.chibar * bundle.phat_cell
    for g in ("E", "F", "H"):
        D = getattr(pair, g)
        assert rel_residual(bond @ D, D @ bond) < 1e-9
    assert rel_residual(H @ pair.H, pair.H @ H) < 1e-10
    spec = ChainSpec.from_composite(U, 2)
    u = chain_points(rng, 1, fam)[0]
    tau = transfer_matrix(spec, fam, u).matrix
    assert rel_residual(H @ tau, tau @ H) < 1e-8


def test_hamiltonian_step_halving(params_sl):
    rep = build_irrep(SLQ2, 2, params_sl)
    fam = descendant_family(rep, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    spec = ChainSpec.from_composite(U, 3)
    H1 = hamiltonian_log_derivative(spec, fam, step=1e-5).matrix
    H2 = hamiltonian_log_derivative(spec, fam, step=5e-6).matrix
    assert rel_residual(H1, H2) < 1e-6


def test_hecke_chain_locality(params_sl, rng):
    # N = 3 fundamental chain: the log-derivative Hamiltonian is a sum of
    # two-site terms, so it commutes with single-site operators two sites away
    rep = build_irrep(SLQ2, 2, params_sl)
    fam = hecke_family(rep, params_sl)
    spec = ChainSpec(site_dim=2, n_sites=3, params=params_sl)
    H = hamiltonian_log_derivative(spec, fam, point=0.0).matrix
    # bond terms on (0,1),(1,2),(2,0) wrap the ring; any single-site operator
    # commutes with the one bond not touching it, so check the bond split:
    # H reconstructs from two-site blocks fitted on each pair
    from qybe.repspace import embed_at

    dims = [2, 2, 2]
    pars = [rep.parities] * 3
    basis = []
    rng2 = np.random.default_rng(0)
    for pair in ((0, 1), (1, 2), (2, 0)):
        for k in range(16):
            m = np.zeros((4, 4))
            m[k // 4, k % 4] = 1.0
            basis.append(embed_at(m, pair, dims, pars).ravel())
    X = np.stack(basis, axis=1)
    coef, *_ = np.linalg.lstsq(X, H.ravel(), rcond=None)
    resid = np.abs(X @ coef - H.ravel()).max() / max(1, np.abs(H).max())
    assert resid < 1e-8


def test_spin_structure_block_transitions(params_sl):
    # bond terms move block labels for composite cells with several blocks
    # (r = 3) and cannot for single-block cells (r = 2)
    for r, expect_offdiag in ((2, False), (3, True)):
        rep = build_irrep(SLQ2, r, params_sl)
        U = composite_space(rep, n=2, params=params_sl)
        bundle = hamiltonian_projector_form(rep, 2, params_sl)
        bond = bundle.pbar_cell + bundle.chibar * bundle.phat_cell
        blocks = U.decomposition.blocks
        labels = np.zeros(U.dim, dtype=int)
        for bi, b in enumerate(blocks):
            labels[list(b.cols)] = bi
        found = False
        for i in range(U.dim ** 2):
            for j in range(U.dim ** 2):
                if abs(bond[i, j]) > 1e-9:
                    bi = (labels[i // U.dim], labels[i % U.dim])
                    bj = (labels[j // U.dim], labels[j % U.dim])
                    if bi != bj:
                        found = True
        assert found == expect_offdiag


@pytest.mark.parametrize("algebra,r", [(SLQ2, 2), (SLQ2, 3), (OSPQ12, 2), (OSPQ12, 3)])
def test_coupled_elements_p23(algebra, r):
    p = params_for(algebra)
    rep = build_irrep(algebra, r, p)
    out = coupled_matrix_elements(rep, "P23", p)
    assert out.route_residual < 1e-9
    assert out.conserves_total
    # external projectors kill pair singlets on both sides
    for row, col in out.support:
        assert row[0] > 0 and row[1] > 0 and col[0] > 0 and col[1] > 0


@pytest.mark.parametrize("algebra,r", [(SLQ2, 2), (SLQ2, 3), (OSPQ12, 2), (OSPQ12, 3)])
def test_coupled_elements_p23p14(algebra, r):
    p = params_for(algebra)
    rep = build_irrep(algebra, r, p)
    out = coupled_matrix_elements(rep, "P23P14", p)
    assert out.route_residual < 1e-9
    # support только on total singlet with equal pair labels
    for row, col in out.support:
        assert abs(row[2]) < 1e-9 and abs(col[2]) < 1e-9
        assert abs(row[0] - row[1]) < 1e-9 and abs(col[0] - col[1]) < 1e-9
        assert row[0] > 0 and col[0] > 0


def test_spectrum_zero_matrix():
    vals, clusters = spectrum(np.zeros((5, 5)))
    assert np.abs(vals).max() == 0
    assert clusters[0][1] == 5


def test_spectrum_descendant_chain_consistency(params_sl):
    # the log-derivative and projector-form spectra coincide up to the
    # fitted affine map for the fundamental composite chain
    rep = build_irrep(SLQ2, 2, params_sl)
    fam = descendant_family(rep, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    spec = ChainSpec.from_composite(U, 2)
    Hlog = hamiltonian_log_derivative(spec, fam).matrix
    bundle = hamiltonian_projector_form(rep, 2, params_sl)
    X = np.stack([bundle.H.matrix.ravel(), np.eye(9).ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(X, Hlog.ravel(), rcond=None)
    vals1, _ = spectrum(Hlog)
    vals2, _ = spectrum(coef[0] * bundle.H.matrix + coef[1] * np.eye(9))
    assert np.abs(np.sort(vals1.real) - np.sort(vals2.real)).max() < 1e-6


def test_spectrum_degeneracies_are_multiplet_sums(params_sl):
    # every eigenvalue cluster of an invariant chain operator spans whole
    # irreducible blocks, so its degeneracy is a sum of block dimensions
    from qybe.coupling import decompose

    rep = build_irrep(SLQ2, 3, params_sl)
    U = composite_space(rep, n=2, params=params_sl)
    bundle = hamiltonian_projector_form(rep, 2, params_sl)
    vals, clusters = spectrum(bundle.H, cluster_tol=1e-6)
    chain = nfold_coproduct(SLQ2, [U.replike()] * 2, params_sl.q)
    dims = sorted(b.r for b in decompose(chain, params_sl).blocks)
    reachable = {0}
    for d in dims:
        reachable = reachable | {s + d for s in reachable}
    for lead, count in clusters:
        assert count in reachable


def test_graded_chain_transfer_commutes(params_osp, rng):
    # composite chain over the graded algebra: parity-signed auxiliary trace
    rep = build_irrep(OSPQ12, 3, params_osp)
    fam = descendant_family(rep, params_osp)
    U = composite_space(rep, n=2, params=params_osp)
    spec = ChainSpec.from_composite(U, 2)
    pts = chain_points(rng, 2, fam)
    t1 = transfer_matrix(spec, fam, pts[0]).matrix
    t2 = transfer_matrix(spec, fam, pts[1]).matrix
    assert rel_residual(t1 @ t2, t2 @ t1) < 64 * 1e-12
