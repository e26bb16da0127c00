"""Centralizer operators on tensor powers of composite spaces.

Two independent constructions of the same subspace:

* commutant_nullspace works with the dense coproduct generator matrices and
  solves the commutator equations by SVD, blocked by total-weight sectors
  (the h commutator forces weight conservation, so the unknown coefficient
  tensor is sector diagonal).

* constraint_system never touches a dense generator: it assembles the ladder
  recursions on the coefficients of elementary-operator products directly
  from per-block matrix-element data (beta, gamma, weights, parities),
  i.e. the weight-conservation rule plus one raising and one lowering family
  of equations with the graded prefix factors of the iterated coproduct.

Both return bases of the same space; principal angles compare them.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .qarith import OSPQ12, QybeError
from .repspace import GradedOperator, nfold_coproduct


@dataclass
class ElementaryOp:
    """|target><source| between two ladder states of a composite space."""

    source: tuple  # (block index, spin j, weight i)
    target: tuple
    dim: int
    row: int
    col: int

    def matrix(self):
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[self.row, self.col] = 1.0
        return m


def elementary_ops(U):
    """Complete basis of dim(U)^2 elementary operators on the block
    coordinates of a composite space."""
    dec = U.decomposition
    states = []
    for bi, b in enumerate(dec.blocks):
        jb = (b.r - 1) / 2.0
        for k, col in enumerate(b.cols):
            states.append((bi, jb, jb - k, col))
    ops = []
    for tgt in states:
        for src in states:
            ops.append(ElementaryOp(
                source=src[:3], target=tgt[:3], dim=U.dim, row=tgt[3], col=src[3],
            ))
    return ops


@dataclass
class CommutantBasis:
    """Orthonormal basis of the operators commuting with the n-fold coproduct
    action on U^(x n), stored as vectorized matrices (columns, row-major)."""

    dim_space: int
    n: int
    vectors: np.ndarray
    provenance: str
    rank_gap: float = np.inf

    @property
    def dim(self):
        return self.vectors.shape[1]

    def matrices(self):
        d = self.dim_space ** self.n
        return [self.vectors[:, k].reshape(d, d) for k in range(self.dim)]


def _ladder_weights(gens):
    w = np.real(np.diag(gens.H))
    return w if gens.algebra == OSPQ12 else w / 2.0


def _sectors_of(weights):
    keys = np.round(2 * weights).astype(int)
    sectors = {}
    for idx, k in enumerate(keys):
        sectors.setdefault(int(k), []).append(idx)
    return sectors


def _nullspace_from_system(sys_mat, total, gap_tol=1e3):
    u, s, vh = np.linalg.svd(sys_mat)
    smax = s.max() if s.size else 0.0
    thresh = max(1.0, smax) * max(total, 1) * 1e-11
    rank = int(np.sum(s > thresh))
    gap = np.inf
    if 0 < rank < len(s) and s[rank] > 0:
        gap = float(s[rank - 1] / s[rank])
        if gap < gap_tol and s[rank] > thresh / gap_tol:
            raise QybeError(f"rank ambiguity in the null space (gap {gap:.1e})")
    return vh.conj().T[:, rank:], gap


def commutant_nullspace(U, n, params=None, gap_tol=1e3):
    """Joint null space of [Delta^n g, c] = 0 for g in {e, f, h}, solved by
    SVD over the weight-sector blocks of the coefficient matrix."""
    params = params or U.params
    gens = U.replike() if hasattr(U, "replike") else U
    dU = gens.dim
    if dU ** n > 4096:
        raise QybeError("commutant space exceeds the desk bound")
    co = nfold_coproduct(gens.algebra, [gens] * n, params.q)
    d = co.dim
    wts = _ladder_weights(co)
    sectors = _sectors_of(wts)
    skeys = sorted(sectors)
    offsets, total = {}, 0
    for k in skeys:
        offsets[k] = total
        total += len(sectors[k]) ** 2
    rows = []
    for gmat, step in ((co.E, 2), (co.F, -2)):
        for k in skeys:
            k2 = k + step
            if k2 not in sectors:
                continue
            src, tgt = sectors[k], sectors[k2]
            m1, m2 = len(src), len(tgt)
            A = gmat[np.ix_(tgt, src)]
            blk = np.zeros((m2 * m1, total), dtype=complex)
            off1, off2 = offsets[k], offsets[k2]
            for t in range(m2):
                for s_ in range(m1):
                    row = t * m1 + s_
                    for s2 in range(m1):
                        blk[row, off1 + s2 * m1 + s_] += A[t, s2]
                    for t2 in range(m2):
                        blk[row, off2 + t * m2 + t2] -= A[t2, s_]
            rows.append(blk)
    sys_mat = np.vstack(rows) if rows else np.zeros((1, total))
    null, gap = _nullspace_from_system(sys_mat, total, gap_tol)
    vecs = np.zeros((d * d, null.shape[1]), dtype=complex)
    for k in skeys:
        idx, off, m = sectors[k], offsets[k], len(sectors[k])
        for a in range(m):
            for b in range(m):
                vecs[idx[a] * d + idx[b], :] += null[off + a * m + b, :]
    qmat, _ = np.linalg.qr(vecs)
    return CommutantBasis(dim_space=dU, n=n, vectors=qmat[:, : null.shape[1]],
                          provenance="nullspace-svd", rank_gap=gap)


def _block_ladder_data(U):
    """Per-state (block, weight, parity, beta, gamma) read from the compressed
    generators: beta[s] raises state s within its block, gamma[s] lowers."""
    gens = U.replike()
    dec = U.decomposition
    E, F, H = gens.E, gens.F, gens.H
    states = []
    for bi, b in enumerate(dec.blocks):
        cols = list(b.cols)
        for k, col in enumerate(cols):
            beta = E[cols[k - 1], col] if k > 0 else 0j
            gamma = F[cols[k + 1], col] if k + 1 < len(cols) else 0j
            states.append({
                "index": col,
                "block": bi,
                "weight": b.hw_weight - k,
                "lam": complex(H[col, col]),
                "parity": int(dec.parities[col]),
                "beta": complex(beta),       # e|s> = beta |s raised>
                "gamma": complex(gamma),     # f|s> = gamma |s lowered>
                "up": cols[k - 1] if k > 0 else None,
                "down": cols[k + 1] if k + 1 < len(cols) else None,
            })
    states.sort(key=lambda st: st["index"])
    return states


def _coproduct_action(states, n, q, algebra, which):
    """Sparse action of the n-fold coproduct of e (which='e') or f on the
    product basis of states^n, as {multi-index: [(multi-index', coeff)]}.

    The raising/lowering entry at slot m carries the exchange prefix of the
    iterated coproduct: products of q^{lam} (or q^{+-lam/2}) over the other
    slots, and for the graded algebra the Koszul sign of moving an odd
    generator past the leading slots."""
    dU = len(states)
    action = {}
    for multi in itertools.product(range(dU), repeat=n):
        out = []
        for m in range(n):
            st = states[multi[m]]
            nxt = st["up"] if which == "e" else st["down"]
            coef = st["beta"] if which == "e" else st["gamma"]
            if nxt is None or coef == 0:
                continue
            pref = complex(1.0)
            if algebra == OSPQ12:
                for p in range(m):
                    pref *= q ** (states[multi[p]]["lam"] / 2)
                    pref *= (-1.0) ** states[multi[p]]["parity"]
                for p in range(m + 1, n):
                    pref *= q ** (-states[multi[p]]["lam"] / 2)
            else:
                if which == "e":
                    for p in range(m):
                        pref *= q ** states[multi[p]]["lam"]
                else:
                    for p in range(m + 1, n):
                        pref *= q ** (-states[multi[p]]["lam"])
            tgt = multi[:m] + (nxt,) + multi[m + 1:]
            out.append((tgt, coef * pref))
        action[multi] = out
    return action


def constraint_system(U, n, params=None, gap_tol=1e3):
    """Centralizer coefficients from the structured ladder equations.

    Unknowns are coefficients of elementary-operator products, keyed by
    weight sector (the conservation rule); one equation family per generator
    relates coefficients along the raising and lowering ladders.  Returns
    (CommutantBasis, system matrix)."""
    params = params or U.params
    states = _block_ladder_data(U)
    dU = len(states)
    if dU ** n > 4096:
        raise QybeError("commutant space exceeds the desk bound")
    d = dU ** n
    multis = list(itertools.product(range(dU), repeat=n))
    wts = np.array([sum(states[i]["weight"] for i in multi) for multi in multis])
    sectors = _sectors_of(wts)
    skeys = sorted(sectors)
    flat = {multi: k for k, multi in enumerate(multis)}
    offsets, total = {}, 0
    for k in skeys:
        offsets[k] = total
        total += len(sectors[k]) ** 2
    pos_in_sector = {}
    for k in skeys:
        for a, idx in enumerate(sectors[k]):
            pos_in_sector[idx] = (k, a)
    rows = []
    for which, step in (("e", 2), ("f", -2)):
        act = _coproduct_action(states, n, params.q, U.algebra, which)
        for k in skeys:
            k2 = k + step
            if k2 not in sectors:
                continue
            src, tgt = sectors[k], sectors[k2]
            m1, m2 = len(src), len(tgt)
            off1, off2 = offsets[k], offsets[k2]
            blk = np.zeros((m2 * m1, total), dtype=complex)
            # + (A c): A from src-sector states upward/downward into tgt
            for a, idx in enumerate(src):
                for tgt_multi, coef in act[multis[idx]]:
                    t = pos_in_sector[flat[tgt_multi]][1]
                    for s_ in range(m1):
                        blk[t * m1 + s_, off1 + a * m1 + s_] += coef
            # - (c A): same A entries acting on the right index
            for a, idx in enumerate(src):
                for tgt_multi, coef in act[multis[idx]]:
                    t2 = pos_in_sector[flat[tgt_multi]][1]
                    for t in range(m2):
                        blk[t * m1 + a, off2 + t * m2 + t2] -= coef
            rows.append(blk)
    sys_mat = np.vstack(rows) if rows else np.zeros((1, total))
    null, gap = _nullspace_from_system(sys_mat, total, gap_tol)
    vecs = np.zeros((d * d, null.shape[1]), dtype=complex)
    for k in skeys:
        idx, off, m = sectors[k], offsets[k], len(sectors[k])
        for a in range(m):
            for b in range(m):
                vecs[idx[a] * d + idx[b], :] += null[off + a * m + b, :]
    qmat, _ = np.linalg.qr(vecs)
    basis = CommutantBasis(dim_space=dU, n=n, vectors=qmat[:, : null.shape[1]],
                           provenance="ladder-constraints", rank_gap=gap)
    return basis, sys_mat


def principal_angles(basis_a, basis_b):
    """Principal angles (radians) between two commutant bases, computed with
    the sine formulation so that near-zero angles are resolved to machine
    precision instead of the arccos floor."""
    A = basis_a.vectors if isinstance(basis_a, CommutantBasis) else basis_a
    B = basis_b.vectors if isinstance(basis_b, CommutantBasis) else basis_b
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B)
    resid = qb - qa @ (qa.conj().T @ qb)
    sines = np.linalg.svd(resid, compute_uv=False)
    sines = np.clip(sines[: min(qa.shape[1], qb.shape[1])], 0.0, 1.0)
    return np.sort(np.arcsin(sines))


def membership(op, basis, tol=1e-8):
    """Least-squares expansion of an operator over a commutant basis.
    Returns (is_member, coefficients, residual)."""
    m = op.matrix if isinstance(op, GradedOperator) else np.asarray(op)
    v = m.reshape(-1)
    coef, *_ = np.linalg.lstsq(basis.vectors, v, rcond=None)
    resid = np.abs(basis.vectors @ coef - v).max() / max(1.0, np.abs(v).max())
    return bool(resid < tol), coef, float(resid)
