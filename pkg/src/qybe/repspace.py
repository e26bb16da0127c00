"""Finite-dimensional irreps of sl_q(2) and osp_q(1|2), graded tensor calculus.

Weight ladders are stored highest weight first: basis index k of an
r-dimensional irrep carries weight i = j - k with j = (r-1)/2, so the raising
generator E is an upper shift matrix and F a lower shift.  osp_q(1|2) states
alternate parity down the ladder starting from an even highest-weight state;
sl_q(2) states are all even.

The graded Kronecker product uses the matrix sign rule

    (A (x) B)[(i,j),(k,l)] = A[i,k] B[j,l] (-1)^(p_k (p_j + p_l))

with p the domain/codomain parities, which makes operator products of graded
Kroneckers plain matrix products.
"""

from dataclasses import dataclass, field

import numpy as np

from .qarith import (
    SLQ2,
    OSPQ12,
    DeformParams,
    DegenerateParameterError,
    QybeError,
    q_number,
    qr_shift,
)


@dataclass(frozen=True)
class Space:
    """Ordered factors of a tensor product with per-factor parity vectors."""

    dims: tuple
    parities: tuple  # one tuple of 0/1 per factor

    def __post_init__(self):
        if len(self.dims) != len(self.parities):
            raise QybeError("dims and parities must pair up factor by factor")
        for d, p in zip(self.dims, self.parities):
            if d != len(p):
                raise QybeError("parity vector length must match factor dimension")

    @property
    def dim(self):
        out = 1
        for d in self.dims:
            out *= d
        return out

    def flat_parities(self):
        """Parity of each product basis state (XOR over factors)."""
        out = np.zeros(1, dtype=int)
        for p in self.parities:
            out = (out[:, None] + np.asarray(p)[None, :]).reshape(-1) % 2
        return out

    @staticmethod
    def single(parities):
        return Space((len(parities),), (tuple(int(x) for x in parities),))

    def tensor(self, other):
        return Space(self.dims + other.dims, self.parities + other.parities)


@dataclass
class GradedOperator:
    """Dense complex matrix with domain/codomain space descriptors."""

    matrix: np.ndarray
    domain: Space
    codomain: Space
    label: str = ""

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (self.codomain.dim, self.domain.dim):
            raise QybeError(
                f"matrix shape {self.matrix.shape} does not match spaces "
                f"({self.codomain.dim}, {self.domain.dim})"
            )

    @property
    def m(self):
        return self.matrix

    def __matmul__(self, other):
        if isinstance(other, GradedOperator):
            if other.codomain.dim != self.domain.dim:
                raise QybeError("operator composition: space mismatch")
            return GradedOperator(self.matrix @ other.matrix, other.domain, self.codomain)
        return self.matrix @ other


@dataclass(frozen=True)
class Irrep:
    """Irreducible representation data.

    j is the algebra spin value ((r-1)/2 for sl_q(2), (r-1)/4 + shift/2 for
    osp_q(1|2)); ladder_j = (r-1)/2 is the weight-ladder half-width used for
    all index bookkeeping.
    """

    algebra: str
    r: int
    j: complex
    E: np.ndarray
    F: np.ndarray
    H: np.ndarray
    parities: tuple
    casimir_value: complex
    params: DeformParams = field(repr=False, default=None)

    @property
    def ladder_j(self):
        return (self.r - 1) / 2.0

    @property
    def weights(self):
        """Ladder weights i = j - k, highest first (without the qr shift)."""
        return np.array([self.ladder_j - k for k in range(self.r)])

    def space(self):
        return Space.single(self.parities)

    def beta(self, i):
        """Raising coefficient: E v_i = beta_i v_{i+1}; 0 off the ladder."""
        k = int(round(self.ladder_j - i))
        if k < 1 or k > self.r - 1:
            return 0j
        return complex(self.E[k - 1, k])

    def gamma(self, i):
        """Lowering coefficient: F v_i = gamma_i v_{i-1}; 0 off the ladder."""
        k = int(round(self.ladder_j - i))
        if k < 0 or k > self.r - 2:
            return 0j
        return complex(self.F[k + 1, k])


def alpha_sum(algebra, r, i, q):
    """alpha_i = beta_{i-1} gamma_i from the descending anticommutator or
    commutator recursion, summed from the top of the ladder."""
    j = (r - 1) / 2.0
    if algebra == OSPQ12:
        qr = qr_shift(r, q)
        steps = int(round(j - i))
        ks = np.arange(steps + 1)
        vals = np.array([q_number(i + t + qr, q) for t in ks])
        return complex(np.sum((-1.0) ** ks * vals))
    return q_number(j + i, q) * q_number(j - i + 1, q)


def alpha_closed(algebra, r, i, q):
    """Closed form of alpha_i.

    For osp_q(1|2) the sign of the [r/2 + shift] term alternates with the
    ladder depth, (-1)^((r-1)/2 - i); this is the resummation of alpha_sum and
    is what the recursion actually produces.
    """
    j = (r - 1) / 2.0
    if algebra == OSPQ12:
        qr = qr_shift(r, q)
        sgn = (-1.0) ** int(round(j - i))
        num = sgn * q_number(r / 2.0 + qr, q) + q_number(i + qr - 0.5, q)
        return num / (np.sqrt(complex(q)) + 1.0 / np.sqrt(complex(q)))
    return q_number(j + 0.5, q) ** 2 - q_number(i - 0.5, q) ** 2


def casimir_value(algebra, r, q):
    """Casimir eigenvalue on the r-dimensional irrep."""
    if algebra == OSPQ12:
        return q_number(r / 2.0 + qr_shift(r, q), q) ** 2
    return q_number(r / 2.0, q) ** 2


def build_irrep(algebra, r, params=None):
    """Construct the r-dimensional irrep with the ladder normalization
    beta_{i-1} = (-1)^(j-i) gamma_i (osp) or beta = gamma (sl_q(2))."""
    params = params or DeformParams(algebra=algebra)
    q = params.q
    r = int(r)
    if r < 1:
        raise QybeError("irrep dimension must be >= 1")
    j = (r - 1) / 2.0
    E = np.zeros((r, r), dtype=complex)
    F = np.zeros((r, r), dtype=complex)
    if algebra == OSPQ12:
        qr = qr_shift(r, q)
        lam = np.array([(j - k) + qr for k in range(r)])
        parities = tuple(k % 2 for k in range(r))
        spin = (r - 1) / 4.0 + qr / 2.0
    elif algebra == SLQ2:
        lam = np.array([2.0 * (j - k) for k in range(r)], dtype=complex)
        parities = tuple(0 for _ in range(r))
        spin = j
    else:
        raise QybeError(f"unknown algebra {algebra!r}")
    for k in range(r - 1):
        i = j - k  # gamma_i lowers v_i, beta_{i-1} raises v_{i-1}
        a = alpha_sum(algebra, r, i, q)
        if abs(a) < 1e3 * params.precision and 0 < k:
            raise DegenerateParameterError(
                f"alpha vanished at interior weight i={i}; q is not generic"
            )
        if algebra == OSPQ12:
            sgn = (-1.0) ** int(round(j - i))
            gam = np.sqrt(a * sgn + 0j)
            bet = sgn * gam
        else:
            gam = np.sqrt(a + 0j)
            bet = gam
        E[k, k + 1] = bet
        F[k + 1, k] = gam
    return Irrep(
        algebra=algebra,
        r=r,
        j=complex(spin),
        E=E,
        F=F,
        H=np.diag(lam),
        parities=parities,
        casimir_value=casimir_value(algebra, r, q),
        params=params,
    )


def diag_power(q, H):
    """q**H for diagonal H, principal branch."""
    return np.diag(complex(q) ** np.diag(H))


def _qnum_diag(H, q):
    d = np.diag(H)
    return np.diag((complex(q) ** d - complex(q) ** (-d)) / (complex(q) - 1.0 / complex(q)))


def graded_kron_raw(A, B, pA_dom, pA_cod, pB_dom, pB_cod):
    """Graded Kronecker product of raw matrices with explicit parity vectors."""
    m1, n1 = A.shape
    m2, n2 = B.shape
    out = np.kron(A, B).reshape(m1, m2, n1, n2)
    sign = (-1.0) ** (
        np.asarray(pA_dom)[None, None, :, None]
        * (np.asarray(pB_cod)[None, :, None, None] + np.asarray(pB_dom)[None, None, None, :])
    )
    return (out * sign).reshape(m1 * m2, n1 * n2)


def graded_kron(A, B):
    """Graded Kronecker product of two GradedOperators."""
    m = graded_kron_raw(
        A.matrix, B.matrix,
        A.domain.flat_parities(), A.codomain.flat_parities(),
        B.domain.flat_parities(), B.codomain.flat_parities(),
    )
    return GradedOperator(m, A.domain.tensor(B.domain), A.codomain.tensor(B.codomain))


class RepLike:
    """Minimal (E, F, H, parities) bundle; irreps and composite blocks both
    feed the coproduct and coupling machinery through this."""

    __slots__ = ("algebra", "E", "F", "H", "parities")

    def __init__(self, algebra, E, F, H, parities):
        self.algebra = algebra
        self.E = np.asarray(E, dtype=complex)
        self.F = np.asarray(F, dtype=complex)
        self.H = np.asarray(H, dtype=complex)
        self.parities = tuple(int(x) for x in parities)

    @property
    def dim(self):
        return len(self.parities)


def as_replike(rep):
    if isinstance(rep, RepLike):
        return rep
    return RepLike(rep.algebra, rep.E, rep.F, rep.H, rep.parities)


def coproduct_pair(algebra, repA, repB, q):
    """Two-fold coproduct matrices (e, f, h) on the graded product, returned
    as a RepLike on the pair space."""
    A, B = as_replike(repA), as_replike(repB)
    pa, pb = A.parities, B.parities
    gk = lambda X, Y: graded_kron_raw(X, Y, pa, pa, pb, pb)
    IA, IB = np.eye(A.dim), np.eye(B.dim)
    if algebra == OSPQ12:
        e = gk(A.E, diag_power(q, -B.H / 2)) + gk(diag_power(q, A.H / 2), B.E)
        f = gk(A.F, diag_power(q, -B.H / 2)) + gk(diag_power(q, A.H / 2), B.F)
    else:
        e = gk(A.E, IB) + gk(diag_power(q, A.H), B.E)
        f = gk(A.F, diag_power(q, -B.H)) + gk(IA, B.F)
    h = gk(A.H, IB) + gk(IA, B.H)
    pars = (np.add.outer(np.asarray(pa), np.asarray(pb)) % 2).reshape(-1)
    return RepLike(algebra, e, f, h, pars)


def coproduct(generator, rep1, rep2, params=None):
    """Coproduct of one generator on the tensor product of two irreps."""
    if rep1.algebra != rep2.algebra:
        raise QybeError("mixed-algebra coproduct")
    params = params or rep1.params or DeformParams(algebra=rep1.algebra)
    pair = coproduct_pair(rep1.algebra, rep1, rep2, params.q)
    mat = {"e": pair.E, "f": pair.F, "h": pair.H}[generator]
    sp = Space.single(rep1.parities).tensor(Space.single(rep2.parities))
    return GradedOperator(mat, sp, sp, label=f"Delta[{generator}]")


def nfold_coproduct(algebra, reps, q):
    """Iterated coproduct over a list of RepLike factors (coassociative, so
    the left-nested bracketing is as good as any)."""
    cur = as_replike(reps[0])
    for nxt in reps[1:]:
        cur = coproduct_pair(algebra, cur, as_replike(nxt), q)
    return cur


def graded_permutation(rep1, rep2):
    """Swap operator P: V1 (x) V2 -> V2 (x) V1 with the Koszul sign
    (-1)^(p_a p_b); P^2 = 1 exactly on matching factors."""
    p1, p2 = rep1.parities, rep2.parities
    d1, d2 = len(p1), len(p2)
    out = np.zeros((d1 * d2, d1 * d2))
    for a in range(d1):
        for b in range(d2):
            out[b * d1 + a, a * d2 + b] = (-1.0) ** (p1[a] * p2[b])
    dom = Space.single(p1).tensor(Space.single(p2))
    cod = Space.single(p2).tensor(Space.single(p1))
    return GradedOperator(out, dom, cod, label="P")


def perm_matrix(sigma, dims, parities):
    """Signed permutation matrix on a product of factors: target slot t holds
    source slot sigma[t]; Koszul sign counts inverted odd pairs."""
    n = len(dims)
    tdims = [dims[s] for s in sigma]
    N = int(np.prod(dims))
    out = np.zeros((N, N))
    pars = [np.asarray(p) for p in parities]
    for src in np.ndindex(*dims):
        s = 0
        for t1 in range(n):
            for t2 in range(t1 + 1, n):
                if sigma[t1] > sigma[t2]:
                    s += pars[sigma[t1]][src[sigma[t1]]] * pars[sigma[t2]][src[sigma[t2]]]
        tgt = tuple(src[sigma[t]] for t in range(n))
        out[np.ravel_multi_index(tgt, tdims), np.ravel_multi_index(src, dims)] = (-1.0) ** s
    return out


def embed_at(op, pos, dims, parities):
    """Embed an operator acting on the ordered factor pair/tuple pos into the
    full product, moving factors with graded permutations."""
    n = len(dims)
    pos = tuple(pos)
    rest = [k for k in range(n) if k not in pos]
    sigma = list(pos) + rest
    P = perm_matrix(sigma, dims, parities)
    drest = int(np.prod([dims[k] for k in rest])) if rest else 1
    full = np.kron(op, np.eye(drest))
    return P.T @ full @ P


def casimir_matrix(algebra, rep_like, q):
    """Casimir as a matrix over a RepLike (works for irreps and coproducts)."""
    R = as_replike(rep_like)
    d = np.diag(R.H)
    qc = complex(q)
    if algebra == OSPQ12:
        A = (qc ** 0.5 + qc ** -0.5) * (R.E @ R.F) - np.diag(
            (qc ** (d - 0.5) - qc ** (-(d - 0.5))) / (qc - 1.0 / qc)
        )
        return A @ A
    g = np.diag(((qc ** ((d - 1) / 2.0) - qc ** (-(d - 1) / 2.0)) / (qc - 1.0 / qc)) ** 2)
    return R.E @ R.F + g


def casimir(rep, rep2=None, params=None):
    """Casimir operator on an irrep, or the coproduct Casimir on a pair."""
    params = params or rep.params or DeformParams(algebra=rep.algebra)
    if rep2 is None:
        sp = Space.single(rep.parities)
        return GradedOperator(casimir_matrix(rep.algebra, rep, params.q), sp, sp, label="c")
    pair = coproduct_pair(rep.algebra, rep, rep2, params.q)
    sp = Space.single(rep.parities).tensor(Space.single(rep2.parities))
    return GradedOperator(casimir_matrix(rep.algebra, pair, params.q), sp, sp, label="Delta(c)")


def verify_algebra(rep, params=None):
    """Max-abs residuals of the defining relations; keys name the relation."""
    params = params or rep.params or DeformParams(algebra=rep.algebra)
    q = params.q
    E, F, H = rep.E, rep.F, rep.H
    out = {}
    if rep.algebra == OSPQ12:
        out["ef+fe-[h]"] = np.abs(E @ F + F @ E - _qnum_diag(H, q)).max()
        out["[h,e]-e"] = np.abs(H @ E - E @ H - E).max()
        out["[h,f]+f"] = np.abs(H @ F - F @ H + F).max()
    else:
        out["[e,f]-[h]"] = np.abs(
            E @ F - F @ E - (diag_power(q, H) - diag_power(q, -H)) / (q - 1.0 / q)
        ).max()
        out["e qh-shift"] = np.abs(E @ diag_power(q, H + 2 * np.eye(rep.r)) - diag_power(q, H) @ E).max()
        out["f qh-shift"] = np.abs(F @ diag_power(q, H) - diag_power(q, H + 2 * np.eye(rep.r)) @ F).max()
    c = casimir_matrix(rep.algebra, rep, q)
    out["casimir-scalar"] = np.abs(c - rep.casimir_value * np.eye(rep.r)).max()
    return out


def invariant_metric(e_mat, f_mat, tol=1e-9):
    """Diagonal bilinear form M with e^T M = M f, found by propagating the
    ladder relations over the weight graph.  Anchored at the first basis
    state; disconnected components are anchored at 1.  Returns (diagonal,
    consistency residual)."""
    n = e_mat.shape[0]
    d = np.zeros(n, dtype=complex)
    known = np.zeros(n, dtype=bool)
    for seed in range(n):
        if known[seed]:
            continue
        # one free scale per ladder-connected component
        d[seed] = 1.0
        known[seed] = True
        stack = [seed]
        while stack:
            x = stack.pop()
            for y in range(n):
                if known[y]:
                    continue
                if abs(e_mat[x, y]) > tol and abs(f_mat[y, x]) > tol:
                    d[y] = e_mat[x, y] * d[x] / f_mat[y, x]
                elif abs(e_mat[y, x]) > tol and abs(f_mat[x, y]) > tol:
                    d[y] = d[x] * f_mat[x, y] / e_mat[y, x]
                else:
                    continue
                known[y] = True
                stack.append(y)
    M = np.diag(d)
    scale = max(1.0, np.abs(e_mat).max() * np.abs(d).max())
    res = np.abs(e_mat.T @ M - M @ f_mat).max() / scale
    return d, res
