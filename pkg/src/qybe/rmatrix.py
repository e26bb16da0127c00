"""Spectral R-matrices: the baxterized singlet-projector family, the three
spin-1 solutions, the universal intertwiner and verification helpers.

All residuals returned by the checkers are relative: max-abs of the mismatch
divided by the scale of the operators entering the relation.  The universal
intertwiner on even-dimensional graded irreps has entries spanning many
orders of magnitude, so absolute residuals would be meaningless there.
"""

from dataclasses import dataclass, field

import numpy as np

from .qarith import (
    DeformParams,
    OSPQ12,
    PoleError,
    QybeError,
    bracket_plus_factorial,
)
from .repspace import (
    GradedOperator,
    Space,
    build_irrep,
    coproduct_pair,
    diag_power,
    embed_at,
    graded_kron_raw,
    graded_permutation,
)
from .coupling import cgc_table, chi_factor, projector


def rel_residual(A, B):
    """max|A - B| / max(1, |A|, |B|)."""
    sc = max(1.0, np.abs(A).max(), np.abs(B).max())
    return float(np.abs(A - B).max() / sc)


def hecke_f(u, chi, a=1.0, tol=1e-12):
    """Baxterized coefficient f(u) = 2 / (-1 + s coth(a u)), s = sqrt(1-4 chi).

    f(0) = 0 by the coth limit; a pole sits where the denominator vanishes
    (at u = -u0 modulo the period of coth)."""
    u = complex(u)
    if abs(u) < 1e-14:
        return 0j
    s = np.sqrt(1 - 4 * chi + 0j)
    den = -1.0 + s / np.tanh(a * u)
    if abs(den) < 1e3 * tol:
        raise PoleError(f"f(u) pole at u={u}")
    return 2.0 / den


def u0_point(chi, a=1.0):
    """Degeneration point: f(u0) = -1, i.e. u0 = atanh(-sqrt(1-4 chi))/a."""
    s = np.sqrt(1 - 4 * chi + 0j)
    return np.arctanh(-s + 0j) / a


def f_slope(chi, a=1.0):
    """f'(0) = 2a / sqrt(1 - 4 chi)."""
    return 2.0 * a / np.sqrt(1 - 4 * chi + 0j)


def braid_limit_f(chi, sign):
    """f at u -> +-infinity: 2 / (-1 +- sqrt(1-4 chi))."""
    s = np.sqrt(1 - 4 * chi + 0j)
    return 2.0 / (-1.0 + sign * s)


@dataclass
class SpectralRMatrix:
    """A one-parameter family u -> R(u) on a fixed pair of factors.

    check_fn evaluates the check form; the non-check form composes with the
    graded swap.  poly_weight/poly_base, when set, polynomialize the family:
    poly_weight(u) * R(u) = sum_p poly_base(u)**(p-1) * M_p, which is what
    spectral_decompose fits.
    """

    algebra: str
    r1: int
    r2: int
    family: str
    params: DeformParams
    chi: complex = None
    u0: complex = None
    check_fn: callable = field(repr=False, default=None)
    swap: np.ndarray = field(repr=False, default=None)
    space: Space = field(repr=False, default=None)
    parities: tuple = ()
    poly_weight: callable = field(repr=False, default=None)
    poly_base: callable = field(repr=False, default=None)
    nterms: int = 0

    def check(self, u):
        return GradedOperator(self.check_fn(u), self.space, self.space,
                              label=f"Rcheck[{self.family}]({u})")

    def noncheck(self, u):
        return GradedOperator(self.swap @ self.check_fn(u), self.space, self.space,
                              label=f"R[{self.family}]({u})")

    def braid_limit(self, sign, big=40.0):
        """Constant matrix limit of the normalized check form at u -> +-inf,
        evaluated at a saturating argument."""
        a = self.params.a if self.family == "hecke" else np.log(self.params.q)
        u = sign * big / max(abs(a), 1e-3)
        return self.check_fn(u)


def hecke_r(rep, u, params=None, chi=None):
    """Check R-matrix I + f(u) P1 on V^r (x) V^r."""
    fam = hecke_family(rep, params, chi)
    return fam.check(u)


def hecke_family(rep, params=None, chi=None):
    """Baxterized family on V^r (x) V^r for either algebra.

    The coefficient function is parameterized by the triple-overlap scalar
    chi alone, so one code path covers both symmetry classes."""
    params = params or rep.params or DeformParams(algebra=rep.algebra)
    if chi is None:
        chi = chi_factor(rep.algebra, rep.r, params)
    P1 = projector(rep, rep, 1, params).matrix
    I = np.eye(rep.r ** 2)
    a = params.a
    s = np.sqrt(1 - 4 * chi + 0j)
    sp = Space.single(rep.parities).tensor(Space.single(rep.parities))
    swap = graded_permutation(rep, rep).matrix

    def check_fn(u):
        return I + hecke_f(u, chi, a) * P1

    def poly_weight(u):
        # (e^{2au}-1) * (-1 + s*coth(au)): clears the f-denominator and
        # leaves x-linear content, x = e^{2au}
        x = np.exp(2 * a * complex(u))
        return (x - 1) * (-1.0) + s * (x + 1)

    return SpectralRMatrix(
        algebra=rep.algebra, r1=rep.r, r2=rep.r, family="hecke", params=params,
        chi=chi, u0=u0_point(chi, a), check_fn=check_fn, swap=swap, space=sp,
        parities=rep.parities,
        poly_weight=poly_weight,
        poly_base=lambda u: np.exp(2 * a * complex(u)),
        nterms=2,
    )


def r33_fixture(kind, u, q=1.3, params=None):
    """One of the three spin-1 sl_q(2) solutions, normalized to 1 at u = 0."""
    return r33_family(kind, q, params).check(u)


def r33_family(kind, q=1.3, params=None):
    """Spectral families on V^3 (x) V^3 of sl_q(2) written over the invariant
    projectors P5, P3, P1.  Kind 1 is the three-term descendant-type solution,
    kind 2 the Birman-Wenzl-Murakami-type one sharing its braid limits, kind 3
    the two-term family (requires real q > 0 for its square-root coefficient).
    """
    params = params or DeformParams(q=q, algebra="slq2")
    q = params.q
    rep = build_irrep("slq2", 3, params)
    tab = cgc_table(rep, rep, params)
    P5 = projector(rep, rep, 5, params, table=tab).matrix
    P3 = projector(rep, rep, 3, params, table=tab).matrix
    P1 = projector(rep, rep, 1, params, table=tab).matrix

    if kind == 1:
        abar = (q ** 2 - q ** -2) * (q - 1 / q)
        # middle-term P3 coefficient q^3 + q^-3: forced by the normalization
        # at u = 0 and confirmed by the triple-product relation
        R0 = -(q + 1 / q) * (P5 + P1) + (q ** 3 + q ** -3) * P3

        def check_fn(u):
            qu = q ** complex(u)
            return (qu * (q ** -3 * P5 - q * P3 + q ** 3 * P1) + R0
                    + (1 / qu) * (q ** 3 * P5 - q ** -1 * P3 + q ** -3 * P1)) / abar
    elif kind == 2:
        aprime = (q ** 2 - q ** -2) * (q ** 3 + q ** -3)
        R0 = (q ** 5 - q ** -5) * (P3 + P1) + (q ** -1 - q) * P5

        def check_fn(u):
            qu = q ** complex(u)
            return (-qu * q ** -2 * (q ** -3 * P5 - q * P3 + q ** 3 * P1) + R0
                    + (1 / qu) * q ** 2 * (q ** 3 * P5 - q ** -1 * P3 + q ** -3 * P1)) / aprime
    elif kind == 3:
        if abs(np.imag(q)) > 1e-12 or np.real(q) <= 0:
            raise QybeError("kind-3 coefficient needs real positive q")
        root = np.sqrt(q ** 4 + q ** -4 - 1 + 2 * q ** 2 + 2 * q ** -2)
        acoef = (root + q ** 2 + 1 + q ** -2) / (root - (q ** 2 + 1 + q ** -2))

        def check_fn(u):
            qu = q ** complex(u)
            return (qu * (P5 + P3 + acoef * P1)
                    + (1 / qu) * (acoef * (P5 + P3) + P1)) / (1 + acoef)
    else:
        raise QybeError(f"fixture kind must be 1, 2 or 3, got {kind}")

    sp = Space.single(rep.parities).tensor(Space.single(rep.parities))
    return SpectralRMatrix(
        algebra="slq2", r1=3, r2=3, family=f"r33_{kind}", params=params,
        check_fn=check_fn, swap=graded_permutation(rep, rep).matrix, space=sp,
        parities=rep.parities,
        poly_weight=lambda u: q ** complex(u),
        poly_base=lambda u: q ** complex(u),
        nterms=3,
    )


def universal_r(rep1, rep2, sign=+1, params=None):
    """Universal intertwiner on V^r1 (x) V^r2 of the graded algebra.

    The plus matrix is the weight-twisted nilpotent sum; the minus one is its
    transpose with q -> 1/q substituted in every scalar (the representation
    matrices are kept, so both live in the same basis)."""
    params = params or rep1.params or DeformParams(algebra=rep1.algebra)
    if rep1.algebra != OSPQ12 or rep2.algebra != OSPQ12:
        raise QybeError("the universal intertwiner is implemented for the graded algebra")
    q = 1.0 / params.q if sign < 0 else params.q
    E1, H1, p1 = rep1.E, rep1.H, rep1.parities
    F2, H2, p2 = rep2.F, rep2.H, rep2.parities
    l1, l2 = np.diag(H1), np.diag(H2)
    khh = np.exp(-np.log(q) * np.outer(l1, l2)).ravel()
    out = np.zeros((rep1.r * rep2.r,) * 2, dtype=complex)
    for n in range(0, min(rep1.r, rep2.r)):
        coef = ((-np.sqrt(q)) ** (0.5 * n * (n - 1)) * (q - 1.0 / q) ** n
                / bracket_plus_factorial(n, q))
        A = diag_power(q, -n * H1 / 2) @ np.linalg.matrix_power(E1, n)
        B = np.linalg.matrix_power(F2, n) @ diag_power(q, n * H2 / 2)
        out += coef * graded_kron_raw(A, B, p1, p1, p2, p2)
    m = np.diag(khh) @ out
    if sign < 0:
        m = m.T
    sp = Space.single(p1).tensor(Space.single(p2))
    return GradedOperator(m, sp, sp, label=f"R{'+' if sign > 0 else '-'}")


def intertwining_residual(R, rep1, rep2, params=None):
    """Relative residual of R Delta[g] = Delta'[g] R over all generators,
    with Delta' the flipped coproduct."""
    params = params or rep1.params or DeformParams(algebra=rep1.algebra)
    pair = coproduct_pair(rep1.algebra, rep1, rep2, params.q)
    pair_flip = coproduct_pair(rep1.algebra, rep2, rep1, params.q)
    P = graded_permutation(rep2, rep1).matrix  # V2 x V1 -> V1 x V2
    m = R.matrix if isinstance(R, GradedOperator) else R
    worst = 0.0
    for g in ("E", "F", "H"):
        D = getattr(pair, g)
        Dp = P @ getattr(pair_flip, g) @ np.linalg.inv(P)
        worst = max(worst, rel_residual(m @ D, Dp @ m))
    return worst


def ybe_residual(R_a, R_b, R_c, u=0.0, w=0.0, form="check", parities=None):
    """Relative residual of the triple-product relation.

    check:    R12(u) R23(u+w) R12(w) = R23(w) R12(u+w) R23(u), plain
              embeddings (the check form carries no grading signs).
    noncheck: R12(u) R13(u+w) R23(w) = R23(w) R13(u+w) R12(u), with the
              1-3 leg embedded through graded permutations.

    Each argument is a SpectralRMatrix (evaluated at u, u+w, w respectively)
    or a constant matrix / GradedOperator used at every slot.
    """
    def get(Rx, uu):
        if isinstance(Rx, SpectralRMatrix):
            return Rx.check_fn(uu) if form == "check" else Rx.swap @ Rx.check_fn(uu)
        return Rx.matrix if isinstance(Rx, GradedOperator) else np.asarray(Rx)

    if parities is None:
        if isinstance(R_a, SpectralRMatrix):
            parities = R_a.parities
        else:
            raise QybeError("parities must be given for constant-matrix input")
    r = len(parities)
    A, B, C = get(R_a, u), get(R_b, u + w), get(R_c, w)
    if A.shape[0] != r * r:
        raise QybeError("operator does not act on a like-factor pair")
    dims = [r, r, r]
    pars = [parities] * 3
    if form == "check":
        I = np.eye(r)
        a12, b23, c12 = np.kron(A, I), np.kron(I, B), np.kron(C, I)
        c23, b12, a23 = np.kron(I, C), np.kron(B, I), np.kron(I, A)
        lhs = a12 @ b23 @ c12
        rhs = c23 @ b12 @ a23
    elif form == "noncheck":
        lhs = embed_at(A, (0, 1), dims, pars) @ embed_at(B, (0, 2), dims, pars) \
            @ embed_at(C, (1, 2), dims, pars)
        rhs = embed_at(C, (1, 2), dims, pars) @ embed_at(B, (0, 2), dims, pars) \
            @ embed_at(A, (0, 1), dims, pars)
    else:
        raise QybeError(f"unknown YBE form {form!r}")
    return rel_residual(lhs, rhs)


def mixed_braid_check(Rplus, Rminus, parities):
    """Residuals of the constant braid relations a two-term spectral family
    forces on its limits: the two homogeneous triples, four mixed ones and
    the alternating-difference relation.

    The alternating relation is inhomogeneous in the pair, so it is sensitive
    to the relative normalization of the two matrices (the six others are
    not).  alt holds as stated for the pair extracted from one spectral
    family; alt_balanced reports its scale-free content, the proportionality
    of the two difference terms, together with the balancing scalar."""
    Rp = Rplus.matrix if isinstance(Rplus, GradedOperator) else np.asarray(Rplus)
    Rm = Rminus.matrix if isinstance(Rminus, GradedOperator) else np.asarray(Rminus)
    r = len(parities)
    dims, pars = [r, r, r], [parities] * 3
    P12 = lambda X: embed_at(X, (0, 1), dims, pars)
    P13 = lambda X: embed_at(X, (0, 2), dims, pars)
    P23 = lambda X: embed_at(X, (1, 2), dims, pars)
    p12, p13, p23 = P12(Rp), P13(Rp), P23(Rp)
    m12, m13, m23 = P12(Rm), P13(Rm), P23(Rm)
    t_linear = p12 @ m13 @ p23 - p23 @ m13 @ p12
    t_square = m12 @ p13 @ m23 - m23 @ p13 @ m12
    scale = np.vdot(t_square, t_linear) / max(np.vdot(t_square, t_square).real, 1e-300)
    out = {
        "ppp": rel_residual(p12 @ p13 @ p23, p23 @ p13 @ p12),
        "mmm": rel_residual(m12 @ m13 @ m23, m23 @ m13 @ m12),
        "ppm": rel_residual(p12 @ p13 @ m23, m23 @ p13 @ p12),
        "mmp": rel_residual(m12 @ m13 @ p23, p23 @ m13 @ m12),
        "mpp": rel_residual(m12 @ p13 @ p23, p23 @ p13 @ m12),
        "pmm": rel_residual(p12 @ m13 @ m23, m23 @ m13 @ p12),
        "alt": rel_residual(t_linear, t_square),
        "alt_balanced": rel_residual(t_linear, scale * t_square),
        "balance_scale": complex(scale),
    }
    out["max"] = max(v for k, v in out.items()
                     if k not in ("balance_scale", "alt_balanced"))
    out["max_balanced"] = max(v for k, v in out.items()
                              if k not in ("balance_scale", "alt", "max"))
    return out


class IllConditionedFitError(QybeError):
    """Spectral decomposition sampling produced an ill-conditioned system."""


def spectral_decompose(fam, r1=None, samples=None, rng=None):
    """Fit poly_weight(u) R(u) = sum_p poly_base(u)^(p-1) M_p over >= r1
    sample points of the non-check family; returns (list of M_p, residual).

    Trigonometric families only: the family must declare its polynomial
    weight and elementary power."""
    if fam.poly_weight is None or fam.poly_base is None:
        raise QybeError("family does not declare a polynomialization")
    r1 = r1 or fam.nterms or fam.r1
    rng = rng or np.random.default_rng(42)
    if samples is None:
        samples = [complex(x) for x in rng.uniform(0.2, 1.4, 2 * r1)]
    if len(samples) < r1:
        raise QybeError("need at least r1 sample points")
    d = fam.r1 * fam.r2
    V = np.zeros((len(samples), r1), dtype=complex)
    Y = np.zeros((len(samples), d * d), dtype=complex)
    for k, u in enumerate(samples):
        x = fam.poly_base(u)
        V[k] = [x ** p for p in range(r1)]
        Y[k] = (fam.poly_weight(u) * (fam.swap @ fam.check_fn(u))).ravel()
    cond = np.linalg.cond(V)
    if cond > 1e10:
        raise IllConditionedFitError(f"Vandermonde condition number {cond:.1e}")
    coefs, res, rank, sv = np.linalg.lstsq(V, Y, rcond=None)
    fitted = V @ coefs
    resid = np.abs(fitted - Y).max() / max(1.0, np.abs(Y).max())
    mats = [coefs[p].reshape(d, d) for p in range(r1)]
    return mats, float(resid)
