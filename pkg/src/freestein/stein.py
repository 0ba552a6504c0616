"""Stein kernels of polynomial potentials and their distance to the identity.

A kernel for the state phi and potential v is a matrix A over the
tensor square with

    <Dv(X) - phi(Dv(X)), P(X)>  =  <A, (JP)(X)>     for every tuple P,

where Dv is the cyclic gradient and JP the Jacobian.  The explicit
kernel ``algebra.explicit_kernel(v)`` satisfies this identity for every
tracial state; for a non-tracial phi the residual equals the
commutator defect 1/2 sum_i [phi(g_i P_i*) - phi(P_i* g_i)] with
g = Dv(X), which does not vanish in general.  ``stein_residual``
evaluates the defect of any candidate matrix on a test tuple.

``minimal_kernel`` approaches the kernel of least distance to the
identity block (1 (x) 1) I_n by projecting D = A0 - I onto the span of
Jacobians of monomial tuples of degree <= d.  Writing r_P = <D, JP> and
G_{PQ} = <JQ, JP>, the least-squares coefficients are c = G^+ r and

    sigma_d^2 = Re(r^H G^+ r)

is the squared norm of the projection: a lower bound on the squared
Stein discrepancy that is nondecreasing in d.  Since any two kernels
differ by an element orthogonal to the Jacobian span, the minimal
kernel estimate is I + sum_P c_P (JP)(X) = A0 - (unprojected part), and
A0 minus the estimate stays orthogonal to every basis Jacobian.

Jacobians of tuples concentrated in different coordinate slots are
orthogonal, and the slot-s block of G does not depend on s, so the
Gram is assembled once over words and reused for every slot.

``explicit_kernel_distance_sq`` evaluates ||A0 - I||^2 twice for the
quadratic potential on centered states -- generically through the
matrix pairing and through the closed-form moment expansion

    1/4 sum_ij [ 2 phi(x_i x_j^2 x_i) + 2 phi(x_i x_j)^2
                 + 2 phi(x_j x_i)^2 + 2 phi(x_i^2) phi(x_j^2) ]
    - 2 sum_i phi(x_i^2) + n

-- and insists they agree.  For centered states with identity
covariance the expansion is bounded by (n^2 + n^2 m4)/2 with
m4 = max_i phi(x_i^4), with equality for every unit-variance single
coordinate; the smaller constant (n^2 + n^2 m4 - n)/2 is reported
alongside for comparison but can undershoot the true distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    ComplexRational,
    KernelMatrix,
    NcPoly,
    TensorPoly,
    cyclic_gradient,
    explicit_kernel,
    jacobian,
    partial_derivative,
    quadratic_potential,
)
from .errors import (
    ConsistencyError,
    InadmissibleProblemError,
    InvalidStateError,
)
from .states import (
    dirichlet_gram,
    inner_tuple,
    moment_of_poly,
    tensor_moment,
    words_up_to,
)

CENTERING_TOL = 1e-9
PINV_TOL = 1e-10
PSD_TOL = 1e-8
AGREE_TOL = 1e-9


class SteinProblem:
    """A state phi together with a potential v.

    Stores the cyclic gradient, its componentwise means
    c_i = phi((D_i v)(X)) and the centering defect ||c||_2.  The problem
    is admissible when every |c_i| is below tolerance; only admissible
    problems define a kernel in the strict sense, but the centered
    identity holds regardless.
    """

    def __init__(self, phi, v, centering_tol=CENTERING_TOL):
        if phi.nvars != v.nvars:
            raise ValueError("state/potential nvars mismatch")
        self.phi = phi
        self.v = v
        self.n = v.nvars
        self.gradient = cyclic_gradient(v)
        self.gradient_means = tuple(
            moment_of_poly(phi, g) for g in self.gradient
        )
        self.centering_tol = centering_tol
        self.centering_defect = float(
            np.sqrt(sum(abs(c) ** 2 for c in self.gradient_means))
        )

    @property
    def admissible(self):
        return all(abs(c) <= self.centering_tol for c in self.gradient_means)

    def require_admissible(self):
        if not self.admissible:
            raise InadmissibleProblemError(
                f"centering defect {self.centering_defect:.3e} exceeds "
                f"{self.centering_tol:.1e}: phi(Dv(X)) != 0"
            )


def stein_residual(prob, a, ps):
    """Defect of the centered Stein identity on one test tuple.

    Returns <Dv(X) - phi(Dv(X)), P(X)> - <A, (JP)(X)>; zero (to
    rounding) iff the candidate matrix A satisfies the identity on P.
    Constant tuples give exactly zero because both sides vanish after
    centering.
    """
    phi = prob.phi
    if len(ps) != prob.n:
        raise ValueError("test tuple length must equal nvars")
    if a.size != prob.n or a.nvars != prob.n:
        raise ValueError("kernel matrix shape mismatch")
    lhs = 0j
    for g, mean, p in zip(prob.gradient, prob.gradient_means, ps):
        pstar = p.star()
        lhs += moment_of_poly(phi, g * pstar) - mean * moment_of_poly(phi, pstar)
    rhs = _matrix_pairing(phi, a, jacobian(ps))
    return lhs - rhs


def _matrix_pairing(phi, a, b):
    acc = TensorPoly.zero(a.nvars)
    for i in range(a.size):
        for j in range(a.size):
            acc = acc + a.rows[i][j].sharp(b.rows[i][j].star())
    phi.check_order(acc.max_leg_degree())
    return tensor_moment(phi, acc)


@dataclass(frozen=True)
class ExplicitKernelDistance:
    """||A0 - I||^2 for the explicit kernel, with fourth-moment constants.

    ``closed_form_sq`` is None unless the quadratic/centered fast path
    applies.  ``m4_bound_sq`` is (n^2 + n^2 m4 - n)/2 and
    ``m4_bound_sharp_sq`` is (n^2 + n^2 m4)/2; only the latter bounds
    ``distance_sq`` for isotropic states.
    """

    distance_sq: float
    closed_form_sq: float | None
    m4: float
    m4_bound_sq: float
    m4_bound_sharp_sq: float


def _is_centered(phi, tol=1e-9):
    return all(
        abs(phi.moment((i,))) <= tol for i in range(1, phi.nvars + 1)
    )


def explicit_kernel_distance_sq(prob, method="auto", agree_tol=AGREE_TOL):
    """Distance squared from the explicit kernel to the identity block.

    ``method``: "generic" always uses the matrix pairing; "closed"
    demands the quadratic potential and a centered state; "auto" runs
    both when the fast path applies and raises ConsistencyError if the
    two evaluations drift apart.
    """
    phi = prob.phi
    n = prob.n
    quadratic = prob.v == quadratic_potential(n)
    centered = _is_centered(phi)

    if method not in ("auto", "closed", "generic"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed" and not (quadratic and centered):
        raise InadmissibleProblemError(
            "closed-form distance needs the quadratic potential and a "
            "centered state"
        )

    closed = None
    if quadratic and centered and method in ("auto", "closed"):
        closed = _closed_form_distance_sq(phi, n)

    generic = None
    if method in ("auto", "generic"):
        a0 = explicit_kernel(prob.v)
        diff = a0 - KernelMatrix.identity(n)
        generic_c = _matrix_pairing(phi, diff, diff)
        if abs(generic_c.imag) > 1e-8 * max(1.0, abs(generic_c.real)):
            raise InvalidStateError(
                f"distance pairing is not real: {generic_c} (invalid state)"
            )
        generic = generic_c.real

    if closed is not None and generic is not None and abs(
        closed - generic
    ) > agree_tol * max(1.0, abs(generic)):
        raise ConsistencyError(
            f"closed-form distance {closed!r} and pairing distance "
            f"{generic!r} disagree beyond {agree_tol:.1e}"
        )

    phi.check_order(4)
    m4 = max(
        phi.moment((i, i, i, i)).real for i in range(1, n + 1)
    )
    return ExplicitKernelDistance(
        distance_sq=generic if generic is not None else closed,
        closed_form_sq=closed,
        m4=m4,
        m4_bound_sq=(n * n + n * n * m4 - n) / 2.0,
        m4_bound_sharp_sq=(n * n + n * n * m4) / 2.0,
    )


def _closed_form_distance_sq(phi, n):
    phi.check_order(4)
    total = 0j
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            t_ijji = phi.moment((i, j, j, i))
            z_ij = phi.moment((i, j))
            z_ji = phi.moment((j, i))
            t_sq = phi.moment((i, i)) * phi.moment((j, j))
            total += 2 * t_ijji + 2 * z_ij * z_ij + 2 * z_ji * z_ji + 2 * t_sq
    second = sum(phi.moment((i, i)) for i in range(1, n + 1))
    value = total / 4.0 - 2.0 * second + n
    return value.real


@dataclass(frozen=True)
class TruncationBasis:
    """Monomial tuples e_{w, s}: word w of length <= degree placed in
    coordinate slot s, ordered by (graded-lex word, slot)."""

    nvars: int
    degree: int
    elements: tuple  # of (slot, word) pairs, slots 1-based

    @classmethod
    def build(cls, nvars, degree):
        words = words_up_to(nvars, degree)
        elements = tuple(
            (slot, w) for w in words for slot in range(1, nvars + 1)
        )
        return cls(nvars=nvars, degree=degree, elements=elements)

    @property
    def words(self):
        seen = []
        last = None
        for _, w in self.elements:
            if w != last:
                seen.append(w)
                last = w
        return seen

    def __len__(self):
        return len(self.elements)


@dataclass(frozen=True)
class MinimalKernelResult:
    """Projection of A0 - I onto the degree-d Jacobian span.

    ``sigma_sq`` is the squared projection norm (lower bound on the
    squared discrepancy), ``coefficients`` the least-squares solution
    over ``basis.elements``, ``kernel`` the represented minimal kernel
    I + sum c_P (JP)(X).
    """

    basis: TruncationBasis
    coefficients: np.ndarray
    sigma_sq: float
    gram_rank: int
    null_dim: int
    kernel: KernelMatrix


def minimal_kernel(prob, degree, pinv_tol=PINV_TOL, psd_tol=PSD_TOL):
    """Least-squares minimal Stein kernel over the truncated basis.

    Assembles the word-level Jacobian Gram once (slot blocks coincide),
    solves G c_s = r_s per slot with an eigenvalue pseudo-inverse whose
    cutoff treats singular directions as the relation null space, and
    reports its dimension rather than hiding it.
    """
    prob.require_admissible()
    phi = prob.phi
    n = prob.n
    if degree < 0:
        raise ValueError("degree must be >= 0")

    basis = TruncationBasis.build(n, degree)
    words = words_up_to(n, degree)
    deg_v = prob.v.degree()
    phi.check_order(max(2 * max(degree - 1, 0), deg_v + max(degree - 1, 0), 2))

    gram = dirichlet_gram(phi, words)
    eigs, vecs = np.linalg.eigh(gram)
    scale = max(eigs.max(initial=0.0), 0.0)
    if eigs.min(initial=0.0) < -psd_tol * max(1.0, scale):
        raise InvalidStateError(
            f"Jacobian Gram has negative eigenvalue {eigs.min():.3e} "
            "(invalid state)"
        )
    keep = eigs > pinv_tol * max(scale, 1e-300)
    rank_w = int(keep.sum())
    inv_eigs = np.zeros_like(eigs)
    inv_eigs[keep] = 1.0 / eigs[keep]

    a0 = explicit_kernel(prob.v)
    ident = KernelMatrix.identity(n)
    diff = a0 - ident

    # r_s[b] = <A0 - I, J e_{w_b, s}> = sum_k (phi (x) phi)(D_sk # (d_k w_b)*)
    deriv_stars = []
    for w in words:
        p = NcPoly.monomial(w, n)
        deriv_stars.append(
            [partial_derivative(k, p).star() for k in range(1, n + 1)]
        )

    sigma_sq = 0.0
    coeff_blocks = []
    for slot in range(n):
        r = np.zeros(len(words), dtype=complex)
        for b, _w in enumerate(words):
            total = 0j
            for k in range(n):
                prod = diff.rows[slot][k].sharp(deriv_stars[b][k])
                if prod.terms:
                    total += tensor_moment(phi, prod)
            r[b] = total
        c = vecs @ (inv_eigs * (vecs.conj().T @ r))
        sigma_sq += float((r.conj() @ c).real)
        coeff_blocks.append(c)

    if sigma_sq < -1e-9:
        raise InvalidStateError(
            f"negative squared projection {sigma_sq:.3e} (invalid state)"
        )
    sigma_sq = max(sigma_sq, 0.0)

    # basis.elements order is (word-major, slot-minor)
    coefficients = np.zeros(len(basis), dtype=complex)
    word_index = {w: i for i, w in enumerate(words)}
    for b_idx, (slot, w) in enumerate(basis.elements):
        coefficients[b_idx] = coeff_blocks[slot - 1][word_index[w]]

    kernel = _assemble_kernel(n, words, coeff_blocks)
    return MinimalKernelResult(
        basis=basis,
        coefficients=coefficients,
        sigma_sq=sigma_sq,
        gram_rank=n * rank_w,
        null_dim=n * (len(words) - rank_w),
        kernel=kernel,
    )


def _assemble_kernel(n, words, coeff_blocks):
    """I + sum over slots s and words w of c_{s,w} J(e_{w,s})."""
    rows = []
    for slot in range(n):
        row = []
        for k in range(1, n + 1):
            acc = TensorPoly.one(n) if (k - 1) == slot else TensorPoly.zero(n)
            for w, c in zip(words, coeff_blocks[slot]):
                if c == 0:
                    continue
                d = partial_derivative(k, NcPoly.monomial(w, n))
                if d.terms:
                    acc = acc + d.scale(ComplexRational.from_number(complex(c)))
            row.append(acc)
        rows.append(tuple(row))
    return KernelMatrix(tuple(rows))


@dataclass(frozen=True)
class DiscrepancyReport:
    """Lower bound and the two upper bounds on the squared discrepancy.

    ``upper_poincare_sq = n + C ||Dv(X)||^2 - 2 Re<Dv(X), X>`` uses the
    supplied constant C; it is a certified upper bound only when C is a
    genuine upper bound on the optimal Poincare constant, which the
    caller indicates with ``c_is_upper``.  ``simplified_sq`` is
    n (C - 1), reported when v is quadratic and the state is centered
    with identity covariance.
    """

    degree: int
    sigma_lower_sq: float
    upper_explicit_sq: float
    upper_poincare_sq: float
    simplified_sq: float | None
    c_opt_used: float
    c_is_upper: bool
    gram_rank: int
    null_dim: int
    centering_defect: float


def discrepancy_bounds(prob, degree, c_opt, c_is_upper=False, slack=1e-8):
    """Combine the truncated lower bound with both upper bounds.

    Raises ConsistencyError when a certified upper bound falls below
    the lower bound beyond ``slack`` (possible only for invalid states).
    """
    prob.require_admissible()
    phi = prob.phi
    n = prob.n

    mk = minimal_kernel(prob, degree)
    dist = explicit_kernel_distance_sq(prob)

    grad_sq = inner_tuple(phi, prob.gradient, prob.gradient).real
    coords = tuple(NcPoly.gen(i, n) for i in range(1, n + 1))
    grad_x = inner_tuple(phi, prob.gradient, coords).real
    upper_poincare = n + c_opt * grad_sq - 2.0 * grad_x

    simplified = None
    if prob.v == quadratic_potential(n) and _is_centered(phi):
        iso = all(
            abs(phi.moment((i, j)) - (1.0 if i == j else 0.0)) <= 1e-8
            for i in range(1, n + 1)
            for j in range(1, n + 1)
        )
        if iso:
            simplified = n * (c_opt - 1.0)

    if mk.sigma_sq > dist.distance_sq + slack:
        raise ConsistencyError(
            f"projection lower bound {mk.sigma_sq} exceeds the explicit "
            f"kernel distance {dist.distance_sq}"
        )
    if c_is_upper and mk.sigma_sq > upper_poincare + slack:
        raise ConsistencyError(
            f"projection lower bound {mk.sigma_sq} exceeds the certified "
            f"Poincare-route bound {upper_poincare}"
        )

    return DiscrepancyReport(
        degree=degree,
        sigma_lower_sq=mk.sigma_sq,
        upper_explicit_sq=dist.distance_sq,
        upper_poincare_sq=upper_poincare,
        simplified_sq=simplified,
        c_opt_used=c_opt,
        c_is_upper=c_is_upper,
        gram_rank=mk.gram_rank,
        null_dim=mk.null_dim,
        centering_defect=prob.centering_defect,
    )
