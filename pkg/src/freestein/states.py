"""Moment functionals (noncommutative distributions) and their pairings.

A state is determined by its word moments phi(t_{i1}...t_{im}).  Two
backends live here:

* ``MomentTable`` -- an explicit word -> value map up to a max order;
* ``CumulantState`` -- moments generated from a ``CumulantSpec`` of free
  cumulants through the noncrossing-partition sum
  ``phi(w) = sum over pi in NC(|w|) of prod over blocks B of kappa(w|B)``,
  memoized per word.

(The third backend, Monte Carlo over matrix ensembles, produces a
``MomentTable``; see ``matrixmodels``.)

On top of a state the module provides the evaluation pairings used by
the rest of the library:

* ``moment_of_poly``      phi(p(X)),
* ``tensor_moment``       (phi (x) phi)(q(X)) for tensor-square elements,
* ``inner_tuple``         <p, r> = sum_i phi(p_i r_i*),
* ``inner_matrix``        <A, B> = (phi (x) phi) Tr(A # B*),

all linear in the first slot and conjugate-linear in the second, plus
the Gram assemblies shared by the Stein and Poincare solvers.

Symbolic inputs are exact; evaluation is double-precision complex.
Every functional caches word moments behind a lock and is safe for
concurrent reads.  High-level helpers precompute the word length they
need and raise ``BudgetExceededError`` before touching the backend.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

import numpy as np

from .algebra import NcPoly, TensorPoly
from .errors import BudgetExceededError, InvalidStateError
from .partitions import noncrossing_partitions
from . import partitions


def words_up_to(nvars, max_len, min_len=0):
    """All words over {1..nvars} with min_len <= length <= max_len,
    in graded-lexicographic order."""
    out = []
    for m in range(min_len, max_len + 1):
        out.extend(itertools.product(range(1, nvars + 1), repeat=m))
    return out


def rotations(word):
    return [word[k:] + word[:k] for k in range(len(word))]


class MomentFunctional:
    """Base class: a unital linear functional described by word moments.

    ``norm_upper`` optionally carries per-coordinate upper bounds on the
    operator norms (support edges for analytic laws, sampled spectral
    norms for matrix backends); ``None`` entries mean unknown.
    """

    def __init__(self, nvars, max_order, tracial, norm_upper=None):
        if nvars < 1:
            raise ValueError("nvars must be >= 1")
        if max_order < 1:
            raise ValueError("max_order must be >= 1")
        self.nvars = nvars
        self.max_order = max_order
        self.tracial = bool(tracial)
        self.norm_upper = tuple(norm_upper) if norm_upper is not None else None

    def check_order(self, needed):
        if needed > self.max_order:
            raise BudgetExceededError(
                f"computation needs word moments of length {needed}, "
                f"backend supports {self.max_order}",
                needed=needed,
                available=self.max_order,
            )

    def _check_word(self, word):
        self.check_order(len(word))
        for letter in word:
            if not 1 <= letter <= self.nvars:
                raise ValueError(f"letter {letter} out of range 1..{self.nvars}")

    def moment(self, word):
        raise NotImplementedError


class MomentTable(MomentFunctional):
    """Explicit moment table; absent words within the order budget are 0.

    ``stderr`` optionally maps words to Monte Carlo standard errors.
    """

    def __init__(self, nvars, max_order, entries, tracial=False,
                 norm_upper=None, stderr=None):
        super().__init__(nvars, max_order, tracial, norm_upper)
        self.entries = {tuple(w): complex(v) for w, v in entries.items()}
        self.entries.setdefault((), 1.0 + 0j)
        self.stderr = (
            {tuple(w): float(s) for w, s in stderr.items()} if stderr else None
        )

    def moment(self, word):
        word = tuple(word)
        self._check_word(word)
        return self.entries.get(word, 0j)


@dataclass(frozen=True)
class CumulantSpec:
    """Free cumulant values kappa(i1,...,im) indexed by words.

    Words absent from ``kappa`` have cumulant 0.  ``max_order`` caps the
    word length the induced moment functional will evaluate (it bounds
    the noncrossing-partition enumeration, not the stored words).
    """

    nvars: int
    kappa: dict
    max_order: int = 12

    def __post_init__(self):
        if self.nvars < 1:
            raise ValueError("nvars must be >= 1")
        if not 1 <= self.max_order <= partitions.MAX_PARTITION_ORDER:
            raise ValueError(
                f"max_order must lie in 1..{partitions.MAX_PARTITION_ORDER}"
            )
        clean = {}
        for w, v in self.kappa.items():
            w = tuple(w)
            if not w:
                raise ValueError("cumulant words must be nonempty")
            for letter in w:
                if not 1 <= letter <= self.nvars:
                    raise ValueError(f"letter {letter} out of range 1..{self.nvars}")
            v = complex(v)
            if v != 0:
                clean[w] = v
        object.__setattr__(self, "kappa", clean)

    def value(self, word):
        return self.kappa.get(tuple(word), 0j)

    def is_cyclic(self):
        """True when every cumulant is invariant under word rotation.

        Rotation permutes the noncrossing partitions and rotates block
        subwords, so cyclic cumulants induce a tracial state.
        """
        for w, v in self.kappa.items():
            for r in rotations(w):
                if abs(self.kappa.get(r, 0j) - v) > 0:
                    return False
        return True

    def is_hermitian(self):
        """kappa(reverse(w)) == conj(kappa(w)) for every stored word."""
        for w, v in self.kappa.items():
            if abs(self.kappa.get(w[::-1], 0j) - v.conjugate()) > 0:
                return False
        return True


class CumulantState(MomentFunctional):
    """Moment functional generated by free cumulants."""

    def __init__(self, spec, norm_upper=None, tracial=None):
        if tracial is None:
            tracial = spec.is_cyclic()
        super().__init__(spec.nvars, spec.max_order, tracial, norm_upper)
        self.spec = spec
        self._memo = {(): 1.0 + 0j}
        self._lock = threading.Lock()

    def moment(self, word):
        word = tuple(word)
        self._check_word(word)
        with self._lock:
            cached = self._memo.get(word)
        if cached is not None:
            return cached
        value = _nc_moment(self.spec, word)
        with self._lock:
            self._memo[word] = value
        return value


def _nc_moment(spec, word):
    m = len(word)
    kappa = spec.kappa
    total = 0j
    for part in noncrossing_partitions(m):
        prod = 1.0 + 0j
        for block in part:
            v = kappa.get(tuple(word[p] for p in block))
            if not v:
                prod = 0j
                break
            prod *= v
        total += prod
    return total


def cumulants_to_moment(spec, word):
    """Moment of one word under the noncrossing-partition sum."""
    word = tuple(word)
    if not word:
        return 1.0 + 0j
    if len(word) > spec.max_order:
        raise BudgetExceededError(
            f"word length {len(word)} exceeds cumulant order limit {spec.max_order}",
            needed=len(word),
            available=spec.max_order,
        )
    return _nc_moment(spec, word)


def moments_to_cumulants(phi, max_order):
    """Recursive extraction of free cumulants from word moments.

    kappa(w) = phi(w) - sum over noncrossing partitions with at least two
    blocks of the products of lower-order cumulants.  Inverse of
    ``cumulants_to_moment`` up to double-precision rounding.
    """
    phi.check_order(max_order)
    kappa = {}
    for m in range(1, max_order + 1):
        parts = [p for p in noncrossing_partitions(m) if len(p) > 1]
        for word in itertools.product(range(1, phi.nvars + 1), repeat=m):
            total = 0j
            for part in parts:
                prod = 1.0 + 0j
                for block in part:
                    v = kappa.get(tuple(word[p] for p in block), 0j)
                    if not v:
                        prod = 0j
                        break
                    prod *= v
                total += prod
            val = phi.moment(word) - total
            if val != 0:
                kappa[word] = val
    return CumulantSpec(phi.nvars, kappa, max_order=max_order)


# ---------------------------------------------------------------------------
# pairings


def _coeff(c):
    return complex(c)


def moment_of_poly(phi, p):
    """phi(p(X)) by linear extension of word moments."""
    if p.nvars != phi.nvars:
        raise ValueError("polynomial/state nvars mismatch")
    phi.check_order(p.degree())
    total = 0j
    for w, c in p.terms.items():
        total += _coeff(c) * phi.moment(w)
    return total


def tensor_moment(phi, q):
    """(phi (x) phi) applied to a tensor-square element.

    The opposite-algebra structure changes products, not this
    functional: each term contributes coeff * phi(left) * phi(right).
    """
    if q.nvars != phi.nvars:
        raise ValueError("tensor/state nvars mismatch")
    phi.check_order(q.max_leg_degree())
    total = 0j
    for (a, b), c in q.terms.items():
        total += _coeff(c) * phi.moment(a) * phi.moment(b)
    return total


def inner_tuple(phi, ps, rs):
    """<p, r> = sum_i phi(p_i r_i*); conjugate-linear in r."""
    if len(ps) != len(rs):
        raise ValueError("tuple length mismatch")
    total = 0j
    for p, r in zip(ps, rs):
        total += moment_of_poly(phi, p * r.star())
    return total


def inner_matrix(phi, a, b):
    """<A, B> = (phi (x) phi) Tr(A # B*) = sum_ij (phi (x) phi)(A_ij # B_ij*)."""
    if a.size != b.size or a.nvars != b.nvars:
        raise ValueError("kernel matrix mismatch")
    acc = TensorPoly.zero(a.nvars)
    for i in range(a.size):
        for j in range(a.size):
            acc = acc + a.rows[i][j].sharp(b.rows[i][j].star())
    return tensor_moment(phi, acc)


# ---------------------------------------------------------------------------
# Gram assemblies shared by the Stein and Poincare solvers


def dirichlet_gram(phi, words):
    """Hermitian Gram of Jacobian rows over monomial words.

    G[a, b] = sum_i (phi (x) phi)( d_i(w_b) # (d_i(w_a))* ), so that the
    Dirichlet energy of P = sum_b alpha_b w_b is alpha^H G alpha.
    """
    from .algebra import partial_derivative

    n = phi.nvars
    derivs = []
    for w in words:
        p = NcPoly.monomial(w, n)
        derivs.append([partial_derivative(i, p) for i in range(1, n + 1)])
    stars = [[d.star() for d in row] for row in derivs]
    size = len(words)
    gram = np.zeros((size, size), dtype=complex)
    for a in range(size):
        for b in range(a, size):
            total = 0j
            for i in range(n):
                prod = derivs[b][i].sharp(stars[a][i])
                if prod.terms:
                    total += tensor_moment(phi, prod)
            gram[a, b] = total
            if a != b:
                gram[b, a] = total.conjugate()
    return gram


def covariance_gram(phi, words):
    """Hermitian form of centered monomials.

    S[a, b] = phi((w_b - phi w_b)(w_a - phi w_a)*), so the variance of
    P = sum_b alpha_b w_b is alpha^H S alpha.
    """
    means = [phi.moment(w) for w in words]
    size = len(words)
    gram = np.zeros((size, size), dtype=complex)
    for a in range(size):
        ra = words[a][::-1]
        for b in range(size):
            gram[a, b] = phi.moment(words[b] + ra) - means[b] * means[a].conjugate()
    return gram


# ---------------------------------------------------------------------------
# operator norms


@dataclass(frozen=True)
class NormEstimate:
    """Lower estimate phi(t_i^order)^(1/order) and, when available, an
    upper bound on the operator norm of the i-th coordinate."""

    coordinate: int
    order: int
    lower: float
    upper: float | None

    def best(self):
        return self.upper if self.upper is not None else self.lower


def operator_norm_estimate(phi, i, order):
    """Norm estimates for coordinate i from the moment of t_i^order.

    ``order`` must be even; a negative even moment signals an invalid
    functional.  The upper estimate comes from ``phi.norm_upper`` when
    the backend provides one (support edge or sampled spectral norm).
    """
    if order % 2 != 0 or order <= 0:
        raise ValueError("order must be a positive even integer")
    phi.check_order(order)
    m = phi.moment((i,) * order)
    if m.real < -1e-10:
        raise InvalidStateError(
            f"negative even moment phi(t_{i}^{order}) = {m.real}"
        )
    lower = max(m.real, 0.0) ** (1.0 / order)
    upper = None
    if phi.norm_upper is not None:
        upper = phi.norm_upper[i - 1]
    return NormEstimate(coordinate=i, order=order, lower=lower, upper=upper)


# ---------------------------------------------------------------------------
# validation


def validate_state(phi, check_order=None, herm_tol=1e-8, psd_tol=1e-8,
                   max_family=64):
    """Return a list of violated invariant descriptions (empty if valid).

    Checks the unit moment, Hermitian symmetry phi(rev w) = conj phi(w),
    positivity of the Gram phi(w_i rev(w_j)) over a graded-lex prefix of
    the words of length at most max_order // 2, and cyclic invariance
    when the state claims to be tracial.  ``check_order`` caps the
    enumeration order (default min(max_order, 4)) and ``max_family``
    the positivity family size; both keep validation cheap relative to
    the computations it guards.
    """
    problems = []
    if check_order is None:
        check_order = min(phi.max_order, 4)
    check_order = min(check_order, phi.max_order)

    unit = phi.moment(())
    if abs(unit - 1.0) > herm_tol:
        problems.append(f"unit moment is {unit}, expected 1")

    words = words_up_to(phi.nvars, check_order, min_len=1)
    for w in words:
        lhs = phi.moment(w[::-1])
        rhs = phi.moment(w).conjugate()
        if abs(lhs - rhs) > herm_tol:
            problems.append(
                f"Hermitian symmetry fails on word {w}: {lhs} vs conj {rhs}"
            )
            break

    half = min(phi.max_order // 2, check_order)
    family = words_up_to(phi.nvars, half)[:max_family]
    gram = np.empty((len(family), len(family)), dtype=complex)
    for a, wa in enumerate(family):
        for b, wb in enumerate(family):
            gram[a, b] = phi.moment(wa + wb[::-1])
    gram = (gram + gram.conj().T) / 2
    eigs = np.linalg.eigvalsh(gram)
    if eigs.min() < -psd_tol:
        problems.append(
            f"moment Gram has negative eigenvalue {eigs.min():.3e} "
            f"(family of words up to length {half})"
        )

    if phi.tracial:
        for w in words:
            base = phi.moment(w)
            for r in rotations(w):
                if abs(phi.moment(r) - base) > herm_tol:
                    problems.append(
                        f"cyclic invariance fails on word {w} vs rotation {r}"
                    )
                    break
            else:
                continue
            break

    return problems


def check_state(phi, **kwargs):
    """Raise InvalidStateError when ``validate_state`` finds violations."""
    problems = validate_state(phi, **kwargs)
    if problems:
        raise InvalidStateError(
            "invalid moment functional: " + "; ".join(problems),
            violations=problems,
        )


# ---------------------------------------------------------------------------
# builtin states


def semicircular(nvars=1, max_order=12):
    """Free standard semicircular family: kappa(i, i) = 1, all else 0.

    Moments of t_i^{2m} are the Catalan numbers; the operator norm of
    each coordinate is exactly 2 (support edge), recorded as the upper
    norm estimate.
    """
    kappa = {(i, i): 1.0 for i in range(1, nvars + 1)}
    spec = CumulantSpec(nvars, kappa, max_order=max_order)
    return CumulantState(spec, norm_upper=(2.0,) * nvars)


def centered_free_poisson(nvars=1, max_order=12):
    """Centered free Poisson coordinates, free from each other.

    Per coordinate kappa_m = 1 for every m >= 2 (the law of g^2 - 1 for
    a standard semicircular g); mixed cumulants vanish.  Support is
    [-1, 3], so the norm upper estimate is 3.
    """
    kappa = {}
    for i in range(1, nvars + 1):
        for m in range(2, max_order + 1):
            kappa[(i,) * m] = 1.0
    spec = CumulantSpec(nvars, kappa, max_order=max_order)
    return CumulantState(spec, norm_upper=(3.0,) * nvars)
