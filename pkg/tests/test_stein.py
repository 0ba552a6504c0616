"""Stein identity, explicit-kernel distance, minimal kernels and bounds."""

import random

import numpy as np
import pytest

from freestein import (
    ConsistencyError,
    InadmissibleProblemError,
    KernelMatrix,
    NcPoly,
    SteinProblem,
    discrepancy_bounds,
    explicit_kernel,
    explicit_kernel_distance_sq,
    inner_matrix,
    jacobian,
    minimal_kernel,
    moment_table_from_matrices,
    quadratic_potential,
    semicircular,
    centered_free_poisson,
    stein_residual,
)
from freestein.stein import TruncationBasis
from freestein.states import words_up_to

import bruteforce
from conftest import (
    rand_cumulant_state,
    rand_hermitian,
    rand_poly,
    rand_selfadjoint_poly,
    trace_state,
)


def t(i, n):
    return NcPoly.gen(i, n)


# ---------------------------------------------------------------------------
# the Stein identity


def test_identity_kernel_for_semicircular(rng):
    # free integration by parts: the identity block is a kernel for the
    # quadratic potential at the semicircular state
    for n in (1, 2):
        sc = semicircular(n)
        prob = SteinProblem(sc, quadratic_potential(n))
        assert prob.admissible
        ident = KernelMatrix.identity(n)
        for _ in range(15):
            ps = tuple(rand_poly(rng, n, 5, terms=4) for _ in range(n))
            assert abs(stein_residual(prob, ident, ps)) < 1e-10


def test_constant_tuple_residual_exactly_zero():
    sc = semicircular(2)
    prob = SteinProblem(sc, quadratic_potential(2))
    consts = tuple(NcPoly.one(2).scale(3) for _ in range(2))
    assert stein_residual(prob, KernelMatrix.identity(2), consts) == 0


def test_explicit_kernel_identity_random_states(rng, np_rng):
    # residual vanishes for every tracial state, potential and test
    # tuple; exercises both the cumulant and the table backends
    # including states with nonzero centering defect
    cases = 0
    for n in (1, 2):
        states = [
            rand_cumulant_state(rng, n, 7, cyclic=True),
            trace_state(np_rng, n, 5, 7)[0],
        ]
        for phi in states:
            for _ in range(8):
                v = rand_selfadjoint_poly(rng, n, 4, terms=3)
                prob = SteinProblem(phi, v)
                a = explicit_kernel(v)
                ps = tuple(rand_poly(rng, n, 4, terms=3) for _ in range(n))
                assert abs(stein_residual(prob, a, ps)) < 1e-10
                cases += 1
    assert cases == 32


def test_nontracial_states_show_the_commutator_defect(np_rng):
    # the pairing identity needs traciality: for a density-matrix state
    # the residual equals 1/2 sum_i [phi(g_i P_i*) - phi(P_i* g_i)],
    # which vanishes iff the state is tracial on the products involved
    from freestein import MomentTable, moment_of_poly
    import random

    size, n = 5, 2
    g = np_rng.standard_normal((size, size)) + 1j * np_rng.standard_normal(
        (size, size)
    )
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    mats = [rand_hermitian(np_rng, size, norm=1.0) for _ in range(n)]

    def phi_word(w):
        acc = np.eye(size, dtype=complex)
        for letter in w:
            acc = acc @ mats[letter - 1]
        return complex(np.trace(rho @ acc))

    entries = {w: phi_word(w) for w in words_up_to(n, 8, min_len=1)}
    phi = MomentTable(n, 8, entries, tracial=False)

    rng = random.Random(17)
    saw_nonzero = False
    for _ in range(6):
        v = rand_selfadjoint_poly(rng, n, 3, terms=3)
        prob = SteinProblem(phi, v)
        a = explicit_kernel(v)
        ps = tuple(rand_poly(rng, n, 3, terms=3) for _ in range(n))
        res = stein_residual(prob, a, ps)
        defect = 0j
        for grad, p in zip(prob.gradient, ps):
            defect += 0.5 * (
                moment_of_poly(phi, grad * p.star())
                - moment_of_poly(phi, p.star() * grad)
            )
        assert res == pytest.approx(defect, rel=1e-10, abs=1e-12)
        saw_nonzero = saw_nonzero or abs(res) > 1e-3
    assert saw_nonzero


def test_explicit_kernel_identity_in_matrix_model(np_rng):
    # end-to-end against dense tensor algebra on a concrete trace state
    n = 2
    size = 6
    phi, mats = trace_state(np_rng, n, size, 10)
    rng = random.Random(3)
    v = rand_selfadjoint_poly(rng, n, 3, terms=3)
    prob = SteinProblem(phi, v)
    a = explicit_kernel(v)
    a_mats = bruteforce.kernel_matrices(a, mats, size)
    for _ in range(5):
        ps = tuple(rand_poly(rng, n, 3, terms=3) for _ in range(n))
        jp_mats = bruteforce.kernel_matrices(jacobian(ps), mats, size)
        brute = bruteforce.kernel_pairing(a_mats, jp_mats, size)
        symbolic = inner_matrix(phi, a, jacobian(ps))
        assert symbolic == pytest.approx(brute, rel=1e-10, abs=1e-10)
        assert abs(stein_residual(prob, a, ps)) < 1e-10


# ---------------------------------------------------------------------------
# explicit kernel distance


def test_distance_semicircular_point():
    sc = semicircular(1)
    prob = SteinProblem(sc, quadratic_potential(1))
    d = explicit_kernel_distance_sq(prob)
    assert d.closed_form_sq == pytest.approx(1.5, abs=1e-12)
    assert d.distance_sq == pytest.approx(1.5, abs=1e-12)
    assert d.m4 == pytest.approx(2.0)
    assert d.m4_bound_sq == pytest.approx(1.0)
    assert d.m4_bound_sharp_sq == pytest.approx(1.5)
    # unit-variance single coordinate: distance equals the sharp constant
    assert d.distance_sq == pytest.approx(d.m4_bound_sharp_sq, abs=1e-12)


def test_distance_free_poisson_point():
    fp = centered_free_poisson(1)
    prob = SteinProblem(fp, quadratic_potential(1))
    d = explicit_kernel_distance_sq(prob)
    assert d.m4 == pytest.approx(3.0)
    assert d.distance_sq == pytest.approx(2.0, abs=1e-12)
    assert d.closed_form_sq == pytest.approx(2.0, abs=1e-12)
    assert d.m4_bound_sq == pytest.approx(1.5)
    assert d.m4_bound_sharp_sq == pytest.approx(2.0)


def _isotropic_trace_state(np_rng, n, size, max_order):
    """Trace state with exactly centered, exactly isotropic coordinates:
    Gram-Schmidt over traceless Hermitian matrices in the trace inner
    product (real coefficients keep everything Hermitian)."""
    mats = []
    while len(mats) < n:
        h = rand_hermitian(np_rng, size)
        h = h - (np.trace(h) / size) * np.eye(size)
        for m in mats:
            h = h - (np.trace(h @ m).real / np.trace(m @ m).real) * m
        norm = np.sqrt(np.trace(h @ h).real / size)
        if norm > 1e-6:
            mats.append(h / norm)
    return moment_table_from_matrices(mats, max_order)


def test_distance_two_routes_agree_on_random_isotropic_states(np_rng):
    for n in (1, 2):
        for _ in range(10):
            phi = _isotropic_trace_state(np_rng, n, 6, 4)
            prob = SteinProblem(phi, quadratic_potential(n))
            d = explicit_kernel_distance_sq(prob)
            assert d.closed_form_sq == pytest.approx(
                d.distance_sq, rel=1e-9, abs=1e-9
            )
            assert d.distance_sq <= d.m4_bound_sharp_sq + 1e-9


def test_distance_closed_requires_centering(np_rng):
    phi, _ = trace_state(np_rng, 1, 5, 4)  # not centered
    prob = SteinProblem(phi, quadratic_potential(1))
    with pytest.raises(InadmissibleProblemError):
        explicit_kernel_distance_sq(prob, method="closed")
    # auto falls back to the generic pairing
    d = explicit_kernel_distance_sq(prob)
    assert d.closed_form_sq is None
    assert d.distance_sq >= 0


# ---------------------------------------------------------------------------
# minimal kernel


def test_truncation_basis_size():
    for n, d in ((1, 3), (2, 2), (3, 2)):
        basis = TruncationBasis.build(n, d)
        assert len(basis) == n * sum(n ** k for k in range(d + 1))


def test_minimal_kernel_semicircular_zero(rng):
    for n in (1, 2):
        sc = semicircular(n)
        prob = SteinProblem(sc, quadratic_potential(n))
        for d in range(0, 5 if n == 1 else 4):
            mk = minimal_kernel(prob, d)
            assert mk.sigma_sq <= 1e-8
        # the represented kernel collapses to the identity block
        mk = minimal_kernel(prob, 3)
        ident = KernelMatrix.identity(n)
        gap = inner_matrix(sc, mk.kernel - ident, mk.kernel - ident)
        assert abs(gap) < 1e-12


def test_minimal_kernel_free_poisson_sequence():
    fp = centered_free_poisson(1)
    prob = SteinProblem(fp, quadratic_potential(1))
    sigmas = [minimal_kernel(prob, d).sigma_sq for d in (0, 1, 2, 3, 4)]
    assert sigmas[0] == pytest.approx(0.0, abs=1e-12)
    assert sigmas[1] == pytest.approx(0.0, abs=1e-10)
    assert sigmas[2] == pytest.approx(0.5, abs=1e-9)
    for lo, hi in zip(sigmas, sigmas[1:]):
        assert hi >= lo - 1e-9
    dist = explicit_kernel_distance_sq(prob)
    assert all(s <= dist.m4_bound_sharp_sq + 1e-9 for s in sigmas)


def test_minimal_kernel_orthogonality_and_kernelhood(rng):
    # explicit minus minimal is orthogonal to every basis Jacobian, and
    # the minimal kernel satisfies the identity on tuples within degree
    fp = centered_free_poisson(1)
    prob = SteinProblem(fp, quadratic_potential(1))
    d = 3
    mk = minimal_kernel(prob, d)
    a0 = explicit_kernel(prob.v)
    diff = a0 - mk.kernel
    n = 1
    for w in words_up_to(n, d):
        for slot in range(n):
            basis_tuple = tuple(
                NcPoly.monomial(w, n) if s == slot else NcPoly.zero(n)
                for s in range(n)
            )
            val = inner_matrix(fp, diff, jacobian(basis_tuple))
            assert abs(val) < 1e-8
    for _ in range(10):
        ps = tuple(rand_poly(rng, n, d, terms=3) for _ in range(n))
        assert abs(stein_residual(prob, mk.kernel, ps)) < 1e-8


def test_minimal_kernel_rank_reporting():
    sc = semicircular(2)
    prob = SteinProblem(sc, quadratic_potential(2))
    mk = minimal_kernel(prob, 2)
    words = words_up_to(2, 2)
    # constants are null directions of the Jacobian Gram
    assert mk.null_dim == 2
    assert mk.gram_rank == 2 * (len(words) - 1)


def test_inadmissible_problem_rejected():
    sc = semicircular(1)
    prob = SteinProblem(sc, t(1, 1))  # D(t) = 1, phi(1) = 1 != 0
    assert not prob.admissible
    assert prob.centering_defect == pytest.approx(1.0)
    with pytest.raises(InadmissibleProblemError):
        minimal_kernel(prob, 2)


# ---------------------------------------------------------------------------
# discrepancy bounds


def test_discrepancy_bounds_semicircular():
    n = 2
    sc = semicircular(n)
    prob = SteinProblem(sc, quadratic_potential(n))
    rep = discrepancy_bounds(prob, 3, c_opt=1.0, c_is_upper=True)
    assert rep.sigma_lower_sq <= 1e-8
    assert rep.upper_poincare_sq == pytest.approx(0.0, abs=1e-9)
    assert rep.simplified_sq == pytest.approx(0.0, abs=1e-12)
    assert rep.upper_explicit_sq == pytest.approx(5.0, abs=1e-9)


def test_discrepancy_bounds_free_poisson():
    fp = centered_free_poisson(1)
    prob = SteinProblem(fp, quadratic_potential(1))
    rep = discrepancy_bounds(prob, 3, c_opt=18.0, c_is_upper=True)
    assert rep.sigma_lower_sq == pytest.approx(0.5, abs=1e-9)
    assert rep.upper_explicit_sq == pytest.approx(2.0, abs=1e-9)
    assert rep.simplified_sq == pytest.approx(17.0)
    assert rep.sigma_lower_sq <= min(rep.upper_explicit_sq,
                                     rep.upper_poincare_sq) + 1e-8


def test_discrepancy_bounds_constant_potential():
    # Dv = 0: the explicit kernel vanishes and the truncated bound is the
    # squared projection of -I; the Poincare-route bound degenerates to n
    n = 1
    sc = semicircular(n)
    prob = SteinProblem(sc, NcPoly.one(n).scale(4))
    rep = discrepancy_bounds(prob, 2, c_opt=1.0, c_is_upper=True)
    assert rep.upper_poincare_sq == pytest.approx(n)
    assert rep.centering_defect == 0.0
    # projection of A0 - I = -I onto the Jacobian span: I is the Jacobian
    # of the coordinates, so the projection has norm at least 1
    assert rep.sigma_lower_sq == pytest.approx(1.0, abs=1e-9)


def test_certified_violation_raises(np_rng):
    fp = centered_free_poisson(1)
    prob = SteinProblem(fp, quadratic_potential(1))
    with pytest.raises(ConsistencyError):
        discrepancy_bounds(prob, 3, c_opt=1.0, c_is_upper=True)


def test_minimal_kernel_against_dense_model(np_rng):
    # assemble the same least-squares problem with dense kron matrices
    # on a centered trace state and compare the projection norm
    n, size, degree = 2, 5, 2
    phi, mats = trace_state(np_rng, n, size, 10, centered=True)
    prob = SteinProblem(phi, quadratic_potential(n))
    assert prob.admissible
    mk = minimal_kernel(prob, degree)

    basis_tuples = []
    for w in words_up_to(n, degree):
        for slot in range(n):
            basis_tuples.append(
                tuple(
                    NcPoly.monomial(w, n) if s == slot else NcPoly.zero(n)
                    for s in range(n)
                )
            )
    jac_mats = [
        bruteforce.kernel_matrices(jacobian(ps), mats, size)
        for ps in basis_tuples
    ]
    a0 = explicit_kernel(prob.v)
    diff = a0 - KernelMatrix.identity(n)
    diff_mats = bruteforce.kernel_matrices(diff, mats, size)

    dim = len(basis_tuples)
    gram = np.empty((dim, dim), dtype=complex)
    rhs = np.empty(dim, dtype=complex)
    for a in range(dim):
        rhs[a] = bruteforce.kernel_pairing(diff_mats, jac_mats[a], size)
        for b in range(dim):
            gram[a, b] = bruteforce.kernel_pairing(jac_mats[b], jac_mats[a], size)
    gram = (gram + gram.conj().T) / 2
    sigma_dense = float(
        (rhs.conj() @ np.linalg.pinv(gram, hermitian=True, rcond=1e-10) @ rhs).real
    )
    assert mk.sigma_sq == pytest.approx(sigma_dense, rel=1e-9, abs=1e-9)

    # the represented kernel sits at exactly the projection distance
    gap = inner_matrix(phi, mk.kernel - KernelMatrix.identity(n),
                       mk.kernel - KernelMatrix.identity(n))
    assert gap.real == pytest.approx(mk.sigma_sq, rel=1e-8, abs=1e-9)


def test_stein_residual_budget_error():
    from freestein import BudgetExceededError

    sc = semicircular(1, max_order=4)
    prob = SteinProblem(sc, quadratic_potential(1))
    a = explicit_kernel(prob.v)
    with pytest.raises(BudgetExceededError):
        stein_residual(prob, a, (NcPoly.gen(1, 1) ** 4,))
