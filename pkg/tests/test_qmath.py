import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbcsim import qmath
from qbcsim.errors import ValidationError

SQ2 = math.sqrt(2.0)


def random_state(draw_angles):
    theta, phi = draw_angles
    return np.array([math.cos(theta / 2), math.sin(theta / 2) * np.exp(1j * phi)])


angles = st.tuples(
    st.floats(min_value=0.0, max_value=math.pi),
    st.floats(min_value=0.0, max_value=2 * math.pi, exclude_max=True),
)


# ---------------------------------------------------------------------------
# basis actions of the reference quadruple


def test_quadruple_matrices_are_the_expected_combinations(quad):
    np.testing.assert_allclose(quad.m, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(quad.n, np.array([[0, -1], [1, 0]]), atol=1e-15)
    np.testing.assert_allclose(quad.j, np.array([[1, 1j], [1, -1j]]) / SQ2, atol=1e-15)
    np.testing.assert_allclose(quad.k, np.array([[1, 1j], [-1, 1j]]) / SQ2, atol=1e-15)


def test_quadruple_members_are_unitary(quad):
    for label in qmath.LABELS:
        assert qmath.unitarity_residual(quad.operator(label)) <= 1e-14


@pytest.mark.parametrize(
    "label,inp,expected",
    [
        ("M", qmath.KET_0, qmath.KET_0),
        ("N", qmath.KET_0, qmath.KET_1),
        ("N", qmath.KET_1, -qmath.KET_0),
        ("J", qmath.KET_0, qmath.KET_PLUS),
        ("J", qmath.KET_1, 1j * qmath.KET_MINUS),
        ("K", qmath.KET_0, qmath.KET_MINUS),
        ("K", qmath.KET_1, 1j * qmath.KET_PLUS),
    ],
)
def test_apply_basis_actions(quad, label, inp, expected):
    np.testing.assert_allclose(qmath.apply(quad.operator(label), inp), expected, atol=1e-14)


def test_apply_rejects_bad_inputs(quad):
    with pytest.raises(ValidationError):
        qmath.apply(np.array([[1, 1], [0, 1]]), qmath.KET_0)
    with pytest.raises(ValidationError):
        qmath.apply(quad.m, np.array([1.0, 1.0]))


# ---------------------------------------------------------------------------
# fidelity and distances


def test_fidelity_trivial_cases():
    assert qmath.fidelity(qmath.KET_0, qmath.KET_0) == pytest.approx(1.0, abs=1e-15)
    assert qmath.fidelity(qmath.KET_0, qmath.KET_1) == pytest.approx(0.0, abs=1e-15)
    assert qmath.fidelity(qmath.KET_0, qmath.KET_PLUS) == pytest.approx(0.5, abs=1e-15)


def test_fidelity_accepts_unnormalized_first_argument():
    assert qmath.fidelity(2.0 * qmath.KET_0, qmath.KET_0) == pytest.approx(4.0)
    with pytest.raises(ValidationError):
        qmath.fidelity(qmath.KET_0, 2.0 * qmath.KET_0)


@settings(max_examples=50, derandomize=True)
@given(angles, angles)
def test_fidelity_symmetric_for_normalized_states(a, b):
    psi, phi = random_state(a), random_state(b)
    assert qmath.fidelity(psi, phi) == pytest.approx(qmath.fidelity(phi, psi), abs=1e-12)


def test_trace_distance_coincident_states(quad):
    rho = qmath.ensemble_density((quad.m, quad.n), qmath.KET_PLUS)
    assert qmath.trace_distance(rho, rho) == 0.0
    half = np.eye(2, dtype=complex) / 2
    assert qmath.trace_distance(half, half) == 0.0


def test_trace_distance_at_the_revealing_state(quad):
    # committing around (|0>+i|1>)/sqrt2 produces that state vs |1>: the two
    # pure densities sit at trace distance 1/sqrt2
    psi = qmath.KET_PLUS_I
    rho0 = qmath.ensemble_density((quad.m, quad.n), psi)
    rho1 = qmath.ensemble_density((quad.j, quad.k), psi)
    np.testing.assert_allclose(rho0, np.outer(psi, psi.conj()), atol=1e-14)
    np.testing.assert_allclose(rho1, np.outer(qmath.KET_1, qmath.KET_1.conj()), atol=1e-14)
    assert qmath.trace_distance(rho0, rho1) == pytest.approx(1 / SQ2, abs=1e-12)


def test_eigvalsh2_matches_lapack(rng):
    for _ in range(200):
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h = z + z.conj().T
        lo, hi = qmath.eigvalsh2(h)
        np.testing.assert_allclose([lo, hi], np.linalg.eigvalsh(h), atol=1e-12)


def test_eigh2_reconstructs(rng):
    for _ in range(200):
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h = z + z.conj().T
        (lo, hi), vecs = qmath.eigh2(h)
        rebuilt = lo * np.outer(vecs[:, 0], vecs[:, 0].conj()) + hi * np.outer(vecs[:, 1], vecs[:, 1].conj())
        np.testing.assert_allclose(rebuilt, h, atol=1e-12)


# ---------------------------------------------------------------------------
# two-qubit states


def test_singlet_amplitudes():
    np.testing.assert_allclose(qmath.singlet(), np.array([0, 1, -1, 0]) / SQ2, atol=1e-15)


def test_singlet_invariant_under_shared_rotation(rng):
    s = qmath.singlet()
    for _ in range(25):
        u = qmath.haar_random_unitary(rng)
        rotated = qmath.apply_first(u, qmath.apply_second(u, s))
        assert abs(abs(np.vdot(rotated, s)) - 1.0) < 1e-12


def test_partial_trace():
    half = np.eye(2) / 2
    np.testing.assert_allclose(qmath.partial_trace(qmath.singlet(), "first"), half, atol=1e-14)
    np.testing.assert_allclose(qmath.partial_trace(qmath.singlet(), "second"), half, atol=1e-14)
    prod = qmath.product_state(qmath.KET_0, qmath.KET_PLUS)
    np.testing.assert_allclose(
        qmath.partial_trace(prod, "second"),
        np.outer(qmath.KET_PLUS, qmath.KET_PLUS.conj()),
        atol=1e-14,
    )
    with pytest.raises(ValidationError):
        qmath.partial_trace(qmath.singlet(), "third")


def test_partial_trace_is_unit_trace(rng):
    for _ in range(50):
        s = qmath.haar_random_state4(rng)
        for keep in ("first", "second"):
            rho = qmath.partial_trace(s, keep)
            assert abs(np.trace(rho).real - 1.0) < 1e-12
            qmath.as_density(rho)


def test_orthogonal_completion():
    phi = np.array([0.6, 0.8j])
    perp = qmath.orthogonal(phi)
    assert abs(np.vdot(phi, perp)) < 1e-15
    np.testing.assert_allclose(qmath.orthogonal(perp), -phi, atol=1e-15)


# ---------------------------------------------------------------------------
# measurement


def test_measure_first_singlet_computational(rng):
    # the collapse is always the canonical orthogonal of the measured result
    for _ in range(40):
        outcome, collapsed = qmath.measure_first(qmath.singlet(), qmath.KET_0, rng)
        expected = qmath.KET_1 if outcome == 0 else qmath.KET_0
        assert qmath.states_equal(collapsed, expected)


def test_measure_first_singlet_balanced(rng):
    n = 10000
    hits = sum(qmath.measure_first(qmath.singlet(), qmath.KET_PLUS, rng)[0] for _ in range(n))
    assert abs(hits / n - 0.5) < 3 * 0.5 / math.sqrt(n)


def test_measure_first_anticorrelation_both_branches(rng):
    # exhaustively over both branches: the collapse is orthogonal to the result
    for _ in range(25):
        phi = qmath.haar_random_state(rng)
        for result in (phi, qmath.orthogonal(phi)):
            prob, collapsed = qmath.project_first(qmath.singlet(), result)
            assert prob == pytest.approx(0.5, abs=1e-12)
            assert abs(np.vdot(result, collapsed)) < 1e-12


def test_measure_first_deterministic_branch(rng):
    state = qmath.product_state(qmath.KET_0, qmath.KET_PLUS)
    for _ in range(20):
        outcome, collapsed = qmath.measure_first(state, qmath.KET_0, rng)
        assert outcome == 0
        assert qmath.states_equal(collapsed, qmath.KET_PLUS)


def test_measure_qubit_deterministic(rng):
    assert all(qmath.measure_qubit(qmath.KET_0, qmath.KET_0, rng) == 0 for _ in range(20))
    phi = qmath.haar_random_state(rng)
    assert all(qmath.measure_qubit(qmath.orthogonal(phi), phi, rng) == 1 for _ in range(20))


def test_measure_qubit_balanced(rng):
    n = 10000
    ones = sum(qmath.measure_qubit(qmath.KET_PLUS, qmath.KET_0, rng) for _ in range(n))
    assert abs(ones / n - 0.5) < 3 * 0.5 / math.sqrt(n)


# ---------------------------------------------------------------------------
# samplers


def test_haar_random_state_statistics(rng):
    n = 100_000
    states = qmath.haar_random_states(rng, n)
    norms = np.linalg.norm(states, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-12
    p0 = np.abs(states[:, 0]) ** 2
    z_mean = float(np.mean(2 * p0 - 1))  # <sigma_z> has variance 1/3 per sample
    assert abs(z_mean) < 3 * math.sqrt(1 / 3 / n)
    assert abs(float(np.mean(p0)) - 0.5) < 3 * math.sqrt(1 / 12 / n)


def test_haar_random_state_scalar_matches_invariant(rng):
    for _ in range(100):
        qmath.as_state(qmath.haar_random_state(rng))


def test_haar_random_unitary_is_unitary(rng):
    for _ in range(50):
        assert qmath.unitarity_residual(qmath.haar_random_unitary(rng)) < 1e-12
    batch = qmath.haar_random_unitaries(rng, 64)
    resid = np.linalg.norm(np.einsum("nij,nik->njk", batch.conj(), batch) - np.eye(2), axis=(1, 2))
    assert np.max(resid) < 1e-12


def test_subcircle_state_landmarks():
    np.testing.assert_allclose(qmath.subcircle_state(0.0), qmath.KET_0, atol=1e-15)
    np.testing.assert_allclose(qmath.subcircle_state(math.pi / 2), qmath.KET_PLUS, atol=1e-15)
    np.testing.assert_allclose(qmath.subcircle_state(math.pi), qmath.KET_1, atol=1e-15)
    for theta in np.linspace(0, 2 * math.pi, 37):
        psi = qmath.subcircle_state(theta)
        qmath.as_state(psi)
        assert qmath.on_subcircle(psi)
    assert not qmath.on_subcircle(qmath.KET_PLUS_I)


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=50, derandomize=True)
@given(angles)
def test_apply_preserves_norm(a):
    rng = np.random.default_rng(hash(a) % (2**32))
    u = qmath.haar_random_unitary(rng)
    psi = random_state(a)
    assert abs(np.linalg.norm(u @ psi) - 1.0) < 1e-12


def test_unitarity_preserved_under_products(rng):
    u = np.eye(2, dtype=complex)
    for _ in range(200):
        u = u @ qmath.haar_random_unitary(rng)
        assert qmath.unitarity_residual(u) <= 1e-10


# ---------------------------------------------------------------------------
# serialization


def test_vector_round_trip():
    psi = qmath.KET_PLUS_I
    again = qmath.vector_from_pairs(qmath.vector_to_pairs(psi), 2)
    np.testing.assert_allclose(again, psi, atol=0)


def test_matrix_round_trip(quad):
    again = qmath.matrix_from_pairs(qmath.matrix_to_pairs(quad.j))
    np.testing.assert_allclose(again, quad.j, atol=0)


def test_serialization_rejects_garbage():
    with pytest.raises(ValidationError):
        qmath.pair_to_complex([1.0])
    with pytest.raises(ValidationError):
        qmath.matrix_from_pairs([[[1, 0]]])
    with pytest.raises(ValidationError):
        qmath.vector_from_pairs([[1, 0]], 2)
