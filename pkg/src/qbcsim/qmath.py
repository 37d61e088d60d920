"""Fixed-size complex linear algebra for qubits and two-qubit systems.

States are plain numpy arrays of complex128: a qubit is shape (2,), a
two-qubit pure state is shape (4,) over the ordered basis |00>, |01>, |10>,
|11> with the first tensor factor belonging to the ancilla / TTP side.
Operators and density matrices are shape (2, 2).

A measurement basis is described by a single normalized qubit vector phi;
the second basis vector is always the canonical orthogonal completion
``orthogonal(phi) = (-conj(a1), conj(a0))``.  All parties use this one
convention so that outcome labels are comparable.

State equality is physical equality: compare with :func:`fidelity`, never
component-wise, since global phases are meaningless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Tolerances: 1e-10 admits accumulated rounding over a protocol round when
# checking unitarity, 1e-12 catches construction errors in norms and traces.
ATOL_STATE = 1e-12
ATOL_UNITARY = 1e-10

# Measurement branch probabilities within ATOL_STATE of 0 or 1 are treated
# as exact, so probability-1 branches are deterministic.
_BRANCH_CLAMP = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)
KET_PLUS_I = np.array([1, 1j], dtype=complex) / math.sqrt(2)
KET_MINUS_I = np.array([1, -1j], dtype=complex) / math.sqrt(2)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


# ---------------------------------------------------------------------------
# validation


def _finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise ValidationError(f"{name} contains NaN or Inf")
    return arr


def as_state(psi, *, atol: float = ATOL_STATE, name: str = "state") -> np.ndarray:
    """Validate a qubit state: shape (2,), finite, unit norm within atol."""
    arr = np.asarray(psi, dtype=complex).reshape(-1)
    if arr.shape != (2,):
        raise ValidationError(f"{name} must have 2 amplitudes, got shape {arr.shape}")
    _finite(arr, name)
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > atol:
        raise ValidationError(f"{name} is not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")
    return arr


def as_state4(state, *, atol: float = ATOL_STATE, name: str = "state") -> np.ndarray:
    """Validate a two-qubit pure state: shape (4,), finite, unit norm."""
    arr = np.asarray(state, dtype=complex).reshape(-1)
    if arr.shape != (4,):
        raise ValidationError(f"{name} must have 4 amplitudes, got shape {arr.shape}")
    _finite(arr, name)
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > atol:
        raise ValidationError(f"{name} is not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")
    return arr


def as_unitary(u, *, atol: float = ATOL_UNITARY, name: str = "operator") -> np.ndarray:
    """Validate a 2x2 unitary within Frobenius tolerance atol."""
    arr = np.asarray(u, dtype=complex)
    if arr.shape != (2, 2):
        raise ValidationError(f"{name} must be 2x2, got shape {arr.shape}")
    _finite(arr, name)
    resid = np.linalg.norm(arr.conj().T @ arr - ID2)
    if resid > atol:
        raise ValidationError(f"{name} is not unitary: ||U+U - I||_F = {resid:.3e}")
    return arr


def unitarity_residual(u) -> float:
    arr = np.asarray(u, dtype=complex)
    return float(np.linalg.norm(arr.conj().T @ arr - ID2))


def as_density(rho, *, atol: float = ATOL_STATE, name: str = "density") -> np.ndarray:
    """Validate a 2x2 density matrix: Hermitian, trace one, positive."""
    arr = np.asarray(rho, dtype=complex)
    if arr.shape != (2, 2):
        raise ValidationError(f"{name} must be 2x2, got shape {arr.shape}")
    _finite(arr, name)
    if np.linalg.norm(arr - arr.conj().T) > atol:
        raise ValidationError(f"{name} is not Hermitian")
    if abs(arr.trace().real - 1.0) > atol or abs(arr.trace().imag) > atol:
        raise ValidationError(f"{name} does not have unit trace")
    lo, _ = eigvalsh2(arr)
    if lo < -atol:
        raise ValidationError(f"{name} has a negative eigenvalue: {lo:.3e}")
    return arr


# ---------------------------------------------------------------------------
# elementary operations


def orthogonal(phi: np.ndarray) -> np.ndarray:
    """Canonical orthogonal completion (-conj(a1), conj(a0)) of a qubit."""
    phi = np.asarray(phi, dtype=complex)
    return np.array([-phi[1].conjugate(), phi[0].conjugate()])


def apply(u, psi) -> np.ndarray:
    """Apply a validated unitary to a validated qubit state."""
    u = as_unitary(u)
    psi = as_state(psi)
    return u @ psi


def fidelity(psi, phi) -> float:
    """|<psi|phi>|^2 with phi normalized; psi may be an unnormalized vector."""
    psi = _finite(np.asarray(psi, dtype=complex).reshape(2), "vector")
    phi = as_state(phi)
    return float(abs(np.vdot(psi, phi)) ** 2)


def states_equal(a, b, *, atol: float = ATOL_STATE) -> bool:
    """Physical equality of two normalized states (fidelity 1 within atol)."""
    return abs(fidelity(a, b) - 1.0) <= atol


def eigvalsh2(h: np.ndarray) -> tuple[float, float]:
    """Closed-form eigenvalues (low, high) of a 2x2 Hermitian matrix."""
    p = h[0, 0].real
    s = h[1, 1].real
    t = 0.5 * (p + s)
    r = math.hypot(0.5 * (p - s), abs(h[0, 1]))
    return (t - r, t + r)


def eigh2(h: np.ndarray) -> tuple[tuple[float, float], np.ndarray]:
    """Closed-form spectral decomposition of a 2x2 Hermitian matrix.

    Returns ((low, high), V) with the eigenvectors in the columns of V.
    """
    lo, hi = eigvalsh2(h)
    q = h[0, 1]
    if abs(q) < 1e-15:
        if h[0, 0].real <= h[1, 1].real:
            return (lo, hi), ID2.copy()
        return (lo, hi), PAULI_X.astype(complex)
    v_hi = np.array([q, hi - h[0, 0]], dtype=complex)
    v_hi /= np.linalg.norm(v_hi)
    v_lo = orthogonal(v_hi)
    return (lo, hi), np.column_stack([v_lo, v_hi])


def trace_distance(rho, sigma) -> float:
    """Half the absolute eigenvalue sum of (rho - sigma) for 2x2 densities."""
    rho = as_density(rho)
    sigma = as_density(sigma)
    lo, hi = eigvalsh2(rho - sigma)
    return 0.5 * (abs(lo) + abs(hi))


def pure_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def product_state(a, b) -> np.ndarray:
    """Tensor product of two qubit states, first factor = a."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def apply_first(u: np.ndarray, state: np.ndarray) -> np.ndarray:
    """(u x I) acting on a two-qubit state."""
    return (np.asarray(u, dtype=complex) @ np.asarray(state, dtype=complex).reshape(2, 2)).reshape(4)


def apply_second(u: np.ndarray, state: np.ndarray) -> np.ndarray:
    """(I x u) acting on a two-qubit state."""
    return (np.asarray(state, dtype=complex).reshape(2, 2) @ np.asarray(u, dtype=complex).T).reshape(4)


def partial_trace(state, keep: str) -> np.ndarray:
    """Reduced density matrix of one factor of a two-qubit pure state.

    keep is "first" or "second"; the other factor is traced out.
    """
    m = as_state4(state).reshape(2, 2)
    if keep == "first":
        return m @ m.conj().T
    if keep == "second":
        return m.T @ m.conj()
    raise ValidationError(f"keep must be 'first' or 'second', got {keep!r}")


def singlet() -> np.ndarray:
    """The two-qubit singlet (|01> - |10>)/sqrt(2)."""
    return np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)


def ensemble_density(ops, psi) -> np.ndarray:
    """Uniform average of Op |psi><psi| Op+ over the given operators."""
    psi = np.asarray(psi, dtype=complex)
    out = np.zeros((2, 2), dtype=complex)
    for op in ops:
        w = op @ psi
        out += np.outer(w, w.conj())
    return out / len(ops)


# ---------------------------------------------------------------------------
# measurement


def _clamp_probability(p: float) -> float:
    if p <= _BRANCH_CLAMP:
        return 0.0
    if p >= 1.0 - _BRANCH_CLAMP:
        return 1.0
    return p


def project_first(state: np.ndarray, phi: np.ndarray) -> tuple[float, np.ndarray | None]:
    """Project the first factor onto |phi>.

    Returns (probability, normalized second-factor state); the state is None
    when the branch probability vanishes.
    """
    amp = np.asarray(phi, dtype=complex).conj() @ np.asarray(state, dtype=complex).reshape(2, 2)
    prob = float(np.linalg.norm(amp) ** 2)
    if prob < 1e-15:
        return prob, None
    return prob, amp / math.sqrt(prob)


def measure_first(state, basis_phi, rng: np.random.Generator) -> tuple[int, np.ndarray]:
    """Measure the first factor of a two-qubit state in {phi, orthogonal(phi)}.

    Returns (outcome, collapsed) where outcome 0 means the result |phi> and
    collapsed is the normalized post-measurement state of the second factor.
    """
    state = as_state4(state)
    phi = as_state(basis_phi, name="basis")
    p0, col0 = project_first(state, phi)
    p0 = _clamp_probability(p0)
    if rng.random() < p0:
        if col0 is None:
            raise ValidationError("measurement selected a zero-probability branch")
        return 0, col0
    p1, col1 = project_first(state, orthogonal(phi))
    if col1 is None:
        raise ValidationError("measurement selected a zero-probability branch")
    return 1, col1


def measure_qubit(psi, basis_phi, rng: np.random.Generator) -> int:
    """Projective qubit measurement; outcome 0 has probability |<phi|psi>|^2."""
    psi = as_state(psi)
    phi = as_state(basis_phi, name="basis")
    p0 = _clamp_probability(float(abs(np.vdot(phi, psi)) ** 2))
    return 0 if rng.random() < p0 else 1


# ---------------------------------------------------------------------------
# samplers


def haar_random_state(rng: np.random.Generator) -> np.ndarray:
    """Uniform pure qubit: cos(t/2)|0> + e^{i p} sin(t/2)|1> with cos t
    uniform on [-1, 1] and p uniform on [0, 2 pi)."""
    ct = rng.uniform(-1.0, 1.0)
    ph = rng.uniform(0.0, 2.0 * math.pi)
    half = 0.5 * math.acos(ct)
    return np.array([math.cos(half), math.sin(half) * complex(math.cos(ph), math.sin(ph))])


def haar_random_states(rng: np.random.Generator, n: int) -> np.ndarray:
    """n uniform pure qubits as an (n, 2) array."""
    ct = rng.uniform(-1.0, 1.0, size=n)
    ph = rng.uniform(0.0, 2.0 * math.pi, size=n)
    half = 0.5 * np.arccos(ct)
    return np.column_stack([np.cos(half) + 0j, np.sin(half) * np.exp(1j * ph)])


def haar_random_state4(rng: np.random.Generator) -> np.ndarray:
    """Uniform pure state on the two-qubit system."""
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    return z / np.linalg.norm(z)


def haar_random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed 2x2 unitary (QR of a Ginibre matrix, phases fixed)."""
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_random_unitaries(rng: np.random.Generator, n: int) -> np.ndarray:
    """n Haar-distributed 2x2 unitaries as an (n, 2, 2) array."""
    z = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def subcircle_state(theta: float) -> np.ndarray:
    """Real-amplitude qubit cos(theta/2)|0> + sin(theta/2)|1>.

    These are the states whose amplitude product a0*conj(a1) is real; theta
    is taken modulo 2 pi.
    """
    theta = float(theta) % (2.0 * math.pi)
    return np.array([math.cos(theta / 2.0), math.sin(theta / 2.0)], dtype=complex)


def on_subcircle(psi, *, atol: float = ATOL_STATE) -> bool:
    """Whether a0 * conj(a1) is real within atol."""
    psi = np.asarray(psi, dtype=complex)
    return abs((psi[0] * psi[1].conjugate()).imag) <= atol


# ---------------------------------------------------------------------------
# operator quadruple


@dataclass(frozen=True)
class OperatorQuadruple:
    """The four commitment unitaries: {m, n} encode bit 0, {j, k} encode 1."""

    m: np.ndarray
    n: np.ndarray
    j: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        for label in LABELS:
            arr = as_unitary(getattr(self, label.lower()), name=f"operator {label}")
            object.__setattr__(self, label.lower(), arr)

    def operator(self, label: str) -> np.ndarray:
        try:
            return getattr(self, label.lower())
        except AttributeError:
            raise ValidationError(f"unknown operator label {label!r}") from None

    def pair(self, chi: int) -> tuple[tuple[str, np.ndarray], tuple[str, np.ndarray]]:
        """The (label, operator) pair encoding the bit chi."""
        if chi == 0:
            return (("M", self.m), ("N", self.n))
        if chi == 1:
            return (("J", self.j), ("K", self.k))
        raise ValidationError(f"commit bit must be 0 or 1, got {chi!r}")

    def as_tuple(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.m, self.n, self.j, self.k)


LABELS = ("M", "N", "J", "K")


def reference_quadruple() -> OperatorQuadruple:
    """The protocol's standard operator quadruple.

    m is the identity, n the real rotation -i*sigma_y, and j, k are the two
    Pauli combinations that send |0> to |+> and |-> respectively:
    j = (1/sqrt2) [[1, i], [1, -i]],  k = (1/sqrt2) [[1, i], [-1, i]].
    """
    m = ID2.copy()
    n = -1j * PAULI_Y
    j = (1 - 1j) / (2 * math.sqrt(2)) * (ID2 + 1j * (PAULI_X - PAULI_Y + PAULI_Z))
    k = (1 + 1j) / (2 * math.sqrt(2)) * (ID2 + 1j * (PAULI_X + PAULI_Y - PAULI_Z))
    return OperatorQuadruple(m, n, j, k)


# ---------------------------------------------------------------------------
# reproducible randomness

# Splitting rule: a run owns SeedSequence(seed) and spawns one child per
# protocol round; Monte Carlo estimators spawn one child per fixed-size
# sample block.  Identical seeds therefore reproduce runs bit for bit, and
# rounds / blocks may be evaluated concurrently without changing results.


def rng_from_seed(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def spawn_generators(seed, n: int) -> list[np.random.Generator]:
    """n independent generators derived from a seed or SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        root = seed
    else:
        root = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in root.spawn(n)]


# ---------------------------------------------------------------------------
# JSON-friendly serialization: complex -> [re, im], matrices row-major


def complex_to_pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def pair_to_complex(pair) -> complex:
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise ValidationError(f"expected [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def vector_to_pairs(v: np.ndarray) -> list[list[float]]:
    return [complex_to_pair(z) for z in np.asarray(v, dtype=complex)]


def vector_from_pairs(pairs, length: int | None = None) -> np.ndarray:
    arr = np.array([pair_to_complex(p) for p in pairs], dtype=complex)
    if length is not None and arr.shape != (length,):
        raise ValidationError(f"expected {length} amplitudes, got {arr.shape[0]}")
    return arr


def matrix_to_pairs(u: np.ndarray) -> list[list[list[float]]]:
    return [[complex_to_pair(z) for z in row] for row in np.asarray(u, dtype=complex)]


def matrix_from_pairs(rows) -> np.ndarray:
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValidationError("expected a 2x2 matrix of [re, im] pairs")
    return np.array([[pair_to_complex(z) for z in row] for row in rows], dtype=complex)
