"""Dishonest-party strategies: the committer's delayed-measurement attack and
its per-state optimum, synthesis of a universal attack from a concealing
quadruple, receiver probe attacks, and trusted-party tampering.

A cheating committer keeps the commitment purified on an ancilla.  At
unveiling she applies a 2x2 coefficient matrix S to the ancilla and measures
it; outcome 0 makes her announce the first operator of the declared pair,
outcome 1 the second, and the data qubit collapses onto the matching branch.
When S is unitary and both branches land exactly on the declared pair's
honest states, the cheat is perfect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .errors import (
    ConfigError,
    DegenerateStateError,
    NotConcealingError,
    ProportionalOperatorsError,
    ValidationError,
)
from .qmath import OperatorQuadruple

_E00 = np.array([[1, 0], [0, 0]], dtype=complex)
_E11 = np.array([[0, 0], [0, 1]], dtype=complex)
_E01 = np.array([[0, 1], [0, 0]], dtype=complex)


# ---------------------------------------------------------------------------
# strategy descriptions (immutable values, serializable into transcripts)


def _as_bit(value, what: str) -> int:
    if value in (0, 1):
        return int(value)
    raise ConfigError(f"{what} must be 0 or 1, got {value!r}")


@dataclass(frozen=True)
class AliceStrategy:
    kind: str
    coeffs: np.ndarray | None = None
    declared: int | None = None
    actual: int | None = None

    @classmethod
    def honest(cls) -> "AliceStrategy":
        return cls("honest")

    @classmethod
    def delayed(cls, coeffs, declared: int = 1, actual: int = 0) -> "AliceStrategy":
        coeffs = qmath.as_unitary(coeffs, name="attack coefficients")
        return cls("delayed", coeffs, _as_bit(declared, "declared"), _as_bit(actual, "actual"))

    @classmethod
    def per_state_optimal(cls, declared: int = 1, actual: int = 0) -> "AliceStrategy":
        return cls("per_state_optimal", None, _as_bit(declared, "declared"), _as_bit(actual, "actual"))

    def to_json(self) -> dict:
        if self.kind == "honest":
            return {"kind": "honest"}
        out = {"kind": self.kind, "declared": self.declared, "actual": self.actual}
        if self.coeffs is not None:
            out["S"] = qmath.matrix_to_pairs(self.coeffs)
        return out

    @classmethod
    def from_json(cls, spec: dict) -> "AliceStrategy":
        kind = spec.get("kind")
        if kind == "honest":
            return cls.honest()
        if kind == "delayed":
            if "S" not in spec:
                raise ConfigError("delayed strategy needs a coefficient matrix 'S'")
            return cls.delayed(qmath.matrix_from_pairs(spec["S"]), spec.get("declared", 1), spec.get("actual", 0))
        if kind == "per_state_optimal":
            return cls.per_state_optimal(spec.get("declared", 1), spec.get("actual", 0))
        raise ConfigError(f"unknown alice strategy {kind!r}")


@dataclass(frozen=True)
class TtpStrategy:
    kind: str
    p: float = 0.0
    psi: np.ndarray | None = None

    @classmethod
    def honest(cls) -> "TtpStrategy":
        return cls("honest")

    @classmethod
    def wrong_basis(cls, p: float) -> "TtpStrategy":
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"wrong_basis probability must be in [0, 1], got {p}")
        return cls("wrong_basis", p=p)

    @classmethod
    def biased_state(cls, psi) -> "TtpStrategy":
        return cls("biased_state", psi=qmath.as_state(psi, name="biased state"))

    def to_json(self) -> dict:
        if self.kind == "wrong_basis":
            return {"kind": "wrong_basis", "p": self.p}
        if self.kind == "biased_state":
            return {"kind": "biased_state", "psi": qmath.vector_to_pairs(self.psi)}
        return {"kind": "honest"}

    @classmethod
    def from_json(cls, spec: dict) -> "TtpStrategy":
        kind = spec.get("kind")
        if kind == "honest":
            return cls.honest()
        if kind == "wrong_basis":
            return cls.wrong_basis(spec.get("p", 1.0))
        if kind == "biased_state":
            if "psi" not in spec:
                raise ConfigError("biased_state strategy needs a state 'psi'")
            return cls.biased_state(qmath.vector_from_pairs(spec["psi"], 2))
        raise ConfigError(f"unknown ttp strategy {kind!r}")


@dataclass(frozen=True)
class BobStrategy:
    kind: str
    psi: np.ndarray | None = None
    state: np.ndarray | None = None

    @classmethod
    def honest(cls) -> "BobStrategy":
        return cls("honest")

    @classmethod
    def probe(cls, psi) -> "BobStrategy":
        return cls("probe", psi=qmath.as_state(psi, name="probe"))

    @classmethod
    def entangled_probe(cls, state) -> "BobStrategy":
        return cls("entangled_probe", state=qmath.as_state4(state, name="probe"))

    def to_json(self) -> dict:
        if self.kind == "probe":
            return {"kind": "probe", "psi": qmath.vector_to_pairs(self.psi)}
        if self.kind == "entangled_probe":
            return {"kind": "entangled_probe", "state": qmath.vector_to_pairs(self.state)}
        return {"kind": "honest"}

    @classmethod
    def from_json(cls, spec: dict) -> "BobStrategy":
        kind = spec.get("kind")
        if kind == "honest":
            return cls.honest()
        if kind == "probe":
            return cls.probe(qmath.vector_from_pairs(spec["psi"], 2))
        if kind == "entangled_probe":
            return cls.entangled_probe(qmath.vector_from_pairs(spec["state"], 4))
        raise ConfigError(f"unknown bob strategy {kind!r}")


# ---------------------------------------------------------------------------
# the delayed-measurement attack


def delayed_measurement_attack(
    purified: np.ndarray,
    coeffs: np.ndarray,
    quadruple: OperatorQuadruple,
    rng: np.random.Generator,
    *,
    declared: int = 1,
    actual: int = 0,
) -> tuple[str, np.ndarray, float]:
    """Apply (S x I) to a purified commitment of `actual`, measure the ancilla,
    and announce an operator of the `declared` pair.

    Returns (announced_label, collapsed_data_qubit, success_weight).  The
    success weight is the fidelity of the collapsed qubit against the honest
    state of the announced operator, i.e. the probability the receiver's
    verification passes on this branch.
    """
    purified = qmath.as_state4(purified, name="purified commitment")
    coeffs = qmath.as_unitary(coeffs, name="attack coefficients")
    (_, src1), _ = quadruple.pair(actual)
    declared_pair = quadruple.pair(declared)

    transformed = qmath.apply_first(coeffs, purified).reshape(2, 2)
    p0 = qmath._clamp_probability(float(np.linalg.norm(transformed[0]) ** 2))
    branch = 0 if rng.random() < p0 else 1
    vec = transformed[branch]
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        raise ValidationError("attack collapsed onto a zero-probability branch")
    collapsed = vec / norm

    # the initial state is recoverable from the untransformed first branch
    psi = math.sqrt(2.0) * (src1.conj().T @ purified.reshape(2, 2)[0])
    label, op = declared_pair[branch]
    weight = qmath.fidelity(collapsed, op @ psi)
    return label, collapsed, weight


def attack_branch_fidelities(
    quadruple: OperatorQuadruple,
    coeffs: np.ndarray,
    psi: np.ndarray,
    *,
    actual: int = 0,
    declared: int = 1,
) -> tuple[float, float]:
    """Fidelity of each attack branch against the declared pair's honest states.

    A branch whose probability vanishes is vacuously perfect.
    """
    psi = qmath.as_state(psi)
    (_, src1), (_, src2) = quadruple.pair(actual)
    (_, dst1), (_, dst2) = quadruple.pair(declared)
    arr = np.asarray(coeffs, dtype=complex)
    out = []
    for row, dst in ((arr[0], dst1), (arr[1], dst2)):
        v = row[0] * (src1 @ psi) + row[1] * (src2 @ psi)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            out.append(1.0)
            continue
        out.append(qmath.fidelity(v / norm, dst @ psi))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# per-state cheat coefficients


def pair_map_coefficients(
    psi: np.ndarray,
    quadruple: OperatorQuadruple,
    actual: int,
    declared: int,
    *,
    tol: float = qmath.ATOL_UNITARY,
) -> np.ndarray:
    """Solve for S mapping the `actual` pair's branches onto the `declared`
    pair's honest states at a known psi.

    Raises DegenerateStateError when the source branch images are parallel
    with matching ensembles, and NotConcealingError when the two ensemble
    densities at psi differ (no unitary exists).
    """
    psi = qmath.as_state(psi)
    (_, src1), (_, src2) = quadruple.pair(actual)
    (_, dst1), (_, dst2) = quadruple.pair(declared)
    u = src1 @ psi
    v = src2 @ psi
    basis = np.column_stack([u, v])
    det = basis[0, 0] * basis[1, 1] - basis[1, 0] * basis[0, 1]
    if abs(det) <= 1e-12:
        r_src = qmath.ensemble_density((src1, src2), psi)
        r_dst = qmath.ensemble_density((dst1, dst2), psi)
        if qmath.trace_distance(r_src, r_dst) > tol:
            raise NotConcealingError(
                "the quadruple is not concealing at this state; no unitary cheat exists"
            )
        raise DegenerateStateError("the branch images of psi are parallel; the cheat is underdetermined")
    row1 = np.linalg.solve(basis, dst1 @ psi)
    row2 = np.linalg.solve(basis, dst2 @ psi)
    coeffs = np.array([row1, row2])
    if qmath.unitarity_residual(coeffs) > tol:
        raise NotConcealingError(
            "the quadruple is not concealing at this state; the solved coefficients are not unitary"
        )
    return coeffs


def optimal_cheat_unitary(psi, quadruple: OperatorQuadruple, *, tol: float = qmath.ATOL_UNITARY) -> np.ndarray:
    """The state-specific unitary turning a committed 0 into an unveiled 1."""
    return pair_map_coefficients(psi, quadruple, 0, 1, tol=tol)


# ---------------------------------------------------------------------------
# concealment residuals and universal attack synthesis


def concealment_residuals(quadruple: OperatorQuadruple) -> tuple[float, float, float]:
    """Frobenius residuals of the three operator equations that characterize
    a perfectly concealing quadruple (the |0><0|, |1><1| and |0><1|
    sandwiches must agree between the two pairs)."""
    m, n, j, k = quadruple.as_tuple()
    out = []
    for e in (_E00, _E11, _E01):
        lhs = m @ e @ m.conj().T + n @ e @ n.conj().T
        rhs = j @ e @ j.conj().T + k @ e @ k.conj().T
        out.append(float(np.linalg.norm(lhs - rhs)))
    return out[0], out[1], out[2]


def _proportional(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    scale = np.trace(b.conj().T @ a) / 2.0
    return bool(np.linalg.norm(a - scale * b) <= atol)


def synthesize_attack(quadruple: OperatorQuadruple, tol: float = 1e-10) -> np.ndarray:
    """Construct the universal cheat coefficients for a concealing quadruple.

    Returns unitary S with j = S00*m + S01*n and k = S10*m + S11*n as matrix
    identities within tol, so (S x I) converts any purified commitment of 0
    into the purified commitment of 1 regardless of the data state.

    When the chi = 0 ensemble has rank one at |0> the four operators share an
    eigenbasis and the coefficients come from the closed-form ratios of the
    diagonal phases; otherwise the overdetermined linear system over matrix
    space is solved directly.
    """
    r1, r2, r3 = concealment_residuals(quadruple)
    if max(r1, r2, r3) > tol:
        raise NotConcealingError(
            f"quadruple is not concealing (residuals {r1:.3e}, {r2:.3e}, {r3:.3e})"
        )
    m, n, j, k = quadruple.as_tuple()
    if all(_proportional(x, m) for x in (n, j, k)):
        raise ProportionalOperatorsError(
            "all four operators are proportional; both commitments are identical"
        )

    det0 = m[0, 0] * n[1, 0] - m[1, 0] * n[0, 0]  # det of [m|0>, n|0>]
    if abs(det0) <= 1e-9:
        coeffs = _diagonal_closed_form(quadruple, tol)
    else:
        basis = np.column_stack([m.reshape(4), n.reshape(4)])
        row1, *_ = np.linalg.lstsq(basis, j.reshape(4), rcond=None)
        row2, *_ = np.linalg.lstsq(basis, k.reshape(4), rcond=None)
        coeffs = np.array([row1, row2])

    res_j = np.linalg.norm(j - (coeffs[0, 0] * m + coeffs[0, 1] * n))
    res_k = np.linalg.norm(k - (coeffs[1, 0] * m + coeffs[1, 1] * n))
    if max(res_j, res_k) > tol:
        raise NotConcealingError(
            f"chi = 1 operators are outside the span of the chi = 0 pair "
            f"(residuals {res_j:.3e}, {res_k:.3e})"
        )
    if qmath.unitarity_residual(coeffs) > tol:
        raise NotConcealingError("the solved coefficient matrix is not unitary")
    return coeffs


def _diagonal_closed_form(quadruple: OperatorQuadruple, tol: float) -> np.ndarray:
    # Reduce by m+ so the shared eigenbasis becomes the computational one;
    # the coefficient ratios are invariant under this reduction.
    m, n, j, k = quadruple.as_tuple()
    red = m.conj().T
    b, c, d = red @ n, red @ j, red @ k
    off = max(abs(x[0, 1]) + abs(x[1, 0]) for x in (b, c, d))
    if off > 1e-8:
        raise NotConcealingError("rank-one ensemble without a common eigenbasis")
    n0, n1 = b[0, 0], b[1, 1]
    j0, j1 = c[0, 0], c[1, 1]
    k0, k1 = d[0, 0], d[1, 1]
    den = n0 - n1
    if abs(den) < 1e-9:
        raise ProportionalOperatorsError("the chi = 0 operators are proportional")
    return np.array(
        [
            [(n0 * j1 - n1 * j0) / den, (j0 - j1) / den],
            [(n0 * k1 - n1 * k0) / den, (k0 - k1) / den],
        ]
    )


# ---------------------------------------------------------------------------
# receiver attacks


def bob_probe_attack(quadruple: OperatorQuadruple, probe) -> float:
    """Helstrom success probability of reading the bit when the receiver
    supplies `probe` as the initial state."""
    probe = qmath.as_state(probe, name="probe")
    r0 = qmath.ensemble_density(tuple(op for _, op in quadruple.pair(0)), probe)
    r1 = qmath.ensemble_density(tuple(op for _, op in quadruple.pair(1)), probe)
    return 0.5 * (1.0 + qmath.trace_distance(r0, r1))


def bob_entangled_probe(quadruple: OperatorQuadruple, probe, chi: int) -> np.ndarray:
    """Joint 4x4 state after committing chi on the first factor of an
    entangled probe, averaged over the operator choice."""
    probe = qmath.as_state4(probe, name="probe")
    out = np.zeros((4, 4), dtype=complex)
    for _, op in quadruple.pair(chi):
        w = qmath.apply_first(op, probe)
        out += 0.5 * np.outer(w, w.conj())
    return out


def probe_guesser(quadruple: OperatorQuadruple, psi):
    """Per-round bit guesser: the Helstrom measurement distinguishing the two
    chi-conditioned ensembles that `psi` would produce.

    Returns guess(received_state, rng) -> 0 or 1; useless (coin flip) when
    the ensembles coincide.
    """
    psi = qmath.as_state(psi, name="probe")
    r0 = qmath.ensemble_density(tuple(op for _, op in quadruple.pair(0)), psi)
    r1 = qmath.ensemble_density(tuple(op for _, op in quadruple.pair(1)), psi)
    delta = r0 - r1
    (lo, hi), vecs = qmath.eigh2(delta)
    if max(abs(lo), abs(hi)) <= 1e-12:
        return lambda received, rng: int(rng.integers(2))
    positive = vecs[:, 1]  # delta is traceless, so the high eigenvalue is the positive one

    def guess(received, rng) -> int:
        p = qmath._clamp_probability(float(abs(np.vdot(positive, received)) ** 2))
        return 0 if rng.random() < p else 1

    return guess


# ---------------------------------------------------------------------------
# trusted-party tampering


@dataclass(frozen=True)
class TamperedPrecommit:
    basis: np.ndarray
    outcome: int
    alice_state: np.ndarray
    announced_basis: np.ndarray
    announced_outcome: int
    flags: list[str] = field(default_factory=list)


def ttp_tamper(
    strategy: TtpStrategy,
    basis: np.ndarray,
    outcome: int,
    alice_state: np.ndarray,
    basis_source,
    rng: np.random.Generator,
) -> TamperedPrecommit:
    """Apply a TTP strategy to one honest pre-commitment round.

    wrong_basis announces a freshly resampled basis with probability p while
    keeping the true outcome label; biased_state skips the singlet entirely,
    hands the committer a fixed state, and announces the only basis/outcome
    consistent with it.  Announced bases with a non-real amplitude product
    are flagged when the configured source is restricted to the real circle.
    """
    if strategy.kind == "honest":
        return TamperedPrecommit(basis, outcome, alice_state, basis, outcome)
    if strategy.kind == "wrong_basis":
        if strategy.p > 0.0 and rng.random() < strategy.p:
            announced = basis_source.sample(rng)
            return TamperedPrecommit(basis, outcome, alice_state, announced, outcome, ["wrong_basis_announced"])
        return TamperedPrecommit(basis, outcome, alice_state, basis, outcome)
    if strategy.kind == "biased_state":
        psi = strategy.psi
        announced = qmath.orthogonal(psi)
        flags = ["fabricated_state"]
        if basis_source.kind.startswith("subcircle") and not qmath.on_subcircle(announced):
            flags.append("announced_basis_off_subcircle")
        return TamperedPrecommit(announced, 0, psi, announced, 0, flags)
    raise ConfigError(f"unknown ttp strategy {strategy.kind!r}")


# ---------------------------------------------------------------------------
# generators and phase-quotient comparisons


def random_attack_coefficients(rng: np.random.Generator) -> np.ndarray:
    """Random unitary whose row products a*conj(b) and c*conj(d) are real.

    This is exactly the family of coefficient matrices that keeps both
    mixed operators of the concealing-quadruple generator unitary.
    """
    beta = rng.uniform(0.0, 2.0 * math.pi)
    ph1 = complex(np.exp(1j * rng.uniform(0.0, 2.0 * math.pi)))
    ph2 = complex(np.exp(1j * rng.uniform(0.0, 2.0 * math.pi)))
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array([[ph1 * cb, ph1 * sb], [-ph2 * sb, ph2 * cb]])


def random_concealing_quadruple(rng: np.random.Generator) -> tuple[OperatorQuadruple, np.ndarray]:
    """Draw a perfectly concealing quadruple together with the coefficient
    matrix that generated it.

    m is Haar random, n = -i (axis . sigma) m for a random Bloch axis, and
    (j, k) mix (m, n) through :func:`random_attack_coefficients`; the real
    row products make the mixes unitary, and the opposite rotation angles
    about the shared axis make the two ensembles agree for every state.
    """
    m = qmath.haar_random_unitary(rng)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    sigma = axis[0] * qmath.PAULI_X + axis[1] * qmath.PAULI_Y + axis[2] * qmath.PAULI_Z
    n = -1j * sigma @ m
    coeffs = random_attack_coefficients(rng)
    j = coeffs[0, 0] * m + coeffs[0, 1] * n
    k = coeffs[1, 0] * m + coeffs[1, 1] * n
    return OperatorQuadruple(m, n, j, k), coeffs


def canonical_row_phases(mat: np.ndarray, *, atol: float = 1e-12) -> np.ndarray:
    """Fix the left-diagonal phase freedom: rotate each row so its leading
    nonzero entry is real positive."""
    out = np.asarray(mat, dtype=complex).copy()
    for i in range(out.shape[0]):
        for entry in out[i]:
            if abs(entry) > atol:
                out[i] *= entry.conjugate() / abs(entry)
                break
    return out


def row_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance after quotienting left-diagonal phases."""
    return float(np.linalg.norm(canonical_row_phases(a) - canonical_row_phases(b)))


def global_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance after the optimal global phase alignment."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    overlap = np.trace(b.conj().T @ a)
    if abs(overlap) < 1e-15:
        return float(np.linalg.norm(a - b))
    return float(np.linalg.norm(a - (overlap / abs(overlap)) * b))
