"""Numerical verification of the protocol's quantitative claims.

Covers the concealment conditions on an operator quadruple, the closed-form
Bloch average of the delayed-attack success probability with its Monte Carlo
counterpart, detection-probability curves over repeated rounds, and the
parametrized operator families used to exercise attack synthesis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import adversary, protocol, qmath
from .errors import GeneratorRejectionError, ValidationError
from .qmath import OperatorQuadruple

SAMPLERS = ("full_bloch", "subcircle")
_BLOCK = 4096

CANONICAL_PROBES = (
    ("|0>", qmath.KET_0),
    ("|1>", qmath.KET_1),
    ("|+>", qmath.KET_PLUS),
    ("|->", qmath.KET_MINUS),
    ("(|0>+i|1>)/sqrt2", qmath.KET_PLUS_I),
    ("(|0>-i|1>)/sqrt2", qmath.KET_MINUS_I),
)


# ---------------------------------------------------------------------------
# concealment diagnostics


@dataclass(frozen=True)
class ConcealmentReport:
    residual1: float
    residual2: float
    residual3: float
    tol: float
    passes: bool

    @property
    def residuals(self) -> tuple[float, float, float]:
        return (self.residual1, self.residual2, self.residual3)

    def to_json(self) -> dict:
        return {
            "residuals": list(self.residuals),
            "tol": self.tol,
            "passes": self.passes,
        }


def concealment_check(quadruple: OperatorQuadruple, tol: float = 1e-10) -> ConcealmentReport:
    """Evaluate the three sandwich equations whose joint validity makes the
    quadruple perfectly concealing for every qubit and every entangled probe."""
    r1, r2, r3 = adversary.concealment_residuals(quadruple)
    return ConcealmentReport(r1, r2, r3, tol, max(r1, r2, r3) <= tol)


def rho_pair(quadruple: OperatorQuadruple, psi) -> tuple[np.ndarray, np.ndarray, float]:
    """The two chi-conditioned ensemble densities at psi and their trace
    distance (zero exactly when the receiver learns nothing at psi)."""
    psi = qmath.as_state(psi)
    r0 = qmath.ensemble_density(tuple(op for _, op in quadruple.pair(0)), psi)
    r1 = qmath.ensemble_density(tuple(op for _, op in quadruple.pair(1)), psi)
    return r0, r1, qmath.trace_distance(r0, r1)


def concealment_witness(quadruple: OperatorQuadruple) -> tuple[str, np.ndarray, float]:
    """The canonical probe state with the largest ensemble distance."""
    best = None
    for name, probe in CANONICAL_PROBES:
        _, _, dist = rho_pair(quadruple, probe)
        if best is None or dist > best[2]:
            best = (name, probe, dist)
    return best


# ---------------------------------------------------------------------------
# cheat success probability: pointwise, closed form, Monte Carlo


def cheat_success_probability(quadruple: OperatorQuadruple, coeffs, psi) -> float:
    """Probability that a delayed attack with the given coefficients survives
    verification at a known state psi.

    This is the branch-probability-weighted fidelity; evaluating the overlap
    on the unnormalized branch vectors folds the branch probability and the
    conditional pass probability into one term.
    """
    psi = qmath.as_state(psi)
    arr = np.asarray(coeffs, dtype=complex)
    m, n, j, k = quadruple.as_tuple()
    mp, np_ = m @ psi, n @ psi
    v0 = arr[0, 0] * mp + arr[0, 1] * np_
    v1 = arr[1, 0] * mp + arr[1, 1] * np_
    return 0.5 * (qmath.fidelity(v0, j @ psi) + qmath.fidelity(v1, k @ psi))


def expected_cheat_fidelity_closed(coeffs) -> float:
    """Bloch-sphere average of the delayed-attack success probability.

    For unitary coefficients this is 1/2 + Re(a conj(b))/3, which never
    exceeds 2/3.  Non-unitary input falls back to the unsimplified average
    (|a|^2+|b|^2+|c|^2+|d|^2)/4 + Re(a conj(b) - c conj(d))/6 with a warning.
    """
    arr = np.asarray(coeffs, dtype=complex)
    if arr.shape != (2, 2):
        raise ValidationError(f"coefficients must be 2x2, got shape {arr.shape}")
    a, b = arr[0]
    c, d = arr[1]
    if qmath.unitarity_residual(arr) <= qmath.ATOL_UNITARY:
        return 0.5 + (a * b.conjugate()).real / 3.0
    warnings.warn("coefficient matrix is not unitary; evaluating the unsimplified average")
    quad = (abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(d) ** 2) / 4.0
    return quad + (a * b.conjugate() - c * d.conjugate()).real / 6.0


@dataclass(frozen=True)
class FidelityEstimate:
    mean: float
    stderr: float
    samples: int
    sampler: str

    def to_json(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples, "sampler": self.sampler}


def _sample_states(sampler: str, rng: np.random.Generator, size: int) -> np.ndarray:
    if sampler == "full_bloch":
        return qmath.haar_random_states(rng, size)
    thetas = rng.uniform(0.0, 2.0 * math.pi, size=size)
    return np.column_stack([np.cos(thetas / 2.0) + 0j, np.sin(thetas / 2.0) + 0j])


def expected_cheat_fidelity_mc(
    quadruple: OperatorQuadruple,
    coeffs,
    sampler: str,
    n: int,
    rng,
) -> FidelityEstimate:
    """Monte Carlo estimate of the average attack success probability.

    Samples are drawn in fixed blocks of 4096; when ``rng`` is a seed or
    SeedSequence each block gets its own spawned substream, so blocks can be
    evaluated concurrently without changing the estimate.
    """
    if sampler not in SAMPLERS:
        raise ValidationError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    if n < 100:
        raise ValidationError(f"need at least 100 samples, got {n}")
    arr = np.asarray(coeffs, dtype=complex)
    m, nn, j, k = quadruple.as_tuple()

    n_blocks = (n + _BLOCK - 1) // _BLOCK
    if isinstance(rng, np.random.Generator):
        block_rngs = [rng] * n_blocks
    else:
        block_rngs = qmath.spawn_generators(rng, n_blocks)

    total = 0.0
    total_sq = 0.0
    left = n
    for block_rng in block_rngs:
        size = min(_BLOCK, left)
        left -= size
        psis = _sample_states(sampler, block_rng, size)
        mp = psis @ m.T
        np_ = psis @ nn.T
        v0 = arr[0, 0] * mp + arr[0, 1] * np_
        v1 = arr[1, 0] * mp + arr[1, 1] * np_
        f0 = np.abs(np.sum(v0.conj() * (psis @ j.T), axis=1)) ** 2
        f1 = np.abs(np.sum(v1.conj() * (psis @ k.T), axis=1)) ** 2
        vals = 0.5 * (f0 + f1)
        total += float(vals.sum())
        total_sq += float((vals**2).sum())
    mean = total / n
    var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
    return FidelityEstimate(mean, math.sqrt(var / n), n, sampler)


def detection_probability(n_rounds: int, per_round_success: float) -> float:
    """1 - p^n: the chance at least one of n independent rounds fails."""
    if n_rounds < 0:
        raise ValidationError(f"round count must be >= 0, got {n_rounds}")
    if not 0.0 <= per_round_success <= 1.0:
        raise ValidationError(f"per-round success must be in [0, 1], got {per_round_success}")
    return 1.0 - per_round_success**n_rounds


# ---------------------------------------------------------------------------
# parametrized quadruple families (generators for synthesis testing)


@dataclass(frozen=True)
class MixingFamilyParams:
    """Rank-two family: m is the identity, n is the generic unitary sending
    |0> to x|0> + y|1>, and the chi = 1 operators mix the images of |0> and
    |1> through two unitary coefficient matrices."""

    x: complex
    y: complex
    phase: complex
    zero_coeffs: np.ndarray
    one_coeffs: np.ndarray

    def __post_init__(self):
        if abs(abs(self.x) ** 2 + abs(self.y) ** 2 - 1.0) > 1e-12:
            raise ValidationError("|x|^2 + |y|^2 must be 1")
        if abs(self.y) == 0.0:
            raise ValidationError("y must be nonzero (rank-two family)")
        if abs(abs(self.phase) - 1.0) > 1e-12:
            raise ValidationError("phase must have unit modulus")
        object.__setattr__(self, "zero_coeffs", qmath.as_unitary(self.zero_coeffs, name="zero_coeffs"))
        object.__setattr__(self, "one_coeffs", qmath.as_unitary(self.one_coeffs, name="one_coeffs"))


def mixing_family_quadruple(params: MixingFamilyParams, tol: float = qmath.ATOL_UNITARY) -> OperatorQuadruple:
    """Build the rank-two family member; m, n are unitary by construction,
    while j, k are only checked and rejected when the mixing coefficients do
    not produce unitaries."""
    x, y, ph = complex(params.x), complex(params.y), complex(params.phase)
    a, b = params.zero_coeffs[0]
    c, d = params.zero_coeffs[1]
    s, t = params.one_coeffs[0]
    u, v = params.one_coeffs[1]
    m = qmath.ID2.copy()
    n = np.array([[x, ph * y.conjugate()], [y, -ph * x.conjugate()]])
    j = np.array([[a + b * x, t * ph * y.conjugate()], [b * y, s - t * ph * x.conjugate()]])
    k = np.array([[c + d * x, v * ph * y.conjugate()], [d * y, u - v * ph * x.conjugate()]])
    res_j = qmath.unitarity_residual(j)
    res_k = qmath.unitarity_residual(k)
    if max(res_j, res_k) > tol:
        raise GeneratorRejectionError(
            f"mixing parameters give non-unitary operators (residuals j: {res_j:.3e}, k: {res_k:.3e})"
        )
    return OperatorQuadruple(m, n, j, k)


@dataclass(frozen=True)
class DiagonalFamilyParams:
    """Rank-one family: all four operators are diagonal phase pairs."""

    m_phases: tuple[complex, complex]
    n_phases: tuple[complex, complex]
    j_phases: tuple[complex, complex]
    k_phases: tuple[complex, complex]

    def __post_init__(self):
        for name in ("m_phases", "n_phases", "j_phases", "k_phases"):
            pair = tuple(complex(z) for z in getattr(self, name))
            if len(pair) != 2 or any(abs(abs(z) - 1.0) > 1e-12 for z in pair):
                raise ValidationError(f"{name} must be two unit-modulus scalars")
            object.__setattr__(self, name, pair)


def diagonal_family_quadruple(params: DiagonalFamilyParams) -> tuple[OperatorQuadruple, bool]:
    """Build the diagonal family member and report whether the off-diagonal
    balance condition holds.

    The balance condition m0*conj(m1) + n0*conj(n1) = j0*conj(j1) +
    k0*conj(k1) is exactly the third concealment equation for diagonal
    quadruples (the first two hold automatically).
    """
    quad = OperatorQuadruple(
        np.diag(params.m_phases),
        np.diag(params.n_phases),
        np.diag(params.j_phases),
        np.diag(params.k_phases),
    )
    (m0, m1), (n0, n1) = params.m_phases, params.n_phases
    (j0, j1), (k0, k1) = params.j_phases, params.k_phases
    lhs = m0 * m1.conjugate() + n0 * n1.conjugate()
    rhs = j0 * j1.conjugate() + k0 * k1.conjugate()
    return quad, abs(lhs - rhs) <= 1e-12


# ---------------------------------------------------------------------------
# sweeps


def detection_sweep(
    n_values,
    trials: int,
    seed: int,
    coeffs=None,
    quadruple: OperatorQuadruple | None = None,
) -> list[dict]:
    """Empirical vs analytic detection probability of a delayed attack.

    Runs the full protocol `trials` times per round count with a cheating
    committer (commits 0, unveils 1) against a Haar basis source; the
    analytic column is 1 - p^n with p the closed-form average success.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    n_values = list(n_values)
    if not n_values:
        raise ValidationError("empty round-count range")
    coeffs = qmath.HADAMARD if coeffs is None else np.asarray(coeffs, dtype=complex)
    quadruple = quadruple if quadruple is not None else qmath.reference_quadruple()
    per_round = expected_cheat_fidelity_closed(coeffs)
    alice = adversary.AliceStrategy.delayed(coeffs, declared=1, actual=0)
    rows = []
    for n_rounds in n_values:
        config = protocol.ProtocolConfig(
            rounds=int(n_rounds),
            quadruple=quadruple,
            basis_source=protocol.BasisSource("full_bloch"),
            seed=seed,
        )
        rejected = 0
        for trial in range(trials):
            root = np.random.SeedSequence([seed, int(n_rounds), trial])
            transcript = protocol.run_protocol(config, 0, alice=alice, rng=root)
            rejected += 0 if transcript.accepted else 1
        emp = rejected / trials
        rows.append(
            {
                "n_rounds": int(n_rounds),
                "analytic_detection": detection_probability(int(n_rounds), per_round),
                "empirical_detection": emp,
                "stderr": math.sqrt(max(emp * (1.0 - emp), 0.0) / trials),
            }
        )
    return rows


def coefficient_point(amp: float, phase: float) -> np.ndarray:
    """Unitary coefficient matrix with |a| = amp and arg(a conj(b)) = phase."""
    if not 0.0 <= amp <= 1.0:
        raise ValidationError("amp must be in [0, 1]")
    other = math.sqrt(max(1.0 - amp * amp, 0.0))
    b = other * complex(math.cos(phase), -math.sin(phase))
    return np.array([[amp, b], [-b.conjugate(), amp]], dtype=complex)


def fidelity_grid(
    amp_points: int = 21,
    phase_points: int = 16,
    samples: int = 0,
    seed: int = 0,
    quadruple: OperatorQuadruple | None = None,
) -> list[dict]:
    """Closed-form (and optionally Monte Carlo) attack success over a grid of
    coefficient matrices parametrized by (|a|, arg(a conj(b)))."""
    if amp_points < 2 or phase_points < 1:
        raise ValidationError("grid needs at least 2 amplitude and 1 phase points")
    quadruple = quadruple if quadruple is not None else qmath.reference_quadruple()
    rows = []
    for i, t in enumerate(np.linspace(0.0, 1.0, amp_points)):
        amp = math.sqrt(t)
        for p, phase in enumerate(np.linspace(0.0, 2.0 * math.pi, phase_points, endpoint=False)):
            coeffs = coefficient_point(amp, float(phase))
            row = {
                "amp": amp,
                "phase": float(phase),
                "closed_form": expected_cheat_fidelity_closed(coeffs),
                "mc_mean": None,
                "mc_stderr": None,
            }
            if samples:
                est = expected_cheat_fidelity_mc(
                    quadruple, coeffs, "full_bloch", samples, np.random.SeedSequence([seed, i, p])
                )
                row["mc_mean"] = est.mean
                row["mc_stderr"] = est.stderr
            rows.append(row)
    return rows
