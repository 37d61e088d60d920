"""Three-party bit commitment protocol state machine.

One run has four phases.  In pre-commitment the trusted party (TTP) measures
its half of a fresh singlet per round in a secret random basis, which leaves
the committer (Alice) holding the orthogonal state.  In commitment Alice
encodes her bit chi by applying one of the four quadruple operators (m or n
for chi = 0, j or k for chi = 1) and sends the result to the receiver (Bob).
Holding is an idle marker.  At unveiling Alice announces the operator used
in every round, then the TTP announces its bases and outcomes, and Bob
undoes each announced operator and checks that his measurement outcome is
opposite to the TTP's in every round.

Everything a run does is recorded in a :class:`Transcript`; identical
(config, strategies, seed) produce identical transcripts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .errors import ConfigError, ProtocolAbort, SynthesisError, ValidationError
from .qmath import OperatorQuadruple

PHASES = ("pre-commitment", "commitment", "holding", "unveiling")


def as_commit_bit(chi) -> int:
    if chi in (0, 1):
        return int(chi)
    raise ValidationError(f"commit bit must be 0 or 1, got {chi!r}")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class BasisSource:
    """Where the TTP draws its measurement bases from.

    kind "subcircle_discretized" uses k evenly spaced angles 2*pi*i/k on the
    real-amplitude circle, "subcircle_continuous" a uniform angle on that
    circle, and "full_bloch" a Haar-random qubit.
    """

    kind: str
    k: int = 8

    KINDS = ("subcircle_discretized", "subcircle_continuous", "full_bloch")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown basis source {self.kind!r}")
        if self.kind == "subcircle_discretized" and self.k < 2:
            raise ConfigError("discretized basis source needs k >= 2")

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "full_bloch":
            return qmath.haar_random_state(rng)
        if self.kind == "subcircle_continuous":
            return qmath.subcircle_state(rng.uniform(0.0, 2.0 * math.pi))
        return qmath.subcircle_state(2.0 * math.pi * int(rng.integers(self.k)) / self.k)

    def to_json(self) -> dict:
        out = {"type": self.kind}
        if self.kind == "subcircle_discretized":
            out["k"] = self.k
        return out

    @classmethod
    def from_json(cls, spec) -> "BasisSource":
        if not isinstance(spec, dict) or "type" not in spec:
            raise ConfigError(f"basis_source must be an object with a 'type', got {spec!r}")
        kind = spec["type"]
        if kind == "subcircle_discretized":
            return cls(kind, int(spec.get("k", 8)))
        return cls(kind)


_QUADRUPLE_ALIASES = ("reference", "paper")


def quadruple_from_json(spec) -> OperatorQuadruple:
    """Parse either a named alias or four inline matrices."""
    if isinstance(spec, str):
        if spec in _QUADRUPLE_ALIASES:
            return qmath.reference_quadruple()
        raise ConfigError(f"unknown quadruple name {spec!r}")
    if isinstance(spec, dict):
        try:
            mats = {key: qmath.matrix_from_pairs(spec[key]) for key in ("m", "n", "j", "k")}
        except KeyError as exc:
            raise ConfigError(f"quadruple is missing operator {exc.args[0]!r}") from None
        return OperatorQuadruple(**mats)
    raise ConfigError(f"cannot interpret quadruple spec {spec!r}")


def quadruple_to_json(quad: OperatorQuadruple) -> dict:
    return {key: qmath.matrix_to_pairs(quad.operator(key)) for key in ("m", "n", "j", "k")}


@dataclass(frozen=True)
class ProtocolConfig:
    rounds: int
    quadruple: OperatorQuadruple
    basis_source: BasisSource
    seed: int
    tolerance: float = 1e-10

    def __post_init__(self):
        if int(self.rounds) < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if self.seed is None:
            raise ConfigError("seed is mandatory (runs must be reproducible)")
        if not (self.tolerance > 0.0):
            raise ConfigError("tolerance must be positive")

    def to_json(self) -> dict:
        return {
            "rounds": self.rounds,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "basis_source": self.basis_source.to_json(),
            "quadruple": quadruple_to_json(self.quadruple),
        }

    @classmethod
    def from_json(cls, spec: dict) -> "ProtocolConfig":
        try:
            rounds = int(spec["rounds"])
            seed = int(spec["seed"])
        except KeyError as exc:
            raise ConfigError(f"config is missing required field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad rounds/seed value: {exc}") from None
        try:
            tolerance = float(spec.get("tolerance", 1e-10))
        except (TypeError, ValueError):
            raise ConfigError(f"bad tolerance value {spec.get('tolerance')!r}") from None
        return cls(
            rounds=rounds,
            quadruple=quadruple_from_json(spec.get("quadruple", "reference")),
            basis_source=BasisSource.from_json(spec.get("basis_source", {"type": "full_bloch"})),
            seed=seed,
            tolerance=tolerance,
        )


# ---------------------------------------------------------------------------
# transcript records


@dataclass
class RoundRecord:
    index: int
    ttp_basis: np.ndarray
    ttp_outcome: int
    alice_state: np.ndarray
    alice_operator_label: str | None = None
    sent_state: np.ndarray | None = None
    announced_operator: str | None = None
    announced_basis: np.ndarray | None = None
    announced_outcome: int | None = None
    bob_outcome: int | None = None
    verified: bool | None = None
    bob_guess: int | None = None
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        pairs = qmath.vector_to_pairs
        return {
            "index": self.index,
            "ttp_basis": pairs(self.ttp_basis),
            "ttp_outcome": self.ttp_outcome,
            "alice_state": pairs(self.alice_state),
            "alice_operator_label": self.alice_operator_label,
            "sent_state": None if self.sent_state is None else pairs(self.sent_state),
            "announced_operator": self.announced_operator,
            "announced_basis": None if self.announced_basis is None else pairs(self.announced_basis),
            "announced_outcome": self.announced_outcome,
            "bob_outcome": self.bob_outcome,
            "verified": self.verified,
            "bob_guess": self.bob_guess,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    first_failed_round: int | None = None

    def to_json(self) -> dict:
        return {"accepted": self.accepted, "first_failed_round": self.first_failed_round}


@dataclass
class Transcript:
    config: ProtocolConfig
    committed_bit: int
    strategies: dict
    rounds: list[RoundRecord]
    phase_log: list[str]
    verdict: Verdict
    aborted: bool = False
    abort_reason: str | None = None

    @property
    def accepted(self) -> bool:
        return self.verdict.accepted

    def pass_rate(self) -> float:
        done = [r for r in self.rounds if r.verified is not None]
        if not done:
            return 0.0
        return sum(1 for r in done if r.verified) / len(done)

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "committed_bit": self.committed_bit,
            "strategies": self.strategies,
            "phase_log": list(self.phase_log),
            "rounds": [r.to_json() for r in self.rounds],
            "verdict": self.verdict.to_json(),
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
        }


# ---------------------------------------------------------------------------
# protocol steps


def precommit(config: ProtocolConfig, rngs=None) -> list[tuple[np.ndarray, int, np.ndarray]]:
    """Honest pre-commitment: one (ttp_basis, ttp_outcome, alice_state) per round.

    The TTP measures its half of a fresh singlet in a freshly sampled basis;
    the collapse leaves Alice with the state orthogonal to the TTP's result.
    rngs may be the per-round generators (one each); by default they are
    spawned from config.seed.
    """
    if rngs is None:
        rngs = qmath.spawn_generators(config.seed, config.rounds)
    sing = qmath.singlet()
    out = []
    for i in range(config.rounds):
        basis = config.basis_source.sample(rngs[i])
        outcome, alice_state = qmath.measure_first(sing, basis, rngs[i])
        out.append((basis, outcome, alice_state))
    return out


def commit_honest(
    chi: int,
    alice_state: np.ndarray,
    quadruple: OperatorQuadruple,
    rng: np.random.Generator,
) -> tuple[str, np.ndarray]:
    """Pick one of the two operators for chi uniformly and apply it."""
    pair = quadruple.pair(as_commit_bit(chi))
    label, op = pair[int(rng.integers(2))]
    return label, op @ alice_state


def commit_purified(chi: int, alice_state: np.ndarray, quadruple: OperatorQuadruple) -> np.ndarray:
    """Commitment kept coherent on an ancilla instead of measured.

    Returns (|0> (x) Op1|psi> + |1> (x) Op2|psi>) / sqrt(2) with (Op1, Op2)
    the operator pair for chi; tracing out the ancilla gives the mixed state
    the receiver holds.
    """
    psi = qmath.as_state(alice_state, name="alice_state")
    (_, op1), (_, op2) = quadruple.pair(as_commit_bit(chi))
    out = np.empty(4, dtype=complex)
    out[:2] = op1 @ psi
    out[2:] = op2 @ psi
    return out / math.sqrt(2.0)


def unveil_verify(
    sent_state: np.ndarray,
    announced_operator: str,
    quadruple: OperatorQuadruple,
    ttp_basis: np.ndarray,
    ttp_outcome: int,
    rng: np.random.Generator,
) -> tuple[int, bool]:
    """Bob's per-round check.

    He applies the adjoint of the announced operator to the state he holds,
    measures in the announced basis, and accepts the round iff his outcome is
    opposite to the announced one.
    """
    if announced_operator not in qmath.LABELS:
        raise ProtocolAbort(f"announced operator {announced_operator!r} is not in the quadruple")
    op = quadruple.operator(announced_operator)
    recovered = op.conj().T @ sent_state
    bob_outcome = qmath.measure_qubit(recovered, ttp_basis, rng)
    return bob_outcome, bob_outcome != ttp_outcome


# ---------------------------------------------------------------------------
# full run


def run_protocol(config: ProtocolConfig, chi, alice=None, ttp=None, bob=None, rng=None) -> Transcript:
    """Execute one protocol run and return its transcript.

    Strategies default to honest; dishonest ones come from the adversary
    module.  Randomness derives from config.seed (or an explicit SeedSequence
    passed as rng) through one substream per round, so runs are reproducible
    and rounds are independent.
    """
    from . import adversary  # circular at import time, not at call time

    chi = as_commit_bit(chi)
    alice = alice if alice is not None else adversary.AliceStrategy.honest()
    ttp = ttp if ttp is not None else adversary.TtpStrategy.honest()
    bob = bob if bob is not None else adversary.BobStrategy.honest()
    if alice.kind != "honest" and alice.actual != chi:
        raise ConfigError("attack strategies commit their 'actual' bit; pass chi equal to it")
    if bob.kind == "entangled_probe":
        raise ConfigError(
            "entangled_probe cannot run inside the TTP protocol (the receiver "
            "supplies no states); use adversary.bob_entangled_probe instead"
        )

    if rng is None:
        root = np.random.SeedSequence(config.seed)
    elif isinstance(rng, np.random.SeedSequence):
        root = rng
    else:
        root = np.random.SeedSequence(rng)
    rngs = [np.random.default_rng(child) for child in root.spawn(config.rounds)]

    quad = config.quadruple
    strategies = {"alice": alice.to_json(), "ttp": ttp.to_json(), "bob": bob.to_json()}
    phase_log: list[str] = []
    guesser = adversary.probe_guesser(quad, bob.psi) if bob.kind == "probe" else None

    # (i) pre-commitment, with any TTP tampering applied to the honest rounds
    phase_log.append("pre-commitment")
    records: list[RoundRecord] = []
    announcements: list[tuple[np.ndarray, int, list[str]]] = []
    for i, (basis, outcome, alice_state) in enumerate(precommit(config, rngs)):
        tampered = adversary.ttp_tamper(ttp, basis, outcome, alice_state, config.basis_source, rngs[i])
        records.append(
            RoundRecord(
                index=i,
                ttp_basis=tampered.basis,
                ttp_outcome=tampered.outcome,
                alice_state=tampered.alice_state,
            )
        )
        announcements.append((tampered.announced_basis, tampered.announced_outcome, tampered.flags))

    # (ii) commitment
    phase_log.append("commitment")
    pending: list[tuple] = []
    aborted = False
    abort_reason = None
    for rec in records:
        rng_i = rngs[rec.index]
        if alice.kind == "honest":
            label, sent = commit_honest(chi, rec.alice_state, quad, rng_i)
            rec.alice_operator_label = label
            rec.sent_state = sent
            pending.append(("announce_label", label))
        else:
            actual = alice.actual
            try:
                coeffs = (
                    alice.coeffs
                    if alice.kind == "delayed"
                    else adversary.pair_map_coefficients(rec.alice_state, quad, alice.actual, alice.declared)
                )
            except SynthesisError as exc:
                rec.flags.append(f"strategy_error: {exc}")
                aborted = True
                abort_reason = str(exc)
                pending.append(("abort", None))
                break
            rec.flags.append(f"{alice.kind}_attack")
            pending.append(("purified", commit_purified(actual, rec.alice_state, quad), coeffs))

    # (iii) holding carries no operations
    phase_log.append("holding")

    # (iv) unveiling: Alice announces all operators first, then the TTP
    phase_log.append("unveiling")
    if not aborted:
        for rec, todo in zip(records, pending):
            rng_i = rngs[rec.index]
            if todo[0] == "announce_label":
                rec.announced_operator = todo[1]
            else:
                _, purified, coeffs = todo
                label, collapsed, _ = adversary.delayed_measurement_attack(
                    purified, coeffs, quad, rng_i, declared=alice.declared, actual=alice.actual
                )
                rec.announced_operator = label
                rec.sent_state = collapsed
        for rec, (ann_basis, ann_outcome, flags) in zip(records, announcements):
            rec.announced_basis = ann_basis
            rec.announced_outcome = ann_outcome
            rec.flags.extend(flags)

    # Bob's verification (and optional per-round discrimination guess)
    first_failed = None
    if not aborted:
        for rec in records:
            rng_i = rngs[rec.index]
            if guesser is not None:
                rec.bob_guess = guesser(rec.sent_state, rng_i)
            rec.bob_outcome, rec.verified = unveil_verify(
                rec.sent_state, rec.announced_operator, quad, rec.announced_basis, rec.announced_outcome, rng_i
            )
            if not rec.verified and first_failed is None:
                first_failed = rec.index

    if aborted:
        verdict = Verdict(accepted=False, first_failed_round=len(pending) - 1)
    else:
        verdict = Verdict(accepted=first_failed is None, first_failed_round=first_failed)
    return Transcript(
        config=config,
        committed_bit=chi,
        strategies=strategies,
        rounds=records,
        phase_log=phase_log,
        verdict=verdict,
        aborted=aborted,
        abort_reason=abort_reason,
    )
