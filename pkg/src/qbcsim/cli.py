"""Command-line entry point.

Subcommands: simulate (run the protocol from a JSON config), audit (check an
operator quadruple for concealment and synthesize the universal attack),
sweep (detection curves / attack-fidelity grids as CSV), and fidelity
(single-point closed-form and Monte Carlo evaluation).

Complex numbers are serialized as [re, im] pairs everywhere, matrices as two
row-major rows of pairs, qubit states as two pairs; see FORMATS.md.  Exit
codes: 0 success, 2 config error, 3 numerical-validation error, 4 protocol
abort.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, adversary, analysis, protocol, qmath
from .errors import (
    ConfigError,
    GeneratorRejectionError,
    ProportionalOperatorsError,
    ProtocolAbort,
    SynthesisError,
    ValidationError,
)

_SAMPLER_FLAG = {"bloch": "full_bloch", "subcircle": "subcircle"}


def _json_dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _load_json(path: str):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(raw.decode("utf-8")), hashlib.sha256(raw).hexdigest()
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _digest_params(params: dict) -> str:
    return hashlib.sha256(_json_dumps(params).encode("utf-8")).hexdigest()


def _emit(payload: dict, out: str | None, *, command: str, digest: str, seed) -> None:
    text = _json_dumps(payload)
    print(text)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        _write_manifest(out, command=command, digest=digest, seed=seed, outputs=[out])


def _write_manifest(out: str, *, command: str, digest: str, seed, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config_digest": digest,
        "seed": seed,
        "tool_version": __version__,
        "outputs": outputs,
    }
    Path(str(out) + ".manifest.json").write_text(_json_dumps(manifest) + "\n", encoding="utf-8")


def _write_csv(path: str, fieldnames: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in fieldnames})


def _parse_range(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":", 1)
        values = list(range(int(lo), int(hi) + 1))
    else:
        values = [int(text)]
    if not values:
        raise ConfigError(f"empty range {text!r}")
    return values


# ---------------------------------------------------------------------------
# simulate


def _strategies_from_spec(spec: dict):
    alice = adversary.AliceStrategy.from_json(spec.get("alice", {"kind": "honest"}))
    ttp = adversary.TtpStrategy.from_json(spec.get("ttp", {"kind": "honest"}))
    bob = adversary.BobStrategy.from_json(spec.get("bob", {"kind": "honest"}))
    return alice, ttp, bob


def _summarize(transcript: protocol.Transcript) -> dict:
    return {
        "verdict": "accept" if transcript.accepted else "reject",
        "first_failed_round": transcript.verdict.first_failed_round,
        "rounds": len(transcript.rounds),
        "pass_rate": transcript.pass_rate(),
        "empirical_detection_rate": 0.0 if transcript.accepted else 1.0,
        "aborted": transcript.aborted,
    }


def cmd_simulate(args) -> int:
    spec, digest = _load_json(args.config)
    if not isinstance(spec, dict):
        raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        spec["seed"] = args.seed
    if args.rounds is not None:
        spec["rounds"] = args.rounds
    if args.tol is not None:
        spec["tolerance"] = args.tol
    if args.sampler is not None:
        spec["basis_source"] = _basis_source_from_flag(args.sampler)
    config = protocol.ProtocolConfig.from_json(spec)
    chi = protocol.as_commit_bit(spec.get("chi", 0))
    alice, ttp, bob = _strategies_from_spec(spec)

    if args.repeat <= 1:
        transcript = protocol.run_protocol(config, chi, alice=alice, ttp=ttp, bob=bob)
        summary = _summarize(transcript)
        guesses = [r.bob_guess for r in transcript.rounds if r.bob_guess is not None]
        if guesses:
            summary["bob_guess_accuracy"] = sum(1 for g in guesses if g == chi) / len(guesses)
        print(_json_dumps(summary))
        if args.out:
            Path(args.out).write_text(_json_dumps(transcript.to_json()) + "\n", encoding="utf-8")
            _write_manifest(args.out, command="simulate", digest=digest, seed=config.seed, outputs=[args.out])
        return 4 if transcript.aborted else 0
    trials = []
    for trial in range(args.repeat):
        root = np.random.SeedSequence([config.seed, trial])
        transcript = protocol.run_protocol(config, chi, alice=alice, ttp=ttp, bob=bob, rng=root)
        trials.append(
            {
                "trial": trial,
                "accepted": transcript.accepted,
                "first_failed_round": transcript.verdict.first_failed_round,
                "pass_rate": transcript.pass_rate(),
            }
        )
    accepted = sum(1 for t in trials if t["accepted"])
    summary = {
        "trials": args.repeat,
        "accepted_fraction": accepted / args.repeat,
        "detected_fraction": 1.0 - accepted / args.repeat,
        "mean_pass_rate": sum(t["pass_rate"] for t in trials) / args.repeat,
    }
    print(_json_dumps(summary))
    if args.out:
        payload = {"config": config.to_json(), "summary": summary, "trials": trials}
        Path(args.out).write_text(_json_dumps(payload) + "\n", encoding="utf-8")
        _write_manifest(args.out, command="simulate", digest=digest, seed=config.seed, outputs=[args.out])
    return 0


def _basis_source_from_flag(flag: str) -> dict:
    if flag == "bloch":
        return {"type": "full_bloch"}
    if flag == "subcircle":
        return {"type": "subcircle_continuous"}
    if flag.startswith("subcircle-k:"):
        return {"type": "subcircle_discretized", "k": int(flag.split(":", 1)[1])}
    raise ConfigError(f"unknown sampler {flag!r}")


# ---------------------------------------------------------------------------
# audit


def cmd_audit(args) -> int:
    spec, digest = _load_json(args.operators)
    if isinstance(spec, dict) and not set(spec) >= {"m", "n", "j", "k"}:
        raise ConfigError("operators file must name matrices m, n, j, k (or a quadruple alias)")
    if isinstance(spec, dict):
        residuals = {key: qmath.unitarity_residual(qmath.matrix_from_pairs(spec[key])) for key in ("m", "n", "j", "k")}
        bad = {k: v for k, v in residuals.items() if v > qmath.ATOL_UNITARY}
        if bad:
            detail = ", ".join(f"{k}: {v:.3e}" for k, v in sorted(bad.items()))
            raise ValidationError(f"non-unitary operators (residuals {detail})")
    quadruple = protocol.quadruple_from_json(spec)
    report = analysis.concealment_check(quadruple, tol=args.tol)
    payload = {"concealment": report.to_json(), "tol": args.tol}
    if report.passes:
        try:
            coeffs = adversary.synthesize_attack(quadruple, tol=args.tol)
            m, n, j, k = quadruple.as_tuple()
            payload["attack"] = {
                "coefficients": qmath.matrix_to_pairs(coeffs),
                "residual_j": float(np.linalg.norm(j - (coeffs[0, 0] * m + coeffs[0, 1] * n))),
                "residual_k": float(np.linalg.norm(k - (coeffs[1, 0] * m + coeffs[1, 1] * n))),
            }
        except ProportionalOperatorsError as exc:
            payload["attack"] = None
            payload["proportional_operators"] = str(exc)
    else:
        name, probe, dist = analysis.concealment_witness(quadruple)
        payload["witness"] = {
            "probe": name,
            "state": qmath.vector_to_pairs(probe),
            "trace_distance": dist,
        }
    _emit(payload, args.out, command="audit", digest=digest, seed=None)
    return 0


# ---------------------------------------------------------------------------
# sweeps


def cmd_sweep_detection(args) -> int:
    rows = analysis.detection_sweep(_parse_range(args.range), trials=args.trials, seed=args.seed)
    fields = ["n_rounds", "analytic_detection", "empirical_detection", "stderr"]
    _write_csv(args.out, fields, rows)
    _write_manifest(
        args.out,
        command="sweep detection",
        digest=_digest_params({"range": args.range, "trials": args.trials, "seed": args.seed}),
        seed=args.seed,
        outputs=[args.out],
    )
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_sweep_fidelity(args) -> int:
    rows = analysis.fidelity_grid(
        amp_points=args.amp_points,
        phase_points=args.phase_points,
        samples=args.samples,
        seed=args.seed,
    )
    fields = ["amp", "phase", "closed_form", "mc_mean", "mc_stderr"]
    _write_csv(args.out, fields, rows)
    _write_manifest(
        args.out,
        command="sweep fidelity",
        digest=_digest_params(
            {
                "amp_points": args.amp_points,
                "phase_points": args.phase_points,
                "samples": args.samples,
                "seed": args.seed,
            }
        ),
        seed=args.seed,
        outputs=[args.out],
    )
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# single-point fidelity


_PRESETS = {
    "identity": np.eye(2, dtype=complex),
    "hadamard": qmath.HADAMARD,
    "swap": np.array([[0, 1], [1, 0]], dtype=complex),
}


def cmd_fidelity(args) -> int:
    if args.coeffs:
        spec, digest = _load_json(args.coeffs)
        coeffs = qmath.matrix_from_pairs(spec)
    else:
        coeffs = _PRESETS[args.preset]
        digest = _digest_params({"preset": args.preset})
    payload = {"closed_form": analysis.expected_cheat_fidelity_closed(coeffs), "mc": None}
    if args.samples:
        est = analysis.expected_cheat_fidelity_mc(
            qmath.reference_quadruple(),
            coeffs,
            _SAMPLER_FLAG[args.sampler],
            args.samples,
            np.random.SeedSequence(args.seed),
        )
        payload["mc"] = est.to_json()
    _emit(payload, args.out, command="fidelity", digest=digest, seed=args.seed)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbcsim",
        description=(
            "Simulate the trusted-third-party quantum bit commitment protocol "
            "and verify its concealment and bindingness numerically."
        ),
        epilog=(
            "Complex scalars are JSON [re, im] pairs; a qubit state is two pairs, "
            "a 2x2 matrix two row-major rows of pairs (see FORMATS.md)."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the protocol from a JSON config")
    sim.add_argument("--config", required=True, help="JSON config (rounds, seed, strategies, ...)")
    sim.add_argument("--seed", type=int, help="override the config seed")
    sim.add_argument("--rounds", type=int, help="override the round count")
    sim.add_argument("--tol", type=float, help="override the numeric tolerance")
    sim.add_argument("--sampler", help="override the basis source: bloch | subcircle | subcircle-k:K")
    sim.add_argument("--repeat", type=int, default=1, help="independent trials of the same config")
    sim.add_argument("--out", help="write the transcript (or trial list) JSON here")
    sim.set_defaults(func=cmd_simulate)

    audit = sub.add_parser("audit", help="concealment check and attack synthesis for a quadruple")
    audit.add_argument("--operators", required=True, help="JSON file with matrices m, n, j, k or an alias")
    audit.add_argument("--tol", type=float, default=1e-10)
    audit.add_argument("--out", help="write the report JSON here")
    audit.set_defaults(func=cmd_audit)

    sweep = sub.add_parser("sweep", help="CSV sweeps for plotting")
    sweep_sub = sweep.add_subparsers(dest="kind", required=True)
    det = sweep_sub.add_parser("detection", help="detection probability vs round count")
    det.add_argument("--range", required=True, help="round counts, e.g. 1:20 or 10")
    det.add_argument("--trials", type=int, default=1000)
    det.add_argument("--seed", type=int, default=0)
    det.add_argument("--out", required=True)
    det.set_defaults(func=cmd_sweep_detection)
    fid = sweep_sub.add_parser("fidelity", help="attack success over a coefficient grid")
    fid.add_argument("--amp-points", type=int, default=21)
    fid.add_argument("--phase-points", type=int, default=16)
    fid.add_argument("--samples", type=int, default=0, help="Monte Carlo samples per point (0 = closed form only)")
    fid.add_argument("--seed", type=int, default=0)
    fid.add_argument("--out", required=True)
    fid.set_defaults(func=cmd_sweep_fidelity)

    fpt = sub.add_parser("fidelity", help="closed-form / Monte Carlo attack success for one coefficient matrix")
    group = fpt.add_mutually_exclusive_group(required=True)
    group.add_argument("--coeffs", help="JSON file holding a 2x2 matrix of [re, im] pairs")
    group.add_argument("--preset", choices=sorted(_PRESETS))
    fpt.add_argument("--samples", type=int, default=0)
    fpt.add_argument("--sampler", choices=sorted(_SAMPLER_FLAG), default="bloch")
    fpt.add_argument("--seed", type=int, default=0)
    fpt.add_argument("--out", help="write the result JSON here")
    fpt.set_defaults(func=cmd_fidelity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, GeneratorRejectionError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    except (ProtocolAbort, SynthesisError) as exc:
        print(f"protocol abort: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
