"""``qsig`` command-line front end.

Exit codes: 0 success, 1 protocol rejection / failed check / replay
mismatch, 2 usage or schema error, 3 internal error. Reports go to stdout
(or ``--out``); logs go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

import jsonschema

from . import analysis
from .errors import FormatError, QsigError
from .keys import derive_schedule, load_key_material, parse_bits
from .protocol import TRANSCRIPT_SCHEMA, seeded_session, transcript_document
from .qkd import Eve, QkdSessionConfig, run_bb84
from .rng import RandomStream

log = logging.getLogger("qsig")

MIXING_TOL = 1e-10


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsig", description="Single-photon arbitrated quantum signature simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, fmt=True):
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="64-bit seed (falls back to $QSIG_SEED)")
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("run", help="run one honest signing session and write its transcript")
    p.add_argument("--n", type=int, required=True, help="message length in bits")
    p.add_argument("--message", default=None, help="message bits, e.g. 1011 (default: random)")
    p.add_argument("--keys", default=None, help="key material JSON {n, ka, kb, a, b}")
    common(p, fmt=False)

    p = sub.add_parser("attack", help="Monte Carlo forgery experiment")
    p.add_argument("--model", choices=[m.value for m in analysis.AttackModel], default="outsider")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--workers", type=int, default=1)
    common(p)

    p = sub.add_parser("qkd", help="one BB84 session with optional eavesdropper")
    p.add_argument("--raw-len", type=int, default=10000)
    p.add_argument("--eve", choices=[e.value for e in Eve], default="none")
    p.add_argument("--noise", type=float, default=0.0, help="per-qubit flip probability")
    p.add_argument("--sample-fraction", type=float, default=0.5)
    common(p)

    p = sub.add_parser("mix-check", help="trace distance of Pauli-pad ciphertexts to I/2^m")
    p.add_argument("--qubits", type=int, default=3, help="largest m to check (1..3)")
    common(p, seed=False)

    p = sub.add_parser("efficiency", help="signed bits per transmitted qubit/bit")
    p.add_argument("--n", type=int, nargs="+", default=[1, 10, 100, 1000])
    p.add_argument("--seed", type=int, default=0)
    common(p, seed=False)

    p = sub.add_parser("replay", help="re-run a transcript and check it reproduces")
    p.add_argument("path")
    return parser


def _emit(payload, args) -> None:
    if getattr(args, "format", "json") == "csv":
        rows = payload if isinstance(payload, list) else [payload]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QSIG_SEED")
    if env is None:
        raise UsageError(f"{args.command}: --seed is required (or set QSIG_SEED)")
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QSIG_SEED is not an integer: {env!r}") from None


def cmd_run(args) -> int:
    seed = _seed(args)
    sched = load_key_material(args.keys) if args.keys else None
    if sched is not None and sched.n != args.n:
        raise UsageError(f"key material is for n={sched.n}, not --n {args.n}")
    message = parse_bits(args.message) if args.message else None
    if message is not None and len(message) != args.n:
        raise UsageError(f"--message has {len(message)} bits, expected {args.n}")
    sess = seeded_session(args.n, seed, message=message, sched=sched)
    doc = transcript_document(args.n, seed, sess.message.bits, sess.transcript, sess.result,
                              keys=sched.to_material() if sched is not None else None)
    _emit(doc, args)
    log.info("accepted=%s q_t=%d b_t=%d", sess.result.accepted, doc["q_t"], doc["b_t"])
    return 0 if sess.result.accepted else 1


def cmd_attack(args) -> int:
    cfg = analysis.AttackConfig(args.model, args.n, args.trials, _seed(args))
    report = analysis.run_attack(cfg, workers=args.workers, with_exact=args.n <= 2)
    _emit(report.to_dict(), args)
    return 0


def cmd_qkd(args) -> int:
    seed = _seed(args)
    cfg = QkdSessionConfig(args.raw_len, Eve(args.eve), args.noise, args.sample_fraction)
    res = run_bb84(cfg, RandomStream(seed))
    _emit(res.stats(cfg, seed), args)
    return 0


def cmd_mix_check(args) -> int:
    rows = [r.to_dict() for r in analysis.mixing_report(args.qubits)]
    _emit(rows, args)
    return 0 if all(r["trace_distance"] < MIXING_TOL for r in rows) else 1


def cmd_efficiency(args) -> int:
    rows = [analysis.efficiency(n, args.seed).to_dict() for n in args.n]
    _emit(rows, args)
    return 0


def replay(path: str) -> int:
    """Re-run a transcript from its seed and compare it field by field.

    Returns 0 on a bit-identical reproduction, 1 on any mismatch and 2 if
    the file cannot be read as a transcript.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
        jsonschema.validate(doc, TRANSCRIPT_SCHEMA)
        n, seed, message = doc["n"], doc["seed"], parse_bits(doc["message"])
        if len(message) != n:
            raise FormatError(f"message has {len(message)} bits, n={n}")
        sched = None
        if "keys" in doc:
            k = doc["keys"]
            sched = derive_schedule(int(k["n"]), *(parse_bits(k[f]) for f in ("ka", "kb", "a", "b")))
    except (OSError, ValueError, jsonschema.ValidationError) as exc:
        log.error("cannot read transcript %s: %s", path, exc)
        return 2

    sess = seeded_session(n, seed, message=message, sched=sched)
    fresh = transcript_document(n, seed, message, sess.transcript, sess.result,
                                keys=doc.get("keys"))
    # round-trip through JSON so both sides carry identical number types
    fresh = json.loads(json.dumps(fresh))
    for key in ("messages", "q_t", "b_t", "result"):
        if fresh[key] != doc[key]:
            log.error("replay mismatch in %r", key)
            return 1
    log.info("replay reproduced %s", path)
    return 0


def cmd_replay(args) -> int:
    return replay(args.path)


COMMANDS = {
    "run": cmd_run,
    "attack": cmd_attack,
    "qkd": cmd_qkd,
    "mix-check": cmd_mix_check,
    "efficiency": cmd_efficiency,
    "replay": cmd_replay,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qsig: error: {exc}", file=sys.stderr)
        return 2
    except (QsigError, ValueError) as exc:
        # bad flag values surface as ValueError from config validation
        print(f"qsig: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ValueError) else 3
    except Exception:
        log.exception("internal error")
        return 3


if __name__ == "__main__":
    sys.exit(main())
