"""Command-line entry point: ``alpham <tm|codec|cu|alpha|net|scenario|replay> ...``.

Every run except ``replay`` writes a manifest (argv, working directory,
seed, input and output SHA-256 digests, stdout digest, version) so that
``alpham replay MANIFEST`` can re-run it and check the outputs byte for byte.
Manifests go next to the first output file, or into ``$ALPHAM_OUT_DIR``
(default: the working directory) when the run writes no file.

Exit codes: 0 success, 1 input or runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import contextlib
import hashlib
import io
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__, isa
from .alpha import AlphaMachine, run_alpha
from .calculator import cu_run, load_program
from .codec import MalformedCode, decode_scheme, decode_sequence, encode_scheme
from .context import ProbabilitySpace, SpaceError, make_rng
from .network import Conflict, Network, dump_event_log, run_network, serialize_check
from .tape import TapeError
from .turing import (ADDITION_TEXT, FIG2_TEXT, Halted, OutOfFuel, SchemeParseError, Stuck,
                     format_scheme, parse_scheme, tm_run)

MANIFEST_SCHEMA = "alpham.manifest/1"
OUT_DIR_ENV = "ALPHAM_OUT_DIR"
BUILTIN_SCHEMES = {"@fig2": FIG2_TEXT, "@addition": ADDITION_TEXT}


class CliError(Exception):
    """Reported as ``alpham: <message>`` with exit code 1."""


class _Run:
    """Files read and written by one command, for the manifest."""

    def __init__(self):
        self.inputs: List[str] = []
        self.outputs: List[str] = []
        self.seed: Optional[int] = None

    def read(self, path: str) -> str:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read {path}: {exc.strerror}") from None
        self.inputs.append(path)
        return text

    def out_path(self, path: str) -> Path:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(path)
        return p

    def open_out(self, path: str):
        return open(self.out_path(path), "w", encoding="utf-8", newline="\n")


def _sha256_file(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonl_header(fh, schema: str, **fields) -> None:
    fh.write(json.dumps({"schema": schema, **fields}, sort_keys=True, ensure_ascii=False) + "\n")


def _jsonl(fh, record: dict) -> None:
    fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def _load_space(run: _Run, path: Optional[str]) -> Optional[ProbabilitySpace]:
    if path is None:
        return None
    try:
        doc = json.loads(run.read(path))
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    items = doc.get("events", []) if isinstance(doc, dict) else doc
    try:
        return ProbabilitySpace.from_spec(items)
    except (KeyError, ValueError, SpaceError) as exc:
        raise CliError(f"{path}: bad event space: {exc}") from None


def _load_json(run: _Run, path: str) -> dict:
    try:
        return json.loads(run.read(path))
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


# -- tm -------------------------------------------------------------------------------

def _scheme_text(run: _Run, ref: str) -> str:
    return BUILTIN_SCHEMES[ref] if ref in BUILTIN_SCHEMES else run.read(ref)


def _parse_scheme(run: _Run, ref: str):
    try:
        return parse_scheme(_scheme_text(run, ref))
    except SchemeParseError as exc:
        raise CliError(f"{ref}:{exc.line}:{exc.column}: {exc.message}") from None


def cmd_tm_run(args, run: _Run) -> int:
    scheme = _parse_scheme(run, args.scheme)
    res = tm_run(scheme, args.tape, position=args.position, max_steps=args.fuel)
    trace = args.trace or str(Path(os.environ.get(OUT_DIR_ENV, ".")) / "tm.trace.jsonl")
    with run.open_out(trace) as fh:
        _jsonl_header(fh, "alpham.tmtrace/1", tape=args.tape, position=args.position)
        for i, st in enumerate(res.trace, 1):
            _jsonl(fh, {"step": i, **st.as_dict()})
    out = res.outcome
    if isinstance(out, Halted):
        print(f"halted after {len(res.trace)} steps in state {out.state}")
        print(f"tape: {out.tape.trimmed()}")
        return 0
    if isinstance(out, Stuck):
        print(f"stuck after {len(res.trace)} steps: no transition for "
              f"({out.state}, {out.symbol}) at cell {out.position}")
    elif isinstance(out, OutOfFuel):
        print(f"no halt within {args.fuel} steps")
    return 1


# -- codec ----------------------------------------------------------------------------

def cmd_codec_encode(args, run: _Run) -> int:
    print(encode_scheme(_parse_scheme(run, args.scheme)))
    return 0


def cmd_codec_decode(args, run: _Run) -> int:
    bits = "".join(args.bits.split())
    try:
        if args.as_scheme:
            print(format_scheme(decode_scheme(bits)), end="")
        else:
            for tok in decode_sequence(bits):
                print(tok)
    except MalformedCode as exc:
        raise CliError(f"bits:1:{exc.offset + 1}: {exc.message}") from None
    return 0


# -- cu -------------------------------------------------------------------------------

def _program_arg(run: _Run, ref: str):
    if ref.startswith("@generator:"):
        text = ref
    else:
        text = run.read(ref)
    try:
        if ref.endswith(".asm"):
            text = isa.assemble(text)
        return load_program(text)
    except (KeyError, ValueError, IndexError) as exc:
        raise CliError(f"{ref}: {exc}") from None


def cmd_cu_run(args, run: _Run) -> int:
    program = _program_arg(run, args.program)
    res = cu_run(program, args.data, fuel=args.fuel, keep_trace=bool(args.trace))
    if args.trace:
        with run.open_out(args.trace) as fh:
            _jsonl_header(fh, "alpham.cutrace/1", data=args.data)
            for rec in res.trace:
                _jsonl(fh, rec.as_dict())
    if res.halted:
        print(f"output: {res.output}")
    elif res.stuck is not None:
        print(f"stuck after {res.steps} steps: {res.stuck}")
    else:
        print(f"undefined: no halt within {args.fuel} steps")
    if args.emit_pr:
        print(f"reduced program: {res.consumed_prefix}")
    return 0 if res.halted else 1


# -- alpha ----------------------------------------------------------------------------

def cmd_alpha_run(args, run: _Run) -> int:
    spec = _load_json(run, args.spec)
    try:
        machine = AlphaMachine.from_spec(spec)
    except (KeyError, ValueError) as exc:
        raise CliError(f"{args.spec}: {exc}") from None
    space = _load_space(run, args.events)
    if space is None and spec.get("events"):
        space = ProbabilitySpace.from_spec(spec["events"])
    run.seed = args.seed
    log = run_alpha(machine, fuel=args.fuel, space=space, rng=make_rng(args.seed))
    if args.trace:
        with run.open_out(args.trace) as fh:
            _jsonl_header(fh, "alpham.alphatrace/1", machine=machine.machine_id, seed=args.seed)
            for fx in log:
                _jsonl(fh, fx.as_dict())
    state = "halted" if machine.halted else (f"stuck: {machine.stuck}" if machine.stuck
                                             else f"running after {args.fuel} steps")
    print(f"{machine.machine_id}: {state}; steps {machine.steps}")
    print(f"result: {machine.output()}")
    print(f"work: {machine.work.word()}")
    return 0


# -- net ------------------------------------------------------------------------------

def cmd_net_run(args, run: _Run) -> int:
    spec = _load_json(run, args.spec)
    space = _load_space(run, args.events)
    try:
        net = Network.from_spec(spec, seed=args.seed, space=space)
    except (KeyError, ValueError) as exc:
        raise CliError(f"{args.spec}: {exc}") from None
    run.seed = net.seed
    rounds = run_network(net, args.rounds)
    if args.out:
        with run.open_out(args.out) as fh:
            dump_event_log(net, fh)
    conflicts = 0
    for rl in rounds:
        if rl.shared_ops and isinstance(serialize_check(rl.shared_ops), Conflict):
            conflicts += 1
    for mid, m in net.machines.items():
        state = "halted" if m.halted else ("stuck" if m.stuck else "running")
        print(f"{mid}: {state}; result {m.output()!r}; work {m.work.word()!r}")
    print(f"rounds {net.step}; messages {len(net.messages)}; "
          f"non-serializable rounds {conflicts}")
    return 0


# -- scenarios ------------------------------------------------------------------------

def cmd_boids(args, run: _Run) -> int:
    from .scenarios.boids import boids_run

    run.seed = args.seed
    res = boids_run(args.n, args.steps, seed=args.seed)
    metrics = args.metrics or str(Path(args.out).with_suffix("")) + ".metrics.csv"
    for path in (args.out, metrics):
        run.out_path(path)
    res.write_trace(args.out)
    res.write_metrics(metrics)
    first, last = res.mean_dist[0], res.mean_dist[-1]
    print(f"mean distance to barycenter: {first:.4f} -> {last:.4f} (ratio {last / first:.4f})")
    print(f"min pairwise distance, last step: {res.min_pair[-1]:.4f}")
    return 0


def cmd_genome(args, run: _Run) -> int:
    from .scenarios.genome import dna_to_bits, genetic_replicate, random_bits

    run.seed = args.seed
    if args.genome is not None:
        text = "".join(run.read(args.genome).split())
        genome = dna_to_bits(text) if set(text) - set("01") else text
    else:
        genome = random_bits(args.random, make_rng(args.seed))
    space = _load_space(run, args.events) or ProbabilitySpace.empty()
    try:
        lineage = genetic_replicate(genome, space, args.generations, seed=args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    with run.open_out(args.out) as fh:
        lineage.dump(fh, distances=len(lineage.generations) >= 2)
    for i, g in enumerate(lineage.generations[1:], 1):
        print(f"generation {i}: {len(g.events)} events, length {len(g.genome)}")
    return 0


# -- manifests ------------------------------------------------------------------------

def _manifest_path(argv: List[str], run: _Run) -> Path:
    if run.outputs:
        return Path(run.outputs[0] + ".manifest.json")
    digest = hashlib.sha256("\0".join(argv).encode()).hexdigest()[:12]
    name = "-".join(a for a in argv[:2] if not a.startswith("-"))
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / f"alpham-{name}-{digest}.manifest.json"


def _write_manifest(argv: List[str], run: _Run, stdout: str, code: int) -> Path:
    doc = {
        "schema": MANIFEST_SCHEMA,
        "version": __version__,
        "argv": argv,
        "cwd": os.getcwd(),
        "seed": run.seed,
        "exit_code": code,
        "inputs": {p: _sha256_file(p) for p in run.inputs},
        "outputs": {p: _sha256_file(p) for p in run.outputs},
        "stdout_sha256": hashlib.sha256(stdout.encode()).hexdigest(),
    }
    path = _manifest_path(argv, run)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def cmd_replay(args, run: _Run) -> int:
    try:
        doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot load manifest {args.manifest}: {exc}") from None
    if doc.get("schema") != MANIFEST_SCHEMA:
        raise CliError(f"{args.manifest}: not an alpham manifest")
    here = os.getcwd()
    os.chdir(doc["cwd"])
    try:
        for p, digest in doc["inputs"].items():
            if not Path(p).exists() or _sha256_file(p) != digest:
                print(f"input changed: {p}")
                return 1
        code, stdout, replayed = _execute(doc["argv"], manifest=False)
    finally:
        os.chdir(here)
    problems = []
    if code != doc["exit_code"]:
        problems.append(f"exit code {code} != {doc['exit_code']}")
    if hashlib.sha256(stdout.encode()).hexdigest() != doc["stdout_sha256"]:
        problems.append("stdout differs")
    for p, digest in doc["outputs"].items():
        got = replayed.get(p)
        if got != digest:
            problems.append(f"output differs: {p}")
    for line in problems:
        print(line)
    if not problems:
        print(f"replay identical: {len(doc['outputs'])} outputs, stdout, exit code {code}")
    return 1 if problems else 0


# -- parser ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="alpham", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"alpham {__version__}")
    p.add_argument("--no-manifest", action="store_true", help="do not write a run manifest")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tm = sub.add_parser("tm", help="particular Turing machines").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    t = tm.add_parser("run", help="run a scheme on a tape")
    t.add_argument("--scheme", required=True, help="scheme file, or @fig2 / @addition")
    t.add_argument("--tape", required=True, help="initial tape ('_' or 'Λ' for blank)")
    t.add_argument("--position", type=int, default=0)
    t.add_argument("--fuel", type=int, default=10_000)
    t.add_argument("--trace", help="JSONL trace path (default: $ALPHAM_OUT_DIR/tm.trace.jsonl)")
    t.set_defaults(func=cmd_tm_run)

    codec = sub.add_parser("codec", help="binary coding of schemes").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    c = codec.add_parser("encode", help="encode a scheme file")
    c.add_argument("--scheme", required=True)
    c.set_defaults(func=cmd_codec_encode)
    c = codec.add_parser("decode", help="decode a bit string into tokens")
    c.add_argument("--bits", required=True)
    c.add_argument("--as-scheme", action="store_true", help="decode a whole scheme")
    c.set_defaults(func=cmd_codec_decode)

    cu = sub.add_parser("cu", help="universal calculator").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    c = cu.add_parser("run", help="run a program on data")
    c.add_argument("--program", required=True,
                   help="file of bits, a .asm file, or @generator:<name>")
    c.add_argument("--data", default="")
    c.add_argument("--fuel", type=int, default=10_000)
    c.add_argument("--emit-pr", action="store_true", help="print the reduced program")
    c.add_argument("--trace")
    c.set_defaults(func=cmd_cu_run)

    al = sub.add_parser("alpha", help="single alpha-machine").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    a = al.add_parser("run", help="run a machine spec")
    a.add_argument("--spec", required=True)
    a.add_argument("--fuel", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--events", help="probability-space file")
    a.add_argument("--trace")
    a.set_defaults(func=cmd_alpha_run)

    net = sub.add_parser("net", help="networks of alpha-machines").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    n = net.add_parser("run", help="run a network spec")
    n.add_argument("--spec", required=True)
    n.add_argument("--rounds", type=int, default=100)
    n.add_argument("--seed", type=int, default=None, help="overrides the spec's seed")
    n.add_argument("--events", help="probability-space file")
    n.add_argument("--out", help="write the JSONL event log here")
    n.set_defaults(func=cmd_net_run)

    sc = sub.add_parser("scenario", help="demonstrations").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    b = sc.add_parser("boids", help="flocking run; CSV columns step,id,x,y,vx,vy")
    b.add_argument("--n", type=int, default=30)
    b.add_argument("--steps", type=int, default=2000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.add_argument("--metrics", help="metrics CSV (default: <out stem>.metrics.csv)")
    b.set_defaults(func=cmd_boids)
    g = sc.add_parser("genome", help="replication lineage with distance matrix")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--genome", help="file holding bits or A/C/G/T")
    src.add_argument("--random", type=int, metavar="L", help="random genome of L bits")
    g.add_argument("--events", help="probability-space file")
    g.add_argument("--generations", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_genome)

    r = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_replay)
    return p


def _execute(argv: List[str], manifest: bool = True):
    """Run one command; returns (exit code, stdout text, output digests)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    run = _Run()
    buf = io.StringIO()
    try:
        with contextlib.redirect_stdout(buf):
            code = args.func(args, run)
    except (CliError, TapeError, ValueError, LookupError) as exc:
        sys.stdout.write(buf.getvalue())
        print(f"alpham: {exc}", file=sys.stderr)
        return 1, buf.getvalue(), {}
    stdout = buf.getvalue()
    digests = {p: _sha256_file(p) for p in run.outputs}
    if manifest and args.command != "replay" and not args.no_manifest:
        _write_manifest(argv, run, stdout, code)
    return code, stdout, digests


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        code, stdout, _ = _execute(argv)
    except SystemExit as exc:  # argparse: usage errors and --help
        return int(exc.code or 0)
    sys.stdout.write(stdout)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
