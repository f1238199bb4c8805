"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 data error.

Every command that writes an output directory also writes ``manifest.json``;
``bellstreams rerun <manifest> --out DIR`` replays it.
"""

from __future__ import annotations

import argparse
import math
import shlex
import sys
import time
from pathlib import Path

from . import __version__
from .cascade import CascadeConfig, cascade_correlations, sample_cascade, spots_roundtrip
from .core_streams import (
    AlignedSet,
    Provenance,
    StreamError,
    correlation,
    correlations_to_dict,
    eval_inequality3,
    eval_inequality4,
)
from .feasibility import angle_violation_scan
from .matching import MatchError, build_quadruple, build_triple, overdetermination_report
from .singlet_source import PairRun, SourceConfig, marginal_check, run_from_streams, sample_run
from .streamio import (
    StreamFormatError,
    dumps,
    parse_seed,
    read_json,
    read_stream,
    stream_filename,
    write_json,
    write_stream,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3
MANIFEST = "manifest.json"
RUN_SIDECAR = "run.json"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _angle(text: str, deg: bool) -> float:
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"angle {text!r} is not a number") from None
    if not math.isfinite(value):
        raise UsageError(f"angle {text!r} is not finite")
    return math.radians(value) if deg else value


def _seed(text: str) -> int:
    try:
        return parse_seed(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _n(value: int) -> int:
    if value < 1:
        raise UsageError(f"--n must be >= 1, got {value}")
    return value


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    return out


def _write_manifest(out: Path, command: str, argv: list[str], config: dict, seeds: list[int],
                    inputs: list[str], outputs: list[str], started: float) -> None:
    write_json(out / MANIFEST, {
        "command": command,
        "argv": argv,
        "config": config,
        "seeds": seeds,
        "inputs": inputs,
        "outputs": sorted(outputs),
        "artifact_version": __version__,
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
    })


def write_run(out: Path, run: PairRun) -> list[str]:
    files = []
    for stream in (run.left, run.right):
        name = stream_filename(stream.label)
        write_stream(out / name, stream, run.config.seed)
        files.append(name)
    write_json(out / RUN_SIDECAR, {
        "config": run.config.to_dict(),
        "files": {"left": files[0], "right": files[1]},
        "correlation": correlations_to_dict({"".join(run.labels): correlation(run.left, run.right)}),
        "marginals": marginal_check(run),
    })
    return files + [RUN_SIDECAR]


def read_run(path: str | Path) -> PairRun:
    """Load a run directory written by ``simulate`` (or any two stream files + run.json)."""
    d = Path(path)
    if not d.is_dir():
        raise DataError(f"{d} is not a run directory")
    sidecar = d / RUN_SIDECAR
    if sidecar.exists():
        meta = read_json(sidecar)
        left, seed = read_stream(d / meta["files"]["left"])
        right, _ = read_stream(d / meta["files"]["right"])
    else:
        files = sorted(d.glob("*.stream"))
        if len(files) != 2:
            raise DataError(f"{d}: expected two .stream files, found {len(files)}")
        (left, seed), (right, _) = (read_stream(f) for f in files)
        if left.label.startswith("b"):
            left, right = right, left
    if len(left) != len(right):
        raise DataError(f"{d}: left and right streams differ in length ({len(left)} vs {len(right)})")
    return run_from_streams(left, right, seed or 0)


def cmd_simulate(args, argv) -> int:
    started = time.perf_counter()
    config = SourceConfig(
        n_pairs=_n(args.n),
        theta_left=_angle(args.theta_left, args.deg),
        theta_right=_angle(args.theta_right, args.deg),
        seed=_seed(args.seed),
        label_left=args.label_left,
        label_right=args.label_right,
    )
    out = _out_dir(args.out)
    run = sample_run(config)
    files = write_run(out, run)
    _write_manifest(out, "simulate", argv, config.to_dict(), [config.seed], [], files, started)
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def cmd_cascade(args, argv) -> int:
    started = time.perf_counter()
    config = CascadeConfig(
        n_pairs=_n(args.n),
        theta_a=_angle(args.theta_a, args.deg),
        theta_a_prime=_angle(args.theta_ap, args.deg),
        theta_b=_angle(args.theta_b, args.deg),
        theta_b_prime=_angle(args.theta_bp, args.deg),
        seed=_seed(args.seed),
    )
    out = _out_dir(args.out)
    run = sample_cascade(config)
    files = []
    for stream in run.aligned:
        name = stream_filename(stream.label)
        write_stream(out / name, stream, config.seed)
        files.append(name)
    with open(out / "spots.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("pair_index,left_spot,right_spot\n")
        for i, (l, r) in enumerate(zip(run.left_spots.tolist(), run.right_spots.tolist())):
            fh.write(f"{i},{l},{r}\n")
    report = cascade_correlations(run).to_dict()
    report["spots_roundtrip"] = spots_roundtrip(run)
    write_json(out / "report.json", report)
    files += ["spots.csv", "report.json"]
    _write_manifest(out, "cascade", argv, config.to_dict(), [config.seed], [], files, started)
    print(f"CHSH lhs {report['chsh_empirical']['lhs']:.6f} (identity holds: {report['identity4']['holds']})")
    return EXIT_OK


def cmd_match(args, argv) -> int:
    started = time.perf_counter()
    if not 2 <= len(args.runs) <= 4:
        raise UsageError("match takes 2 to 4 run directories")
    runs = [read_run(r) for r in args.runs]
    out = _out_dir(args.out)
    try:
        if len(runs) == 2:
            result = build_triple(*runs)
        else:
            result = build_quadruple(*runs[:3], order=args.order)
    except MatchError as exc:
        raise DataError(str(exc)) from None
    files = []
    report: dict = {"match": result.to_dict(include_permutation=False)}
    if result.aligned is not None:
        for stream in result.aligned:
            name = stream_filename(stream.label)
            write_stream(out / name, stream)
            files.append(name)
        write_json(out / "identity.json", result.identity.to_dict())
        files.append("identity.json")
        report["inequality"] = _inequality_block(result.aligned)
    if len(runs) == 4:
        if result.aligned is None:
            raise DataError("quadruple match is degenerate; no overdetermination report")
        try:
            report["overdetermination"] = overdetermination_report(result, runs[3]).to_dict()
        except MatchError as exc:
            raise DataError(str(exc)) from None
    write_json(out / "match.json", result.to_dict(include_permutation=True))
    write_json(out / "report.json", report)
    files += ["match.json", "report.json"]
    seeds = [r.config.seed for r in runs]
    inputs = [str(Path(r).resolve()) for r in args.runs]
    replay = ["match", *inputs, "--order", args.order, "--out", args.out]
    _write_manifest(out, "match", replay, {"order": args.order, "n_runs": len(runs)}, seeds,
                    inputs, files, started)
    print(f"retained {result.retained} pairs (fraction {result.retention_fraction:.6f})"
          + ("" if result.identity is None else f"; {result.identity.kind} holds: {result.identity.holds}"))
    return EXIT_OK


def _inequality_block(aligned: AlignedSet) -> dict:
    c = {k: v.value for k, v in aligned.correlations().items()}
    if not aligned.is_triple:
        return {"chsh": eval_inequality4(c["ab"], c["ab'"], c["a'b"], c["a'b'"]).to_dict()}
    if "b'" in aligned:
        return {"three": eval_inequality3(c["ab"], c["ab'"], c["bb'"]).to_dict()}
    # Mirror triple (a, a', b): b is the common factor.
    return {"three": eval_inequality3(c["ab"], c["a'b"], c["aa'"]).to_dict()}


def cmd_verify(args, argv) -> int:
    if len(args.files) not in (3, 4):
        raise UsageError("verify takes 3 or 4 stream files")
    streams = [read_stream(f)[0] for f in args.files]
    lengths = [len(s) for s in streams]
    if len(set(lengths)) != 1:
        raise DataError(f"stream lengths differ: {dict(zip(args.files, lengths))}")
    try:
        aligned = AlignedSet(streams, Provenance.SIMULATED_JOINTLY)
    except StreamError as exc:
        raise DataError(str(exc)) from None
    verdict = aligned.identity()
    report = {
        "files": list(args.files),
        "labels": list(aligned.labels),
        "n": aligned.n,
        "identity": verdict.to_dict(),
        "correlations": correlations_to_dict(aligned.correlations()),
        "inequality": _inequality_block(aligned),
    }
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_scan(args, argv) -> int:
    started = time.perf_counter()
    if args.resolution < 2:
        raise UsageError(f"--resolution must be >= 2 degrees, got {args.resolution}")
    try:
        vmap = angle_violation_scan(args.resolution, args.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args.out)
    csv_name = f"scan_{args.mode}.csv"
    vmap.write_csv(out / csv_name)
    summary = vmap.summary()
    write_json(out / "summary.json", summary)
    _write_manifest(out, "scan", argv, {"mode": args.mode, "resolution_deg": args.resolution}, [], [],
                    [csv_name, "summary.json"], started)
    print(f"max lhs {summary['max_lhs']:.6f} at {summary['argmax_lhs_deg']}")
    return EXIT_OK


def cmd_rerun(args, argv) -> int:
    manifest = read_json(args.manifest)
    old = manifest.get("argv")
    if not old:
        raise DataError(f"{args.manifest} has no argv")
    new = list(old)
    # Replace the output directory; inputs stay as recorded.
    if "--out" in new:
        new[new.index("--out") + 1] = args.out
    else:
        new += ["--out", args.out]
    print("rerun:", shlex.join(new))
    return main(new)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bellstreams", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="sample one singlet run")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--theta-left", required=True)
    s.add_argument("--theta-right", required=True)
    s.add_argument("--label-left", default="a", choices=["a", "a'", "ap"])
    s.add_argument("--label-right", default="b", choices=["b", "b'", "bp"])
    s.add_argument("--deg", action="store_true", help="angles in degrees (default radians)")
    s.add_argument("--seed", default="0", help="decimal or 0x-hex")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("match", help="align 2-4 runs by data matching")
    m.add_argument("runs", nargs="+", help="run dirs: (a,b) (a,b') [(a',b) [(a',b')]]")
    m.add_argument("--order", default="a-first", choices=["a-first", "b-first"])
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_match)

    c = sub.add_parser("cascade", help="sample the two-stage apparatus")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--theta-a", required=True)
    c.add_argument("--theta-ap", required=True)
    c.add_argument("--theta-b", required=True)
    c.add_argument("--theta-bp", required=True)
    c.add_argument("--deg", action="store_true")
    c.add_argument("--seed", default="0")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_cascade)

    v = sub.add_parser("verify", help="check Bell identities on 3 or 4 stream files")
    v.add_argument("files", nargs="+")
    v.add_argument("--out", help="also write the JSON report here")
    v.set_defaults(func=cmd_verify)

    sc = sub.add_parser("scan", help="map where -cos correlations are unrealizable")
    sc.add_argument("--mode", choices=["triple", "quadruple"], default="triple")
    sc.add_argument("--resolution", type=float, required=True, help="grid step in degrees")
    sc.add_argument("--deg", action="store_true", help="accepted for symmetry; the step is always degrees")
    sc.add_argument("--out", required=True)
    sc.set_defaults(func=cmd_scan)

    r = sub.add_parser("rerun", help="replay a manifest into a new output directory")
    r.add_argument("manifest")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_rerun)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, StreamFormatError, StreamError, FileNotFoundError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
