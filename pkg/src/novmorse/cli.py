"""Command-line interface: ``novmorse <verb> ...``.

Exit status 0 on success, 1 when a verification fails, 2 on usage or
input errors.  ``--json`` output is pretty-printed with sorted keys.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .errors import HypothesisFailure, NovMorseError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _InputError(f"{self.prog}: {message}")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc.strerror}") from None


def _read_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise _InputError(f"{path}: invalid JSON ({exc})") from None


def _fraction(text: str) -> Fraction:
    from .novikov import to_fraction

    try:
        return to_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def _betti(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"betti numbers must be comma-separated integers: {text!r}") from None
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("betti numbers must be nonnegative")
    return vals


def _emit(doc, as_json: bool, text: str, out) -> None:
    if as_json:
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        out.write(text.rstrip("\n") + "\n")


# -- verbs -----------------------------------------------------------------------


def _cmd_homology(args, out) -> int:
    from .homology import betti, cubical_complex

    cx = cubical_complex(args.model, args.resolution)
    b = betti(cx)
    doc = {"model": args.model, "resolution": args.resolution, "cells": list(cx.cell_counts), "betti": list(b)}
    _emit(doc, args.json, f"model: {args.model}\ncells: {tuple(cx.cell_counts)}\nbetti: {tuple(b)}", out)
    return EXIT_OK


def _cmd_morse(args, out) -> int:
    from .homology import betti, cubical_complex
    from .morse import FlowConfig, build_morse_complex, count_connecting, find_critical_points, get_model

    cfg = FlowConfig.from_dict(_read_json(args.config)) if args.config else FlowConfig()
    model = get_model(args.model)
    crit = find_critical_points(model, cfg)
    cx = build_morse_complex(model, cfg)
    counts = []
    for p in crit:
        for q in crit:
            if p.index - q.index == 1:
                c = count_connecting(model, p, q, cfg)
                counts.append({"from": p.id, "to": q.id, "unsigned": c.unsigned, "signed": c.signed})
    b_morse = betti(cx)
    b_oracle = betti(cubical_complex(model))
    match = tuple(b_morse) == tuple(b_oracle)
    doc = {
        "model": model.name,
        "critical_points": [
            {"id": p.id, "index": p.index, "coords": [round(float(x), 12) for x in p.coords], "value": round(p.value, 12)}
            for p in crit
        ],
        "counts": counts,
        "complex": cx.to_json(),
        "betti": list(b_morse),
        "oracle_betti": list(b_oracle),
        "oracle_match": match,
    }
    lines = [f"model: {model.name}", "critical points:"]
    lines += [f"  {p.id}  index {p.index}  coords {tuple(round(float(x), 6) for x in p.coords)}" for p in crit]
    lines.append("counts (from -> to: unsigned, signed):")
    lines += [f"  {c['from']} -> {c['to']}: {c['unsigned']}, {c['signed']}" for c in counts]
    lines.append("differential:")
    lines += ["  " + " ".join(f"{x:>3}" for x in row) for row in doc["complex"]["differential"]]
    lines.append(f"betti: {tuple(b_morse)}")
    lines.append(f"oracle: {tuple(b_oracle)} ({'match' if match else 'MISMATCH'})")
    _emit(doc, args.json, "\n".join(lines), out)
    return EXIT_OK if match else EXIT_FAIL


def _cmd_invert(args, out) -> int:
    from .errors import SingularMatrix, ZeroInversion
    from .novikov import NovikovMatrix, format_fraction, mat_invert, mat_lemma22_check

    try:
        m = NovikovMatrix.from_json(_read_json(args.matrix))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise _InputError(f"{args.matrix}: malformed matrix ({exc})") from None
    lem = mat_lemma22_check(m)
    doc = {"cutoff": format_fraction(args.cutoff), "lemma22": lem.to_json()}
    try:
        inv = mat_invert(m, args.cutoff)
    except (SingularMatrix, ZeroInversion) as exc:
        doc.update(status="singular", error=str(exc))
        lines = [f"not invertible: {exc}"]
        lines += [f"  ({i}, {j}) T^{r}: {why}" for i, j, r, why in lem.violations]
        _emit(doc, args.json, "\n".join(lines), out)
        return EXIT_FAIL
    doc.update(status="invertible", inverse=inv.to_json())
    lines = [f"triangular invertibility: {'holds' if lem.holds else 'fails'}", f"inverse through T^{args.cutoff}:"]
    lines += ["  " + " | ".join(str(x) for x in row) for row in inv.entries]
    _emit(doc, args.json, "\n".join(lines), out)
    return EXIT_OK


def _load_counts(path):
    from .coherence import CountSystem

    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise _InputError(f"{path}: count system must be a JSON object")
    return CountSystem.from_json(doc)


def _cmd_verify(args, out) -> int:
    from .coherence import all_reports

    reports = all_reports(_load_counts(args.counts))
    ok = all(r.passed for r in reports)
    doc = {"status": "pass" if ok else "fail", "reports": [r.to_json() for r in reports]}
    _emit(doc, args.json, "\n".join(r.summary() for r in reports), out)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_arnold(args, out) -> int:
    from .coherence import run_pipeline

    s = _load_counts(args.counts)
    try:
        verdict = run_pipeline(s, args.betti, args.cutoff)
        failure = None
    except HypothesisFailure as exc:
        verdict, failure = exc.verdict, exc
    doc = verdict.to_json()
    lines = [f"{name}: {status}" for name, status, _ in verdict.stages]
    if failure is None:
        lines.append(f"bound: {verdict.bound}")
    else:
        doc["error"] = failure.message
        lines.append(f"failed at {failure.stage}: {failure.message}")
    _emit(doc, args.json, "\n".join(lines), out)
    return EXIT_OK if failure is None else EXIT_FAIL


def _cmd_mirror(args, out) -> int:
    from .coherence import morse_mirror
    from .morse import FlowConfig, build_morse_complex, get_model

    cfg = FlowConfig.from_dict(_read_json(args.config)) if args.config else FlowConfig()
    cx = build_morse_complex(get_model(args.model), cfg)
    out.write(morse_mirror(cx).dumps())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="novmorse", description="Novikov-field Morse complexes and coherence checks.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    h = sub.add_parser("homology", help="Betti numbers of a catalog model from its cubical complex")
    h.add_argument("model")
    h.add_argument("--resolution", type=int, default=1)
    h.add_argument("--json", action="store_true")
    h.set_defaults(fn=_cmd_homology)

    m = sub.add_parser("morse", help="numerical Morse complex of a catalog model")
    m.add_argument("model")
    m.add_argument("--config", help="JSON file with FlowConfig overrides")
    m.add_argument("--json", action="store_true")
    m.set_defaults(fn=_cmd_morse)

    n = sub.add_parser("novikov-invert", help="invert a Novikov matrix through a cutoff")
    n.add_argument("--matrix", required=True)
    n.add_argument("--cutoff", type=_fraction, required=True)
    n.add_argument("--json", action="store_true")
    n.set_defaults(fn=_cmd_invert)

    v = sub.add_parser("verify", help="check the boundary identities of a count system")
    v.add_argument("--counts", required=True)
    v.add_argument("--json", action="store_true")
    v.set_defaults(fn=_cmd_verify)

    a = sub.add_parser("arnold", help="run the full Arnold-bound pipeline")
    a.add_argument("--counts", required=True)
    a.add_argument("--betti", type=_betti, required=True)
    a.add_argument("--cutoff", type=_fraction, required=True)
    a.add_argument("--json", action="store_true")
    a.set_defaults(fn=_cmd_arnold)

    r = sub.add_parser("mirror", help="mirror count system of a catalog model")
    r.add_argument("model")
    r.add_argument("--config", help="JSON file with FlowConfig overrides")
    r.set_defaults(fn=_cmd_mirror)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.verb == "homology" and args.resolution < 1:
            raise _InputError("--resolution must be positive")
        return args.fn(args, out)
    except _InputError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (NovMorseError, ValueError) as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
