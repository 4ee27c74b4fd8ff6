"""Command-line entry point.

Exit codes: 0 on success, 2 for bad arguments (caught before any heavy
computation), 1 when a computation fails.  Commands that write a data file
with ``--out`` also write ``<stem>.manifest.json`` next to it; ``replay``
re-runs a manifest.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from typing import Callable

from . import __version__
from .boxes import (EPS_PROB, CROSS_SECTIONS, ExtremalIndex, InvalidBoxError, box_from_json,
                    box_to_json, check, chsh, chsh2, cs_point, validate)
from .distill import TRIVIAL_CC_THRESHOLD, AlgorithmConfig, certify_trivial_cc, distill
from .optimize import TIE_TOL, brute_force_two_copy, count_pr_preserving, sweep_two_copy
from .protocols import PROTOCOL_NAMES, named_protocol, truth_table
from .scan import (CURVES, GAIN_TOL, ScanRequest, boundary, boundary_zero_gain_check,
                   run_scan)
from .wirings import EPS_LP


class ArgumentError(ValueError):
    """Bad user input detected before computing."""


ENDPOINT_SNAP = 1e-4
TOLERANCES = {"prob": EPS_PROB, "lp": EPS_LP, "tie": TIE_TOL, "gain": GAIN_TOL}


def _threads(n):
    return n if n else (os.cpu_count() or 1)


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        _write_manifest(args, args.out)
    else:
        print(text)


def _write_manifest(args, data_path: str, extra: dict | None = None) -> None:
    man = {"command": args.command, "argv": args.argv, "parameters": _params(args),
           "tolerances": TOLERANCES, "version": __version__,
           "data": os.path.basename(data_path), **(extra or {})}
    with open(os.path.splitext(data_path)[0] + ".manifest.json", "w") as fh:
        json.dump(man, fh, indent=2)


def _params(args) -> dict:
    skip = {"func", "argv", "prepare"}
    return {k: v for k, v in vars(args).items() if k not in skip}


# box sources


def _add_box_source(p: argparse.ArgumentParser, second: bool = False) -> None:
    p.add_argument("--cs", choices=CROSS_SECTIONS, help="cross-section of the point")
    p.add_argument("--eta", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--box", help="box JSON file (rows 2x+y, columns 2a+b)")
    if second:
        p.add_argument("--box2", help="second box JSON file (defaults to the first box)")


def _load_box(path: str):
    try:
        with open(path) as fh:
            return check(box_from_json(fh.read()))
    except OSError as exc:
        raise ArgumentError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ArgumentError(f"{path}: {exc}") from None


def _box_from_args(args):
    if args.box:
        if args.cs or args.eta is not None or args.omega is not None:
            raise ArgumentError("give either --box or --cs/--eta/--omega, not both")
        return _load_box(args.box)
    if not args.cs or args.eta is None or args.omega is None:
        raise ArgumentError("a box needs --box FILE or all of --cs, --eta, --omega")
    try:
        return cs_point(args.cs, args.eta, args.omega)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None


def _point_info(args) -> dict:
    if args.box:
        return {"box_file": args.box}
    return {"cs": args.cs, "eta": args.eta, "omega": args.omega}


# commands; each prepare() validates and returns a zero-argument runner


def prep_box(args) -> Callable[[], int]:
    if args.extremal:
        kind = "NL" if args.extremal.upper().startswith("NL") else "L"
        try:
            idx = int(args.extremal[len(kind):])
            box = ExtremalIndex(kind, idx).box()
        except ValueError as exc:
            raise ArgumentError(f"bad --extremal {args.extremal!r}: {exc}") from None
        info = {"extremal": f"{kind}{idx}"}
    else:
        box = _box_from_args(args)
        info = _point_info(args)

    def run():
        rep = validate(box)
        _emit(args, {**info, "box": json.loads(box_to_json(box)), "chsh": chsh(box),
                     "chsh2": chsh2(box), "valid": rep.ok, "worst_violation": rep.worst})
        return 0
    return run


def prep_protocols(args) -> Callable[[], int]:
    if args.show and args.show.upper() not in PROTOCOL_NAMES:
        raise ArgumentError(f"unknown protocol {args.show!r}; choose from {', '.join(PROTOCOL_NAMES)}")

    def run():
        if not args.show:
            for name in PROTOCOL_NAMES:
                print(f"{name}\t{named_protocol(name).n} copies")
            return 0
        proto = named_protocol(args.show)
        _emit(args, {"name": proto.name, "n": proto.n,
                     "alice": truth_table(proto.alice), "bob": truth_table(proto.bob)})
        return 0
    return run


def _protocol_arg(name: str) -> str:
    if name.upper() not in PROTOCOL_NAMES:
        raise ArgumentError(f"unknown protocol {name!r}; choose from {', '.join(PROTOCOL_NAMES)}")
    return name.upper()


def prep_apply(args) -> Callable[[], int]:
    name = _protocol_arg(args.protocol)
    box = _box_from_args(args)

    def run():
        out = named_protocol(name).apply(box)
        _emit(args, {**_point_info(args), "protocol": name, "chsh_before": chsh(box),
                     "chsh_after": chsh(out), "box": json.loads(box_to_json(out))})
        return 0
    return run


def prep_optimize2(args) -> Callable[[], int]:
    q1 = _box_from_args(args)
    q2 = _load_box(args.box2) if args.box2 else q1
    threads = _threads(args.threads)

    def run():
        if args.method == "vertex":
            res = brute_force_two_copy(q1, q2)
        else:
            res = sweep_two_copy(q1, q2, workers=threads)
        payload = {**_point_info(args), "method": args.method, "chsh_init": chsh(q1),
                   **res.to_json()}
        if args.box2:
            payload["box2_file"] = args.box2
        _emit(args, payload)
        return 0
    return run


def _distill_prep(architecture: str):
    def prep(args) -> Callable[[], int]:
        box = _box_from_args(args)
        protocol = _protocol_arg(args.protocol) if architecture == "repeat" else None
        try:
            cfg = AlgorithmConfig(architecture, protocol, args.rounds, args.tol, args.target,
                                  getattr(args, "method", "lp"), _threads(args.threads))
        except ValueError as exc:
            raise ArgumentError(str(exc)) from None

        def run():
            if args.certify:
                res = certify_trivial_cc(box, cfg)
                payload = res.to_json()
            else:
                payload = distill(box, cfg).to_json()
            _emit(args, {**_point_info(args), **payload})
            return 0
        return run
    return prep


_SCAN_KEYS = {"cs": str, "resolution": int, "protocols": str, "eta_range": str,
              "omega_range": str, "chsh2": str, "method": str, "out": str, "threads": int}


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cp.read_string("[scan]\n" + fh.read())
    except OSError as exc:
        raise ArgumentError(f"cannot read {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ArgumentError(f"{path}: {exc}") from None
    out = {}
    for key, raw in cp["scan"].items():
        key = key.replace("-", "_")
        if key not in _SCAN_KEYS:
            raise ArgumentError(f"{path}: unknown key {key!r}")
        try:
            out[key] = _SCAN_KEYS[key](raw)
        except ValueError:
            raise ArgumentError(f"{path}: bad value for {key}: {raw!r}") from None
    return out


def _range(text: str, what: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise ArgumentError(f"{what} must be 'lo,hi'") from None
    return lo, hi


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def prep_scan(args) -> Callable[[], int]:
    conf = read_config(args.config) if args.config else {}
    for key in _SCAN_KEYS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            conf[key] = flag
    if "cs" not in conf or "out" not in conf:
        raise ArgumentError("scan needs a cross-section (--cs) and an output CSV (--out)")
    try:
        req = ScanRequest(
            cs_id=conf["cs"],
            resolution=int(conf.get("resolution", 201)),
            protocols=tuple(t.strip() for t in conf.get("protocols", "SWEEP2").split(";")
                            if t.strip()),
            eta_range=_range(conf.get("eta_range", "0,1"), "eta range"),
            omega_range=_range(conf.get("omega_range", "0,1"), "omega range"),
            include_chsh2=_bool(conf.get("chsh2", False)),
            sweep_method=conf.get("method", "lp"),
        )
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None
    threads = _threads(conf.get("threads"))
    out = conf["out"]

    def run():
        man = run_scan(req, out, workers=threads)
        # fold the CLI view into the scan manifest so replay works
        man_path = os.path.splitext(out)[0] + ".manifest.json"
        man.update({"command": "scan", "argv": args.argv, "threads": threads})
        with open(man_path, "w") as fh:
            json.dump(man, fh, indent=2)
        print(json.dumps({"csv": out, "manifest": man_path, "rows": req.resolution ** 2,
                          "wall_time_s": man["wall_time_s"]}))
        return 0
    return run


def prep_census(args) -> Callable[[], int]:
    def run():
        print(count_pr_preserving())
        return 0
    return run


def prep_boundary(args) -> Callable[[], int]:
    name = args.curve.upper()
    if name not in CURVES:
        raise ArgumentError(f"unknown curve {args.curve!r}; choose from {', '.join(CURVES)}")
    if args.check:
        if args.samples < 1:
            raise ArgumentError("--samples must be at least 1")

        def run():
            _emit(args, {"curve": name, "samples": args.samples,
                         "max_residual": boundary_zero_gain_check(name, args.samples)})
            return 0
        return run
    if args.eta is None:
        raise ArgumentError("boundary needs --eta or --check")
    eta = args.eta
    # endpoints typed to four decimals (2/3 as 0.6667) snap onto the domain
    for end in CURVES[name].domain:
        if abs(eta - end) <= ENDPOINT_SNAP:
            eta = end
    try:
        omega = boundary(name, eta)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None

    def run():
        _emit(args, {"curve": name, "eta": args.eta, "eta_used": eta, "omega": omega})
        return 0
    return run


def prep_replay(args) -> Callable[[], int]:
    try:
        with open(args.manifest) as fh:
            argv = json.load(fh)["argv"]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ArgumentError(f"cannot replay {args.manifest}: {exc}") from None
    if argv and argv[0] == "replay":
        raise ArgumentError("refusing to replay a replay")
    return lambda: main(argv)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonlocal-distill",
                                 description="Nonlocality distillation by wirings.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def out_arg(p):
        p.add_argument("--out", help="write JSON here (plus a manifest) instead of stdout")

    p = sub.add_parser("box", help="construct, validate and score a box")
    _add_box_source(p)
    p.add_argument("--extremal", help="an extremal vertex such as L6 or NL1")
    out_arg(p)
    p.set_defaults(prepare=prep_box)

    p = sub.add_parser("protocols", help="list named protocols or show one's tables")
    p.add_argument("--show", metavar="NAME")
    out_arg(p)
    p.set_defaults(prepare=prep_protocols)

    p = sub.add_parser("apply", help="apply a named protocol to identical copies")
    p.add_argument("--protocol", required=True)
    _add_box_source(p)
    out_arg(p)
    p.set_defaults(prepare=prep_apply)

    p = sub.add_parser("optimize2", help="optimal two-copy wiring for a box pair")
    _add_box_source(p, second=True)
    p.add_argument("--method", choices=("lp", "vertex"), default="lp")
    p.add_argument("--threads", type=int, default=None)
    out_arg(p)
    p.set_defaults(prepare=prep_optimize2)

    for arch in ("serial", "parallel", "repeat"):
        p = sub.add_parser(arch, help=f"{arch} distillation")
        _add_box_source(p)
        if arch == "repeat":
            p.add_argument("--protocol", required=True)
        else:
            p.add_argument("--method", choices=("lp", "vertex"), default="lp")
        p.add_argument("--rounds", type=int, default=50)
        p.add_argument("--tol", type=float, default=1e-9, help="minimal improvement per round")
        p.add_argument("--target", type=float, default=None, help="stop once CHSH exceeds this")
        p.add_argument("--certify", action="store_true",
                       help=f"stop at the trivial-CC threshold {TRIVIAL_CC_THRESHOLD:.6f}")
        p.add_argument("--threads", type=int, default=None)
        out_arg(p)
        p.set_defaults(prepare=_distill_prep(arch))

    p = sub.add_parser("scan", help="region scan of a cross-section to CSV")
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    p.add_argument("--cs", choices=CROSS_SECTIONS)
    p.add_argument("--resolution", type=int)
    p.add_argument("--protocols", help="';'-separated tokens, e.g. 'SWEEP2;EQ2;REPEAT(ABL1,4)'")
    p.add_argument("--eta-range", dest="eta_range", help="lo,hi")
    p.add_argument("--omega-range", dest="omega_range", help="lo,hi")
    p.add_argument("--chsh2", action="store_true", default=None)
    p.add_argument("--method", choices=("lp", "vertex"))
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="CSV path")
    p.set_defaults(prepare=prep_scan)

    p = sub.add_parser("census", help="count PR-preserving two-copy wirings")
    p.set_defaults(prepare=prep_census)

    p = sub.add_parser("boundary", help="evaluate an analytic zero-gain curve")
    p.add_argument("--curve", required=True, help=", ".join(CURVES))
    p.add_argument("--eta", type=float)
    p.add_argument("--check", action="store_true", help="report the max zero-gain residual")
    p.add_argument("--samples", type=int, default=100)
    out_arg(p)
    p.set_defaults(prepare=prep_boundary)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(prepare=prep_replay)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        runner = args.prepare(args)
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return runner()
    except (InvalidBoxError, ArithmeticError, RuntimeError, ValueError, OSError) as exc:
        print(f"error: computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
