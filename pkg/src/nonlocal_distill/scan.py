"""Region scans over cross-sections and the analytic two-copy curves.

Protocol tokens accepted by :class:`ScanRequest`:

* ``FWW``, ``ABL1``, ``ABL2``, ``EQ2``, ``EQ3``, ``EQ4``, ``HR``: one application
  to identical copies;
* ``SWEEP2``: optimal two-copy value;
* ``SERIAL(k)``, ``PARALLEL(k)``: best value of the sequential algorithm within k rounds;
* ``REPEAT(NAME,k)``: best value of k-fold repetition of a named protocol.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .boxes import CROSS_SECTIONS, EPS_PROB, chsh, chsh2, cs_point
from .distill import AlgorithmConfig, distill
from .optimize import brute_force_two_copy, sweep_two_copy
from .protocols import PROTOCOL_NAMES, named_protocol

GAIN_TOL = 1e-9
SQRT3 = math.sqrt(3)
SQRT6 = math.sqrt(6)
SQRT13 = math.sqrt(13)


@dataclass(frozen=True)
class BoundaryCurve:
    name: str
    domain: tuple[float, float]
    evaluator: Callable[[float], float] = field(repr=False)
    cs_id: str = "I"

    def __call__(self, eta: float) -> float:
        lo, hi = self.domain
        if not lo - 1e-12 <= eta <= hi + 1e-12:
            raise ValueError(f"eta={eta} outside the domain [{lo}, {hi}] of {self.name}")
        return self.evaluator(eta)


CURVES = {
    c.name: c for c in (
        BoundaryCurve("FWW_I", (0.5, 1.0),
                      lambda e: 1 - 3 * e + 2 * math.sqrt(1 - 3 * e + 3 * e * e), "I"),
        BoundaryCurve("ABL1_I", (0.0, 1.0),
                      lambda e: -e + math.sqrt(3 - 4 * e + 4 * e * e) / SQRT3, "I"),
        BoundaryCurve("ABL2_II", (1 / 3, 1.0),
                      lambda e: 3 - 11 * e + 2 * math.sqrt(3 - 18 * e + 31 * e * e), "II"),
        BoundaryCurve("ABL1_II", (0.0, 1.0),
                      lambda e: -4 / 3 * e + math.sqrt(9 - 18 * e + 25 * e * e) / 3, "II"),
        BoundaryCurve("CHORD_I", (0.5 * (1 + 1 / SQRT13), 2 / 3), lambda e: 5 * e - 3, "I"),
        BoundaryCurve("CHORD_II", ((9 + SQRT6) / 25, 1.0),
                      lambda e: -(2 * SQRT6 - 3) / 5 * (e - 1), "II"),
    )
}

# closed-form distilled CHSH of the protocol on its cross-section
CLOSED_FORMS: dict[str, Callable[[float, float], float]] = {
    "FWW_I": lambda e, w: 0.5 * ((1 + w) ** 2 - 3 * e * e + 6 * e * (1 + w)),
    "ABL1_I": lambda e, w: 0.25 * (3 * w * w + 8 * w - e * e + e * (4 + 6 * w) + 5),
    "ABL2_II": lambda e, w: 0.125 * (w * w + 10 * w - 3 * e * e + e * (6 + 22 * w) + 13),
    "ABL1_II": lambda e, w: 0.25 * (3 * w * w + 8 * w - 3 * e * e + e * (6 + 8 * w) + 5),
}

# the two protocols that tie on each chord
CHORD_PAIRS = {"CHORD_I": ("FWW_I", "ABL1_I"), "CHORD_II": ("ABL2_II", "ABL1_II")}

# closed-form key -> (cross-section, protocol)
CLOSED_FORM_PROTOCOL = {"FWW_I": ("I", "FWW"), "ABL1_I": ("I", "ABL1"),
                        "ABL2_II": ("II", "ABL2"), "ABL1_II": ("II", "ABL1")}


def boundary(name: str, eta: float) -> float:
    try:
        curve = CURVES[name.upper()]
    except KeyError:
        raise ValueError(f"unknown curve {name!r}; choose from {', '.join(CURVES)}") from None
    return curve(eta)


def closed_form_chsh(protocol: str, eta: float, omega: float) -> float:
    try:
        f = CLOSED_FORMS[protocol.upper()]
    except KeyError:
        raise ValueError(f"unknown closed form {protocol!r}; choose from {', '.join(CLOSED_FORMS)}") from None
    if eta < 0 or omega < 0 or eta + omega > 1 + EPS_PROB:
        raise ValueError(f"({eta}, {omega}) is not a valid cross-section point")
    return f(eta, omega)


def boundary_zero_gain_check(name: str, samples: int = 100) -> float:
    """Max residual of the defining identity along a curve.

    Protocol curves: |closed form - (2 + 2 omega)|.  Chords: difference of
    the two tied closed forms.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    name = name.upper()
    curve = CURVES.get(name)
    if curve is None:
        raise ValueError(f"unknown curve {name!r}")
    etas = np.linspace(*curve.domain, samples) if samples > 1 else [curve.domain[0]]
    worst = 0.0
    for eta in etas:
        w = curve(eta)
        if name in CHORD_PAIRS:
            f, g = (CLOSED_FORMS[k] for k in CHORD_PAIRS[name])
            r = abs(f(eta, w) - g(eta, w))
        else:
            r = abs(CLOSED_FORMS[name](eta, w) - (2 + 2 * w))
        worst = max(worst, r)
    return worst


_TOKEN = re.compile(r"^(?P<kind>SERIAL|PARALLEL)\((?P<k>\d+)\)$|^REPEAT\((?P<proto>\w+),(?P<rk>\d+)\)$")


def parse_token(tok: str) -> tuple:
    t = tok.strip().upper().replace(" ", "")
    if t in PROTOCOL_NAMES or t == "SWEEP2":
        return (t,)
    m = _TOKEN.match(t)
    if not m:
        raise ValueError(f"unrecognized protocol token {tok!r}")
    if m.group("kind"):
        return (m.group("kind"), int(m.group("k")))
    named_protocol(m.group("proto"))
    return ("REPEAT", m.group("proto"), int(m.group("rk")))


@dataclass(frozen=True)
class ScanRequest:
    cs_id: str
    resolution: int = 201
    protocols: tuple[str, ...] = ("SWEEP2",)
    eta_range: tuple[float, float] = (0.0, 1.0)
    omega_range: tuple[float, float] = (0.0, 1.0)
    include_chsh2: bool = False
    sweep_method: str = "lp"

    def __post_init__(self):
        if self.cs_id not in CROSS_SECTIONS:
            raise ValueError(f"unknown cross-section {self.cs_id!r}")
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if not self.protocols:
            raise ValueError("at least one protocol is required")
        for tok in self.protocols:
            parse_token(tok)
        if self.sweep_method not in ("lp", "vertex"):
            raise ValueError("sweep_method must be 'lp' or 'vertex'")

    def grid(self) -> list[tuple[float, float, bool]]:
        """(eta, omega, valid) in row-major order (eta outer)."""
        n = self.resolution
        pts = []
        default = self.eta_range == (0.0, 1.0) and self.omega_range == (0.0, 1.0)
        for i in range(n):
            eta = self.eta_range[0] + (self.eta_range[1] - self.eta_range[0]) * i / (n - 1)
            for j in range(n):
                omega = self.omega_range[0] + (self.omega_range[1] - self.omega_range[0]) * j / (n - 1)
                valid = (i + j <= n - 1) if default else (eta + omega <= 1 + 1e-12)
                pts.append((eta, omega, valid))
        return pts


def evaluate_token(tok: str, box, sweep_method: str = "lp") -> float:
    parsed = parse_token(tok)
    kind = parsed[0]
    if kind in PROTOCOL_NAMES:
        return chsh(named_protocol(kind).apply(box))
    if kind == "SWEEP2":
        if sweep_method == "vertex":
            return brute_force_two_copy(box, box).best_value
        return sweep_two_copy(box, box).best_value
    if kind == "REPEAT":
        cfg = AlgorithmConfig("repeat", protocol=parsed[1], max_rounds=parsed[2])
    else:
        cfg = AlgorithmConfig(kind.lower(), max_rounds=parsed[1], method=sweep_method)
    return distill(box, cfg).best


def _scan_point(args) -> dict:
    req, eta, omega, valid = args
    row = {"cs": req.cs_id, "eta": eta, "omega": omega}
    if not valid:
        row["chsh_init"] = None
        for tok in req.protocols:
            row[f"{tok}_after"] = None
            row[f"{tok}_flag"] = None
        if req.include_chsh2:
            row["chsh2"] = None
        row["masked"] = 1
        return row
    box = cs_point(req.cs_id, eta, omega)
    init = chsh(box)
    row["chsh_init"] = init
    for tok in req.protocols:
        after = evaluate_token(tok, box, req.sweep_method)
        row[f"{tok}_after"] = after
        row[f"{tok}_flag"] = int(after > init + GAIN_TOL)
    if req.include_chsh2:
        row["chsh2"] = chsh2(box)
    row["masked"] = 0
    return row


def scan_region(req: ScanRequest, workers: int = 1) -> list[dict]:
    """Evaluate every grid point; rows come back in grid order."""
    jobs = [(req, e, w, v) for e, w, v in req.grid()]
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_scan_point, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    return [_scan_point(j) for j in jobs]


def columns(req: ScanRequest) -> list[str]:
    cols = ["cs", "eta", "omega", "chsh_init"]
    for tok in req.protocols:
        cols += [f"{tok}_after", f"{tok}_flag"]
    if req.include_chsh2:
        cols.append("chsh2")
    return cols + ["masked"]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def rows_to_csv(req: ScanRequest, rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = columns(req)
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r[c]) for c in cols])
    return buf.getvalue()


def manifest(req: ScanRequest, wall_time: float, version: str, **extra) -> dict:
    d = asdict(req)
    return {"request": d, "tolerances": {"gain": GAIN_TOL, "prob": EPS_PROB},
            "version": version, "wall_time_s": wall_time, **extra}


def run_scan(req: ScanRequest, csv_path: str, workers: int = 1) -> dict:
    from . import __version__
    t0 = time.perf_counter()
    rows = scan_region(req, workers)
    wall = time.perf_counter() - t0
    with open(csv_path, "w") as fh:
        fh.write(rows_to_csv(req, rows))
    man = manifest(req, wall, __version__, csv=os.path.basename(csv_path))
    with open(os.path.splitext(csv_path)[0] + ".manifest.json", "w") as fh:
        json.dump(man, fh, indent=2)
    return man


def zero_gain_crossings(rows: Sequence[dict], token: str) -> list[tuple[float, float, float]]:
    """Sign changes of the distillable flag along each eta row.

    Returns (eta, omega_below, omega_above) for every adjacent pair of valid
    grid points whose flags differ.
    """
    by_eta: dict[float, list[dict]] = {}
    for r in rows:
        if not r["masked"]:
            by_eta.setdefault(r["eta"], []).append(r)
    out = []
    for eta, rs in by_eta.items():
        rs.sort(key=lambda r: r["omega"])
        for lo, hi in zip(rs, rs[1:]):
            if lo[f"{token}_flag"] != hi[f"{token}_flag"]:
                out.append((eta, lo["omega"], hi["omega"]))
    return out
