"""Two-party boxes with binary inputs and outputs.

A box is stored as a ``(2, 2, 2, 2)`` array indexed ``p[a, b, x, y]`` holding
the conditional probabilities P(ab|xy).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

EPS_PROB = 1e-9
RENORM_DRIFT = 1e-12

CROSS_SECTIONS = ("I", "II", "III")

# CHSH signs s_xy for E00 + E01 + E10 - E11, and the second coordinate
# E00 - E01 + E10 + E11 used for plotting.
CHSH_SIGNS = np.array([[1.0, 1.0], [1.0, -1.0]])
CHSH2_SIGNS = np.array([[1.0, -1.0], [1.0, 1.0]])

# (-1)^(a xor b)
_PARITY = np.array([[1.0, -1.0], [-1.0, 1.0]])


class InvalidBoxError(ValueError):
    """Raised when a box violates positivity, normalization or no-signalling."""


@dataclass(frozen=True, eq=False)
class Box:
    """Conditional distribution P(ab|xy), immutable."""

    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.p, dtype=float)
        if arr.shape != (2, 2, 2, 2):
            raise ValueError(f"box array must have shape (2, 2, 2, 2), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    def __repr__(self):
        return f"Box(chsh={chsh_unchecked(self):.6f})"

    def correlators(self) -> np.ndarray:
        """E[x, y] = P(a=b|xy) - P(a!=b|xy)."""
        return np.einsum("ab,abxy->xy", _PARITY, self.p)

    def allclose(self, other: "Box", atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.p - other.p)) <= atol)

    def to_json(self) -> str:
        return box_to_json(self)


@dataclass(frozen=True)
class ExtremalIndex:
    kind: str  # "L" or "NL"
    index: int

    def __post_init__(self):
        if self.kind not in ("L", "NL"):
            raise ValueError(f"kind must be 'L' or 'NL', got {self.kind!r}")
        top = 16 if self.kind == "L" else 8
        if not 1 <= self.index <= top:
            raise ValueError(f"{self.kind} index must lie in 1..{top}, got {self.index}")

    def bits(self) -> tuple[int, ...]:
        """Decode to (mu, nu, sigma, tau) for local or (mu, nu, sigma) for nonlocal."""
        k = self.index - 1
        if self.kind == "L":
            return ((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1)
        return ((k >> 2) & 1, (k >> 1) & 1, k & 1)

    def box(self) -> Box:
        if self.kind == "L":
            return local_extremal(*self.bits())
        return nonlocal_extremal(*self.bits())


@dataclass(frozen=True)
class CrossSectionPoint:
    cs_id: str
    eta: float
    omega: float

    def __post_init__(self):
        if self.cs_id not in CROSS_SECTIONS:
            raise ValueError(f"unknown cross-section {self.cs_id!r}")
        if self.eta < 0 or self.omega < 0:
            raise ValueError("eta and omega must be non-negative")
        if self.eta + self.omega > 1 + EPS_PROB:
            raise ValueError(f"eta + omega must not exceed 1, got {self.eta + self.omega}")


@dataclass(frozen=True)
class ValidationReport:
    positivity: float
    normalization: float
    no_signalling_alice: float
    no_signalling_bob: float
    tol: float = EPS_PROB

    @property
    def worst(self) -> float:
        return max(self.positivity, self.normalization,
                   self.no_signalling_alice, self.no_signalling_bob)

    @property
    def ok(self) -> bool:
        return self.worst <= self.tol

    def failures(self) -> list[str]:
        names = ("positivity", "normalization", "no_signalling_alice", "no_signalling_bob")
        return [n for n in names if getattr(self, n) > self.tol]


def _bit(v) -> int:
    if v not in (0, 1):
        raise ValueError(f"expected a bit, got {v!r}")
    return int(v)


def _bits():
    return ((a, b, x, y) for a in (0, 1) for b in (0, 1) for x in (0, 1) for y in (0, 1))


def local_extremal(mu: int, nu: int, sigma: int, tau: int) -> Box:
    """Deterministic box a = mu*x + nu, b = sigma*y + tau (mod 2)."""
    mu, nu, sigma, tau = map(_bit, (mu, nu, sigma, tau))
    p = np.zeros((2, 2, 2, 2))
    for x in (0, 1):
        for y in (0, 1):
            p[(mu * x) ^ nu, (sigma * y) ^ tau, x, y] = 1.0
    return Box(p)


def nonlocal_extremal(mu: int, nu: int, sigma: int) -> Box:
    """PR-type box with a xor b = xy + mu*x + nu*y + sigma (mod 2) and uniform marginals."""
    mu, nu, sigma = map(_bit, (mu, nu, sigma))
    p = np.zeros((2, 2, 2, 2))
    for a, b, x, y in _bits():
        if a ^ b == (x * y) ^ (mu * x) ^ (nu * y) ^ sigma:
            p[a, b, x, y] = 0.5
    return Box(p)


def local_index(mu: int, nu: int, sigma: int, tau: int) -> int:
    return 1 + tau + 2 * sigma + 4 * nu + 8 * mu


def nonlocal_index(mu: int, nu: int, sigma: int) -> int:
    return 1 + sigma + 2 * nu + 4 * mu


def PL(i: int) -> Box:
    return ExtremalIndex("L", i).box()


def PNL(i: int) -> Box:
    return ExtremalIndex("NL", i).box()


def extremal_boxes() -> list[Box]:
    """The 16 local deterministic boxes followed by the 8 nonlocal vertices."""
    return [PL(i) for i in range(1, 17)] + [PNL(i) for i in range(1, 9)]


def validate(box: Box, tol: float = EPS_PROB) -> ValidationReport:
    p = box.p
    pos = float(max(0.0, -p.min()))
    norm = float(np.max(np.abs(p.sum(axis=(0, 1)) - 1.0)))
    alice = p.sum(axis=1)  # [a, x, y]
    bob = p.sum(axis=0)  # [b, x, y]
    ns_a = float(np.max(np.abs(alice[:, :, 0] - alice[:, :, 1])))
    ns_b = float(np.max(np.abs(bob[:, 0, :] - bob[:, 1, :])))
    return ValidationReport(pos, norm, ns_a, ns_b, tol)


def check(box: Box, tol: float = EPS_PROB) -> Box:
    report = validate(box, tol)
    if not report.ok:
        raise InvalidBoxError(
            f"invalid box: {', '.join(report.failures())} (worst violation {report.worst:.3g})")
    return box


def renormalized(p: np.ndarray) -> Box:
    """Wrap a composed array, rescaling each (x, y) slice only if it drifted."""
    sums = p.sum(axis=(0, 1))
    if np.max(np.abs(sums - 1.0)) > RENORM_DRIFT:
        p = p / sums
    return Box(p)


def chsh_unchecked(box: Box) -> float:
    return float(np.sum(CHSH_SIGNS * box.correlators()))


def chsh(box: Box) -> float:
    """E00 + E01 + E10 - E11."""
    return chsh_unchecked(check(box))


def chsh2(box: Box) -> float:
    """E00 - E01 + E10 + E11, a second plotting coordinate."""
    return float(np.sum(CHSH2_SIGNS * check(box).correlators()))


def mix(boxes: Sequence[Box], weights: Sequence[float]) -> Box:
    if len(boxes) != len(weights) or not boxes:
        raise ValueError("boxes and weights must be non-empty and of equal length")
    w = np.asarray(weights, dtype=float)
    if np.any(w < -EPS_PROB):
        raise ValueError("mixture weights must be non-negative")
    if abs(w.sum() - 1.0) > EPS_PROB:
        raise ValueError(f"mixture weights must sum to 1, got {w.sum()}")
    return Box(np.einsum("i,iabxy->abxy", w, np.stack([b.p for b in boxes])))


def isotropic_noise() -> Box:
    """The local box 3/4 PR + 1/4 anti-PR."""
    return mix([PNL(1), PNL(2)], [0.75, 0.25])


def cs_point(pt: CrossSectionPoint | str, eta: float | None = None,
             omega: float | None = None) -> Box:
    """Box at coordinates (eta, omega) of cross-section I, II or III.

    Accepts either a :class:`CrossSectionPoint` or ``(cs_id, eta, omega)``.
    """
    if not isinstance(pt, CrossSectionPoint):
        pt = CrossSectionPoint(pt, float(eta), float(omega))
    eta, omega = pt.eta, pt.omega
    rest = max(0.0, 1.0 - omega - eta)
    if pt.cs_id == "I":
        return mix([PNL(1), PL(1), PL(6), isotropic_noise()], [omega, eta / 2, eta / 2, rest])
    if pt.cs_id == "II":
        # the local vertex is a = b = 1; with a = b = 0 the ABL closed forms
        # for this slice do not hold (AND-type outputs are not flip symmetric)
        return mix([PNL(1), PL(6), isotropic_noise()], [omega, eta, rest])
    return mix([PNL(1), PL(1), PL(9), isotropic_noise()], [omega, eta / 2, eta / 2, rest])


def _fmt(v: float) -> str:
    s = f"{v:.17g}"
    if "e" not in s and "." not in s and s not in ("inf", "-inf", "nan"):
        s += ".0"
    return s


def box_to_json(box: Box) -> str:
    """Serialize with rows indexed 2x+y and columns 2a+b."""
    rows = []
    for x in (0, 1):
        for y in (0, 1):
            rows.append("[" + ", ".join(_fmt(box.p[a, b, x, y]) for a in (0, 1) for b in (0, 1)) + "]")
    return '{"p": [' + ", ".join(rows) + '], "order": "xy-ab"}'


def box_from_json(text: str | dict) -> Box:
    obj = json.loads(text) if isinstance(text, str) else text
    if obj.get("order", "xy-ab") != "xy-ab":
        raise ValueError(f"unsupported order {obj.get('order')!r}")
    rows = np.asarray(obj["p"], dtype=float)
    if rows.shape != (4, 4):
        raise ValueError("expected 4 rows of 4 probabilities")
    p = np.zeros((2, 2, 2, 2))
    for x in (0, 1):
        for y in (0, 1):
            for a in (0, 1):
                for b in (0, 1):
                    p[a, b, x, y] = rows[2 * x + y, 2 * a + b]
    return Box(p)


TRIVIAL_CC_THRESHOLD = 4 * math.sqrt(2 / 3)
