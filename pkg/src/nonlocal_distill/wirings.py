"""Deterministic two-copy wirings and composition of two boxes.

One party's wiring for a fixed local input is a 0/1 tensor
``chi[a, x1, x2, a1, a2]``: it equals one when the wiring feeds inputs
``(x1, x2)`` to the two boxes, sees outcomes ``(a1, a2)`` and outputs ``a``.
The 82 extremal wirings are labelled 1..82 in five classes:

=========== ======== ==============================================
labels      class    rule
=========== ======== ==============================================
1-2         constant a = mu
3-10        one-sid. x1 = x2 = mu, a = a_(nu+1) + sigma
11-18       xor      x1 = mu, x2 = nu, a = a1 + a2 + sigma
19-50       and      x1 = mu, x2 = nu, a = (a1+sigma)(a2+delta) + eps
51-82       sequent. x_(mu+1) = nu, x_other = a_(mu+1) + sigma,
                     a = a_other + delta a_(mu+1) + eps
=========== ======== ==============================================

All sums are mod 2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

from .boxes import Box, check, extremal_boxes, renormalized

EPS_LP = 1e-9
N_WIRINGS = 82

CLASS_BANDS = {
    "constant": range(1, 3),
    "one-sided": range(3, 11),
    "xor": range(11, 19),
    "and": range(19, 51),
    "sequential": range(51, 83),
}


@dataclass(frozen=True)
class WiringInfo:
    label: int
    cls: str
    params: tuple[tuple[str, int], ...]

    def __str__(self):
        ps = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.label:2d} {self.cls:<10s} {ps}"


def deterministic_effect(inputs: Callable[[int, int, int, int], bool],
                         output: Callable[[int, int], int]) -> np.ndarray:
    """Tensor chi[a, x1, x2, a1, a2] = [inputs(x1, x2, a1, a2)] * [a == output(a1, a2)]."""
    chi = np.zeros((2, 2, 2, 2, 2))
    for x1, x2, a1, a2 in itertools.product((0, 1), repeat=4):
        if inputs(x1, x2, a1, a2):
            chi[output(a1, a2), x1, x2, a1, a2] = 1.0
    return chi


def adaptive_effect(first: int, first_input: int, second_input: Callable[[int], int],
                    output: Callable[[int, int], int]) -> np.ndarray:
    """Effect that queries box ``first`` (0 or 1) with ``first_input``, then the
    other box with ``second_input(outcome of first)``, and outputs ``output(a1, a2)``."""

    def inputs(x1, x2, a1, a2):
        xs, outs = (x1, x2), (a1, a2)
        return xs[first] == first_input and xs[1 - first] == second_input(outs[first])

    return deterministic_effect(inputs, output)


def _decode(k: int, names: str) -> dict[str, int]:
    n = len(names)
    return {name: (k >> (n - 1 - i)) & 1 for i, name in enumerate(names)}


def wiring_info(label: int) -> WiringInfo:
    if not 1 <= label <= N_WIRINGS:
        raise ValueError(f"wiring label must lie in 1..{N_WIRINGS}, got {label!r}")
    for cls, band in CLASS_BANDS.items():
        if label in band:
            k = label - band.start
            names = {"constant": "m", "one-sided": "mns", "xor": "mns",
                     "and": "mnsde", "sequential": "mnsde"}[cls]
            full = {"m": "mu", "n": "nu", "s": "sigma", "d": "delta", "e": "epsilon"}
            bits = _decode(k, names)
            return WiringInfo(label, cls, tuple((full[c], bits[c]) for c in names))
    raise AssertionError("unreachable")


def _build_effect(label: int) -> np.ndarray:
    info = wiring_info(label)
    p = dict(info.params)
    mu = p["mu"]
    if info.cls == "constant":
        # fixed inputs (0, 0); any fixed pair gives the same output statistics
        return deterministic_effect(lambda x1, x2, a1, a2: x1 == 0 and x2 == 0, lambda a1, a2: mu)
    nu, sigma = p["nu"], p["sigma"]
    if info.cls == "one-sided":
        return deterministic_effect(lambda x1, x2, a1, a2: x1 == mu and x2 == mu,
                                    lambda a1, a2: (a1, a2)[nu] ^ sigma)
    if info.cls == "xor":
        return deterministic_effect(lambda x1, x2, a1, a2: x1 == mu and x2 == nu,
                                    lambda a1, a2: a1 ^ a2 ^ sigma)
    delta, eps = p["delta"], p["epsilon"]
    if info.cls == "and":
        return deterministic_effect(lambda x1, x2, a1, a2: x1 == mu and x2 == nu,
                                    lambda a1, a2: ((a1 ^ sigma) & (a2 ^ delta)) ^ eps)

    def out(a1, a2):
        outs = (a1, a2)
        return outs[1 - mu] ^ (delta & outs[mu]) ^ eps

    return adaptive_effect(mu, nu, lambda first: first ^ sigma, out)


@lru_cache(maxsize=None)
def _catalog() -> np.ndarray:
    arr = np.stack([_build_effect(label) for label in range(1, N_WIRINGS + 1)])
    arr.setflags(write=False)
    return arr


def catalog() -> np.ndarray:
    """All 82 effects, shape (82, 2, 2, 2, 2, 2); entry ``i`` has label ``i + 1``."""
    return _catalog()


def catalog_effect(label: int) -> np.ndarray:
    wiring_info(label)
    return _catalog()[label - 1]


@lru_cache(maxsize=None)
def _extremal_stack() -> np.ndarray:
    # Each two-party extremal box read as a pair behaviour Q[a1, a2, x1, x2].
    arr = np.stack([b.p for b in extremal_boxes()])
    arr.setflags(write=False)
    return arr


def effect_outputs(chi: np.ndarray) -> np.ndarray:
    """Output distributions v[Q, a] of an effect applied to the 24 extremal boxes."""
    return np.einsum("aijkl,qklij->qa", np.asarray(chi, dtype=float), _extremal_stack())


def validate_effect(chi: np.ndarray, tol: float = EPS_LP) -> tuple[bool, float]:
    """Check 0 <= sum chi Q <= 1 per output and sum over outputs == 1 for all extremal Q.

    Returns ``(valid, worst_violation)``.
    """
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (2, 2, 2, 2, 2):
        raise ValueError(f"effect must have shape (2, 2, 2, 2, 2), got {chi.shape}")
    v = effect_outputs(chi)
    worst = max(float(np.max(-v)), float(np.max(v - 1.0)),
                float(np.max(np.abs(v.sum(axis=1) - 1.0))), 0.0)
    return worst <= tol, worst


def signed_effects(chis: np.ndarray) -> np.ndarray:
    """chi[0] - chi[1] flattened to 16 entries ordered (x1, x2, a1, a2)."""
    chis = np.asarray(chis)
    return (chis[..., 0, :, :, :, :] - chis[..., 1, :, :, :, :]).reshape(chis.shape[:-5] + (16,))


def label_of(chi: np.ndarray, tol: float = 1e-12) -> int | None:
    """Catalog label acting identically to ``chi`` on every no-signalling box."""
    v = effect_outputs(chi)
    cat = np.einsum("naijkl,qklij->nqa", _catalog(), _extremal_stack())
    hits = np.flatnonzero(np.max(np.abs(cat - v), axis=(1, 2)) <= tol)
    return int(hits[0]) + 1 if hits.size else None


EffectLike = Union[int, np.ndarray]


def as_effect(e: EffectLike) -> np.ndarray:
    if isinstance(e, (int, np.integer)):
        return catalog_effect(int(e))
    chi = np.asarray(e, dtype=float)
    if chi.shape != (2, 2, 2, 2, 2):
        raise ValueError(f"effect must have shape (2, 2, 2, 2, 2), got {chi.shape}")
    return chi


def wiring_pair(pair: Sequence[EffectLike]) -> np.ndarray:
    """Stack a (for input 0, for input 1) pair into shape (2, 2, 2, 2, 2, 2)."""
    if len(pair) != 2:
        raise ValueError("a wiring pair holds exactly two effects")
    return np.stack([as_effect(e) for e in pair])


def pair_tensor(q1: Box, q2: Box) -> np.ndarray:
    """16x16 matrix J[(x1,x2,a1,a2), (y1,y2,b1,b2)] = Q1(a1 b1|x1 y1) Q2(a2 b2|x2 y2)."""
    j = np.einsum("koim,lqjn->ijklmnoq", q1.p, q2.p)
    return j.reshape(16, 16)


def compose_from_tensor(j: np.ndarray, alice: np.ndarray, bob: np.ndarray) -> np.ndarray:
    """Raw composed array p[a, b, x, y] given the pair tensor and stacked wiring pairs."""
    al = alice.reshape(2, 2, 16)  # [x, a, :]
    bo = bob.reshape(2, 2, 16)  # [y, b, :]
    return np.einsum("xaI,IJ,ybJ->abxy", al, j, bo)


def compose2(q1: Box, q2: Box, alice: Sequence[EffectLike], bob: Sequence[EffectLike]) -> Box:
    """Box produced when both parties wire their halves of ``q1`` and ``q2``.

    ``alice`` and ``bob`` are (input 0, input 1) pairs of catalog labels or effect tensors.
    """
    check(q1)
    check(q2)
    al, bo = wiring_pair(alice), wiring_pair(bob)
    for chi in (*al, *bo):
        ok, worst = validate_effect(chi)
        if not ok:
            raise ValueError(f"invalid wiring effect (violation {worst:.3g})")
    return renormalized(compose_from_tensor(pair_tensor(q1, q2), al, bo))


def format_pair(alice: Sequence, bob: Sequence) -> str:
    return f"A({alice[0]},{alice[1]})/B({bob[0]},{bob[1]})"


def parse_pair(text: str) -> tuple[tuple[int, int], tuple[int, int]]:
    """Inverse of :func:`format_pair`, e.g. ``"A(12,18)/B(12,18)"``."""
    try:
        a_part, b_part = text.strip().split("/")
        if not (a_part.startswith("A(") and b_part.startswith("B(")):
            raise ValueError
        a = tuple(int(v) for v in a_part[2:].rstrip(")").split(","))
        b = tuple(int(v) for v in b_part[2:].rstrip(")").split(","))
    except ValueError:
        raise ValueError(f"cannot parse wiring quadruple {text!r}") from None
    if len(a) != 2 or len(b) != 2:
        raise ValueError(f"cannot parse wiring quadruple {text!r}")
    for label in (*a, *b):
        wiring_info(label)
    return a, b


# Named two-copy protocols as (input 0, input 1) effects per party.

def _fww():
    eff = lambda s: adaptive_effect(0, s, lambda _: s, lambda a1, a2: a1 ^ a2)
    return (eff(0), eff(1)), (eff(0), eff(1))


def _abl1():
    alice = tuple(adaptive_effect(0, x, lambda a1, x=x: x ^ a1 ^ 1, lambda a1, a2: a1 ^ a2 ^ 1)
                  for x in (0, 1))
    bob = tuple(adaptive_effect(0, y, lambda b1, y=y: y & b1, lambda b1, b2: b1 ^ b2 ^ 1)
                for y in (0, 1))
    return alice, bob


def _abl2():
    eff = lambda s: adaptive_effect(0, s, lambda _: s, lambda a1, a2: a1 & a2)
    return (eff(0), eff(1)), (eff(0), eff(1))


TWO_COPY_PROTOCOLS = {"FWW": _fww, "ABL1": _abl1, "ABL2": _abl2}


def named_two_copy(name: str) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """Wiring pairs ``(alice, bob)`` of a named two-copy protocol (FWW, ABL1, ABL2)."""
    try:
        return TWO_COPY_PROTOCOLS[name.upper()]()
    except KeyError:
        raise ValueError(f"unknown two-copy protocol {name!r}") from None


def named_two_copy_labels(name: str) -> tuple[tuple[int, int], tuple[int, int]]:
    alice, bob = named_two_copy(name)
    return tuple(label_of(e) for e in alice), tuple(label_of(e) for e in bob)
