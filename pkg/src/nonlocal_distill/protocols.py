"""Deterministic adaptive wirings on n boxes and the named protocols.

An :class:`NCopyWiring` is stored as lookup tables.  At step ``i`` (0-based)
the party has seen outcomes ``h = (o_0, ..., o_{i-1})`` in query order;
``box_choice[i][(x,) + h]`` is the box queried next and
``input_choice[i][(x,) + h]`` the input fed to it.  The final output is
``output[(x,) + (o_0, ..., o_{n-1})]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .boxes import Box, CrossSectionPoint, check, chsh, cs_point, renormalized
from .wirings import as_effect, named_two_copy


@dataclass(frozen=True, eq=False)
class NCopyWiring:
    n: int
    box_choice: tuple
    input_choice: tuple
    output: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a wiring needs at least one box")
        if len(self.box_choice) != self.n or len(self.input_choice) != self.n:
            raise ValueError("need one box-choice and one input-choice table per step")
        for i in range(self.n):
            for name, tab, hi in (("box_choice", self.box_choice[i], self.n - 1),
                                  ("input_choice", self.input_choice[i], 1)):
                if np.shape(tab) != (2,) * (i + 1):
                    raise ValueError(f"{name}[{i}] must have shape {(2,) * (i + 1)}")
                if np.any((np.asarray(tab) < 0) | (np.asarray(tab) > hi)):
                    raise ValueError(f"{name}[{i}] entries out of range")
        if np.shape(self.output) != (2,) * (self.n + 1):
            raise ValueError(f"output must have shape {(2,) * (self.n + 1)}")
        if np.any((np.asarray(self.output) < 0) | (np.asarray(self.output) > 1)):
            raise ValueError("output entries must be bits")
        for x in (0, 1):
            for outcomes in itertools.product((0, 1), repeat=self.n):
                seen = [int(self.box_choice[i][(x,) + outcomes[:i]]) for i in range(self.n)]
                if sorted(seen) != list(range(self.n)):
                    raise ValueError(f"box choice for x={x}, outcomes={outcomes} does not "
                                     "visit every box exactly once")

    @classmethod
    def from_functions(cls, n: int,
                       box_fn: Callable[[int, int, tuple], int],
                       input_fn: Callable[[int, int, tuple], int],
                       output_fn: Callable[[int, tuple], int]) -> "NCopyWiring":
        """Tabulate ``box_fn(step, x, history)``, ``input_fn(step, x, history)`` and
        ``output_fn(x, outcomes)``; histories are in query order."""
        boxes, inputs = [], []
        for i in range(n):
            b = np.zeros((2,) * (i + 1), dtype=np.int8)
            s = np.zeros((2,) * (i + 1), dtype=np.int8)
            for idx in itertools.product((0, 1), repeat=i + 1):
                b[idx] = box_fn(i, idx[0], idx[1:])
                s[idx] = input_fn(i, idx[0], idx[1:])
            boxes.append(b)
            inputs.append(s)
        out = np.zeros((2,) * (n + 1), dtype=np.int8)
        for idx in itertools.product((0, 1), repeat=n + 1):
            out[idx] = output_fn(idx[0], idx[1:])
        return cls(n, tuple(boxes), tuple(inputs), out)

    @classmethod
    def fixed_order(cls, inputs: Sequence[Callable[..., int]],
                    output: Callable[..., int]) -> "NCopyWiring":
        """Query boxes 1..n in order; ``inputs[i](x, o_1, ..., o_i)`` and ``output(x, o_1, ..., o_n)``."""
        n = len(inputs)
        return cls.from_functions(n, lambda i, x, h: i,
                                  lambda i, x, h: inputs[i](x, *h) & 1,
                                  lambda x, o: output(x, *o) & 1)

    def paths(self, x: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """For every outcome sequence (query order): per-box inputs, per-box outcomes, final output."""
        n = self.n
        seqs = list(itertools.product((0, 1), repeat=n))
        ins = np.zeros((len(seqs), n), dtype=np.intp)
        outs = np.zeros((len(seqs), n), dtype=np.intp)
        final = np.zeros(len(seqs), dtype=np.intp)
        for s, seq in enumerate(seqs):
            for i in range(n):
                key = (x,) + seq[:i]
                k = int(self.box_choice[i][key])
                ins[s, k] = int(self.input_choice[i][key])
                outs[s, k] = seq[i]
            final[s] = int(self.output[(x,) + seq])
        return ins, outs, final

    def permuted(self, perm: Sequence[int]) -> "NCopyWiring":
        """Same wiring acting on relabelled boxes: old box ``k`` becomes ``perm[k]``."""
        perm = np.asarray(perm)
        return NCopyWiring(self.n, tuple(perm[t] for t in self.box_choice),
                           self.input_choice, self.output)


def apply_ncopy(boxes: Sequence[Box], alice: NCopyWiring, bob: NCopyWiring) -> Box:
    """Box obtained when both parties wire their halves of ``boxes``.

    Sums the product of per-box probabilities over every pair of outcome
    histories.
    """
    n = len(boxes)
    if alice.n != n or bob.n != n:
        raise ValueError(f"wirings act on {alice.n} and {bob.n} boxes, got {n}")
    for b in boxes:
        check(b)
    qs = np.stack([b.p for b in boxes])  # [k, a, b, x, y]
    ks = np.arange(n)
    p = np.zeros((2, 2, 2, 2))
    for x in (0, 1):
        ain, aout, afin = alice.paths(x)
        for y in (0, 1):
            bin_, bout, bfin = bob.paths(y)
            # probs[sa, sb, k]
            probs = qs[ks, aout[:, None, :], bout[None, :, :], ain[:, None, :], bin_[None, :, :]]
            weight = probs.prod(axis=2)
            np.add.at(p, (afin[:, None], bfin[None, :], x, y), weight)
    return renormalized(p)


def from_two_copy_effects(pair) -> NCopyWiring:
    """Convert a deterministic two-copy wiring pair (labels or 0/1 tensors) to tables."""
    specs = []
    for e in pair:
        chi = as_effect(e)
        support = [tuple(int(v) for v in idx) for idx in np.argwhere(chi > 0.5)]  # (a, x1, x2, a1, a2)
        if not support:
            raise ValueError("effect has empty support")
        x1s = {s[1] for s in support}
        x2s = {s[2] for s in support}
        first = 0 if len(x1s) == 1 else 1
        if len({(s[1], s[2])[first] for s in support}) != 1:
            raise ValueError("effect is not a deterministic adaptive wiring")
        first_input = next(iter(x1s if first == 0 else x2s))
        second = {}
        out = {}
        for a, x1, x2, a1, a2 in support:
            o_first = (a1, a2)[first]
            x_second = (x1, x2)[1 - first]
            if second.setdefault(o_first, x_second) != x_second or out.setdefault((a1, a2), a) != a:
                raise ValueError("effect is not a deterministic adaptive wiring")
        if len(out) != 4:
            raise ValueError("effect does not define an output for every outcome pair")
        specs.append((first, first_input, second, out))

    def box_fn(i, x, h):
        first = specs[x][0]
        return first if i == 0 else 1 - first

    def input_fn(i, x, h):
        first, first_input, second, _ = specs[x]
        return first_input if i == 0 else second[h[0]]

    def output_fn(x, o):
        first = specs[x][0]
        by_box = (o[0], o[1]) if first == 0 else (o[1], o[0])
        return specs[x][3][by_box]

    return NCopyWiring.from_functions(2, box_fn, input_fn, output_fn)


@dataclass(frozen=True, eq=False)
class NamedProtocol:
    name: str
    alice: NCopyWiring
    bob: NCopyWiring

    @property
    def n(self) -> int:
        return self.alice.n

    def apply(self, box: Box) -> Box:
        """Apply to ``n`` identical copies of ``box``."""
        return apply_ncopy([box] * self.n, self.alice, self.bob)


def _nb(v: int) -> int:
    return v ^ 1


def _eq2():
    alice = NCopyWiring.fixed_order(
        [lambda x: x,
         lambda x, a1: x ^ _nb(a1),
         lambda x, a1, a2: x & _nb(a1 ^ a2)],
        lambda x, a1, a2, a3: a1 ^ a2 ^ a3)
    bob = NCopyWiring.fixed_order(
        [lambda y: y,
         lambda y, b1: y & b1,
         lambda y, b1, b2: y ^ b1 ^ b2],
        lambda y, b1, b2, b3: b1 ^ b2 ^ b3)
    return alice, bob


def _eq3():
    alice = NCopyWiring.fixed_order(
        [lambda x: _nb(x),
         lambda x, a1: _nb(x),
         lambda x, a1, a2: (_nb(x) & a1) | (_nb(x) & a2)],
        lambda x, a1, a2, a3: (a1 & a3) | (a2 & a3) | (_nb(a1) & _nb(a2) & _nb(a3)))

    def bob_out(y, b1, b2, b3):
        ny, nb1, nb2, nb3 = _nb(y), _nb(b1), _nb(b2), _nb(b3)
        return ((ny & b1 & b3) | (ny & b2 & b3) | (y & b1 & nb3) | (y & b2 & nb3)
                | (ny & nb1 & nb2 & nb3) | (y & nb1 & nb2 & b3))

    bob = NCopyWiring.fixed_order(
        [lambda y: y,
         lambda y, b1: y,
         lambda y, b1, b2: (y & b1) | (y & b2) | (_nb(y) & _nb(b1) & _nb(b2))],
        bob_out)
    return alice, bob


def _eq4():
    alice = NCopyWiring.fixed_order(
        [lambda x: x,
         lambda x, a1: x,
         lambda x, a1, a2: (x & a2) | (x & _nb(a1)) | (_nb(x) & _nb(a2) & a1)],
        lambda x, a1, a2, a3: (a3 & a2) | (a3 & _nb(a1)) | (_nb(a3) & _nb(a2) & a1))
    bob = NCopyWiring.fixed_order(
        [lambda y: y,
         lambda y, b1: y,
         lambda y, b1, b2: (y & b2) | _nb(b1)],
        lambda y, b1, b2, b3: (b3 & b2) | (b3 & _nb(b1)) | (_nb(b3) & _nb(b2) & b1))
    return alice, bob


def _hr():
    alice = NCopyWiring.fixed_order(
        [lambda x: x,
         lambda x, a1: x ^ a1,
         lambda x, a1, a2: (a2 & _nb(a1)) ^ (x & (a1 ^ a2 ^ (a1 & a2)))],
        lambda x, a1, a2, a3: a1 ^ a2 ^ a3)
    bob = NCopyWiring.fixed_order(
        [lambda y: y,
         lambda y, b1: y & _nb(b1),
         lambda y, b1, b2: _nb(b1) ^ (b2 & _nb(b1)) ^ (y & (_nb(b2) ^ (b1 & b2)))],
        lambda y, b1, b2, b3: b1 ^ b2 ^ b3)
    return alice, bob


def _two_copy(name):
    def build():
        alice, bob = named_two_copy(name)
        return from_two_copy_effects(alice), from_two_copy_effects(bob)
    return build


_BUILDERS = {
    "EQ2": _eq2, "EQ3": _eq3, "EQ4": _eq4, "HR": _hr,
    "FWW": _two_copy("FWW"), "ABL1": _two_copy("ABL1"), "ABL2": _two_copy("ABL2"),
}

PROTOCOL_NAMES = tuple(_BUILDERS)
THREE_COPY = ("EQ2", "EQ3", "EQ4", "HR")


def named_protocol(name: str) -> NamedProtocol:
    key = name.upper()
    if key not in _BUILDERS:
        raise ValueError(f"unknown protocol {name!r}; choose from {', '.join(PROTOCOL_NAMES)}")
    return _named(key)


@lru_cache(maxsize=None)
def _named(key: str) -> NamedProtocol:
    alice, bob = _BUILDERS[key]()
    return NamedProtocol(key, alice, bob)


def protocol_gain(pt: CrossSectionPoint, name: str) -> tuple[float, float]:
    """CHSH before and after applying the protocol to identical copies of the point's box."""
    box = cs_point(pt)
    return chsh(box), chsh(named_protocol(name).apply(box))


def truth_table(w: NCopyWiring) -> list[dict]:
    """Rows describing the fixed-order tables: x, outcomes, queried inputs and final output."""
    rows = []
    for x in (0, 1):
        for seq in itertools.product((0, 1), repeat=w.n):
            row = {"x": x, "outcomes": list(seq)}
            row["boxes"] = [int(w.box_choice[i][(x,) + seq[:i]]) + 1 for i in range(w.n)]
            row["inputs"] = [int(w.input_choice[i][(x,) + seq[:i]]) for i in range(w.n)]
            row["output"] = int(w.output[(x,) + seq])
            rows.append(row)
    return rows
