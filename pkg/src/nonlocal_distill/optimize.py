"""Exact optimization of CHSH over two-copy wirings.

For a fixed Bob wiring pair the distilled CHSH value is linear in Alice's
effects, so Alice is optimized with a linear program over the effects
allowed on every no-signalling box.  Bob's 82 x 82 extremal wiring pairs
are swept.  The objective splits into one independent block per Alice
input, so each Bob pair costs two 32-variable LPs.

:func:`brute_force_two_copy` is the vertex-enumeration oracle: it scores
all 82 catalog effects per party and input directly.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boxes import Box, CHSH_SIGNS, check, extremal_boxes, PNL
from .simplex import SimplexLP, linprog_max
from .wirings import (EPS_LP, N_WIRINGS, EffectLike, catalog, pair_tensor,
                      signed_effects, wiring_pair)

log = logging.getLogger(__name__)

TIE_TOL = 1e-10
PR_MATCH_TOL = 1e-12


@dataclass
class LPProblem:
    """Alice's effects for both inputs as 64 variables ``chi[x, a, x1, x2, a1, a2]``."""

    objective: np.ndarray  # (64,)
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    sense: str = "maximize"

    @property
    def n_rows(self) -> tuple[int, int]:
        return len(self.b_ub), len(self.b_eq)


def _block_rows() -> tuple[np.ndarray, np.ndarray]:
    """Rows V[Q, a] acting on one 32-entry effect chi[a, x1, x2, a1, a2]."""
    qs = np.stack([b.p for b in extremal_boxes()])  # [q, a1, a2, x1, x2]
    qvec = qs.transpose(0, 3, 4, 1, 2).reshape(len(qs), 16)  # (x1, x2, a1, a2)
    rows = np.zeros((len(qs), 2, 32))
    rows[:, 0, :16] = qvec
    rows[:, 1, 16:] = qvec
    return rows.reshape(-1, 32), rows.sum(axis=1)


def block_constraints() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Constraints on one input's effect: 0 <= V chi <= 1 and sum_a V chi = 1."""
    out_rows, eq_rows = _block_rows()
    A_ub = np.vstack([out_rows, -out_rows])
    b_ub = np.concatenate([np.ones(len(out_rows)), np.zeros(len(out_rows))])
    return A_ub, b_ub, eq_rows, np.ones(len(eq_rows))


def _bob_weights(bob_signed: np.ndarray) -> np.ndarray:
    """Per Alice input, the signed combination sum_y s_xy beta_y of Bob's effects."""
    return CHSH_SIGNS @ bob_signed  # [x, 16]


def block_objectives(j: np.ndarray, bob_signed: np.ndarray) -> np.ndarray:
    """Objective vectors c[x] (32 entries each) for Alice's two inputs."""
    v = (j @ _bob_weights(bob_signed).T).T  # [x, 16]
    return np.concatenate([v, -v], axis=1)


def build_lp(q1: Box, q2: Box, bob: Sequence[EffectLike]) -> LPProblem:
    """Full 64-variable LP for Alice given Bob's wiring pair."""
    A, b, Ae, be = block_constraints()
    z = np.zeros_like(A)
    ze = np.zeros_like(Ae)
    c = block_objectives(pair_tensor(q1, q2), signed_effects(wiring_pair(bob)))
    return LPProblem(
        objective=c.reshape(64),
        A_ub=np.block([[A, z], [z, A]]),
        b_ub=np.concatenate([b, b]),
        A_eq=np.block([[Ae, ze], [ze, Ae]]),
        b_eq=np.concatenate([be, be]),
    )


def solve_lp_direct(problem: LPProblem) -> tuple[float, np.ndarray]:
    """Solve the undecomposed 64-variable problem (used to cross-check the block split)."""
    res = linprog_max(problem.objective, problem.A_ub, problem.b_ub, problem.A_eq, problem.b_eq)
    return res.value, res.x.reshape(2, 2, 2, 2, 2, 2)


class AliceLP:
    """One warm-started LP per Alice input; feasible set is box independent."""

    def __init__(self):
        A, b, Ae, be = block_constraints()
        self.solvers = [SimplexLP(A, b, Ae, be, tol=EPS_LP) for _ in range(2)]

    def solve(self, c: np.ndarray) -> tuple[float, list[np.ndarray]]:
        value, effects = 0.0, []
        for x in (0, 1):
            res = self.solvers[x].maximize(c[x])
            value += res.value
            effects.append(res.x.reshape(2, 2, 2, 2, 2))
        return value, effects


_shared_lp: AliceLP | None = None


def _alice_lp() -> AliceLP:
    global _shared_lp
    if _shared_lp is None:
        _shared_lp = AliceLP()
    return _shared_lp


def lp_optimize_alice(q1: Box, q2: Box, bob: Sequence[EffectLike]) -> tuple[float, list[np.ndarray]]:
    """Maximal CHSH over all valid Alice effects for a fixed Bob pair.

    Returns the value and Alice's optimal effect for each input.
    """
    check(q1)
    check(q2)
    c = block_objectives(pair_tensor(q1, q2), signed_effects(wiring_pair(bob)))
    return _alice_lp().solve(c)


@dataclass
class SweepResult:
    best_value: float
    alice: tuple
    bob: tuple
    per_bob_table: np.ndarray | None = field(default=None, repr=False)
    alice_effects: tuple | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"value": self.best_value, "alice": list(self.alice), "bob": list(self.bob)}

    def table_rows(self):
        """(bob_l0, bob_l1, value) rows of the retained per-Bob table."""
        if self.per_bob_table is None:
            return []
        return [(l0 + 1, l1 + 1, float(self.per_bob_table[l0, l1]))
                for l0 in range(N_WIRINGS) for l1 in range(N_WIRINGS)]


def _catalog_signed() -> np.ndarray:
    return signed_effects(catalog())


def _sweep_rows(args) -> np.ndarray:
    j, rows = args
    lp0, lp1 = AliceLP().solvers
    bs = _catalog_signed()
    out = np.empty((len(rows), N_WIRINGS))
    jb = j @ bs.T  # [16, 82]
    # input 0 weights beta_l0 + beta_l1, symmetric in (l0, l1)
    sym: dict[tuple[int, int], float] = {}
    for k, l0 in enumerate(rows):
        for l1 in range(N_WIRINGS):
            key = (min(l0, l1), max(l0, l1))
            if key not in sym:
                v0 = jb[:, l0] + jb[:, l1]
                sym[key] = lp0.maximize(np.concatenate([v0, -v0])).value
            v1 = jb[:, l0] - jb[:, l1]
            out[k, l1] = sym[key] + lp1.maximize(np.concatenate([v1, -v1])).value
    return out


def _pick(table: np.ndarray) -> tuple[int, int]:
    best = table.max()
    l0, l1 = np.argwhere(table >= best - TIE_TOL)[0]
    return int(l0), int(l1)


def _alice_labels(j: np.ndarray, bob: tuple[int, int], targets: Sequence[float]):
    """Lowest catalog labels per Alice input attaining the given per-input values."""
    bs = _catalog_signed()
    w = _bob_weights(bs[[bob[0] - 1, bob[1] - 1]])  # [x, 16]
    scores = bs @ j @ w.T  # [82, x]
    labels = []
    for x in (0, 1):
        hits = np.flatnonzero(scores[:, x] >= targets[x] - 1e-9)
        labels.append(int(hits[0]) + 1 if hits.size else None)
    return labels


def sweep_two_copy(q1: Box, q2: Box, keep_table: bool = False, workers: int = 1) -> SweepResult:
    """Optimal two-copy CHSH: LP over Alice for each of Bob's 82^2 pairs.

    Ties are broken by the lowest (Bob l0, Bob l1, Alice l0, Alice l1).
    """
    check(q1)
    check(q2)
    j = pair_tensor(q1, q2)
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1:
        chunks = [list(r) for r in np.array_split(np.arange(N_WIRINGS), workers)]
        with ProcessPoolExecutor(workers) as pool:
            table = np.vstack(list(pool.map(_sweep_rows, [(j, c) for c in chunks])))
    else:
        table = _sweep_rows((j, list(range(N_WIRINGS))))
    l0, l1 = _pick(table)
    bob = (l0 + 1, l1 + 1)
    bs = _catalog_signed()
    c = block_objectives(j, bs[[l0, l1]])
    value, effects = AliceLP().solve(c)
    per_x = [float(c[x] @ effects[x].reshape(32)) for x in (0, 1)]
    labels = _alice_labels(j, bob, per_x)
    alice = []
    for x in (0, 1):
        if labels[x] is None:
            log.warning("LP optimum for Alice input %d is not a catalog wiring", x)
            alice.append("LP")
        else:
            alice.append(labels[x])
    return SweepResult(float(table[l0, l1]), tuple(alice), bob,
                       table if keep_table else None, tuple(effects))


def brute_force_two_copy(q1: Box, q2: Box, keep_table: bool = False) -> SweepResult:
    """Exact maximum over all 82^4 catalog wiring combinations.

    Per input symbol each party chooses among 82 effects independently, so
    the search reduces to correlators E[i, l] for Alice effect ``i`` and Bob
    effect ``l``.
    """
    check(q1)
    check(q2)
    s = _catalog_signed()
    e = s @ pair_tensor(q1, q2) @ s.T  # [alice, bob]
    plus = e[:, :, None] + e[:, None, :]  # Alice input 0 sees E(., y=0) + E(., y=1)
    minus = e[:, :, None] - e[:, None, :]
    v0, v1 = plus.max(axis=0), minus.max(axis=0)
    table = v0 + v1
    l0, l1 = _pick(table)
    i0 = int(np.flatnonzero(plus[:, l0, l1] >= v0[l0, l1] - TIE_TOL)[0])
    i1 = int(np.flatnonzero(minus[:, l0, l1] >= v1[l0, l1] - TIE_TOL)[0])
    return SweepResult(float(table[l0, l1]), (i0 + 1, i1 + 1), (l0 + 1, l1 + 1),
                       table if keep_table else None)


def pr_preserving_mask() -> tuple[np.ndarray, np.ndarray]:
    """Boolean [alice effect, bob effect] masks reproducing the PR rows.

    ``g0`` marks pairs giving P(ab) = 1/2 [a = b] (needed for (x, y) != (1, 1)),
    ``g1`` pairs giving 1/2 [a != b] (needed for (x, y) = (1, 1)).
    """
    pr = PNL(1)
    full = catalog().reshape(N_WIRINGS, 2, 16)
    dist = np.einsum("iaI,IJ,jbJ->ijab", full, pair_tensor(pr, pr), full)
    same = np.array([[0.5, 0.0], [0.0, 0.5]])
    g0 = np.all(np.abs(dist - same) <= PR_MATCH_TOL, axis=(2, 3))
    g1 = np.all(np.abs(dist - same[::-1]) <= PR_MATCH_TOL, axis=(2, 3))
    return g0, g1


def count_pr_preserving() -> int:
    """Number of (Alice pair, Bob pair) catalog wirings mapping two PR boxes to a PR box."""
    g0, g1 = (g.astype(np.int64) for g in pr_preserving_mask())
    # (x, y) = (0,0), (0,1), (1,0) need g0; (1,1) needs g1
    return int(np.einsum("ab,ac,db,dc->", g0, g0, g0, g1))


def is_pr_preserving(alice: Sequence[int], bob: Sequence[int]) -> bool:
    g0, g1 = pr_preserving_mask()
    a0, a1 = (alice[0] - 1, alice[1] - 1)
    b0, b1 = (bob[0] - 1, bob[1] - 1)
    return bool(g0[a0, b0] and g0[a0, b1] and g0[a1, b0] and g1[a1, b1])
