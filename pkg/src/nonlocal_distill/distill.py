"""Sequential multi-copy distillation and trivial-communication-complexity checks.

Serial: round k wires the previous result with a fresh copy of the original
box, using the optimal two-copy wiring for that pair.  Parallel: round k
wires two copies of the previous result.  Fixed repetition: a named
protocol is applied to n copies of the current box every round.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

from .boxes import Box, check, chsh, validate
from .optimize import SweepResult, brute_force_two_copy, sweep_two_copy
from .protocols import named_protocol
from .wirings import compose2

log = logging.getLogger(__name__)

TRIVIAL_CC_THRESHOLD = 4 * math.sqrt(2 / 3)
ARCHITECTURES = ("serial", "parallel", "repeat")
STOP_REASONS = ("round_cap", "no_improvement", "threshold_reached")


@dataclass(frozen=True)
class AlgorithmConfig:
    architecture: str = "serial"
    protocol: str | None = None  # for "repeat"
    max_rounds: int = 50
    improvement_tol: float = 1e-9
    target: float | None = None
    method: str = "lp"  # "lp" sweep or "vertex" enumeration
    workers: int = 1

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}")
        if self.architecture == "repeat":
            if not self.protocol:
                raise ValueError("fixed repetition needs a protocol name")
            named_protocol(self.protocol)
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if not self.improvement_tol > 0:
            raise ValueError("improvement_tol must be positive")
        if self.method not in ("lp", "vertex"):
            raise ValueError("method must be 'lp' or 'vertex'")


@dataclass
class Round:
    k: int
    chsh: float
    alice: tuple = ()
    bob: tuple = ()
    box: Box | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"k": self.k, "chsh": self.chsh, "alice": list(self.alice), "bob": list(self.bob)}


@dataclass
class DistillationTranscript:
    architecture: str
    initial_box: Box = field(repr=False)
    initial_chsh: float
    rounds: list[Round] = field(default_factory=list)
    stop_reason: str = "round_cap"
    copies_per_round: int = 2

    @property
    def copies_used(self) -> int:
        return self.copies_at(len(self.rounds))

    def copies_at(self, k: int) -> int:
        if self.architecture == "serial":
            return k + 1
        return self.copies_per_round ** k

    @property
    def values(self) -> list[float]:
        return [r.chsh for r in self.rounds]

    @property
    def best(self) -> float:
        return max([self.initial_chsh] + self.values)

    @property
    def final_box(self) -> Box:
        return self.rounds[-1].box if self.rounds else self.initial_box

    def to_json(self) -> dict:
        return {
            "architecture": self.architecture,
            "initial_chsh": self.initial_chsh,
            "rounds": [r.to_json() for r in self.rounds],
            "stop_reason": self.stop_reason,
            "copies_used": self.copies_used,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _sweeper(cfg: AlgorithmConfig) -> Callable[[Box, Box], SweepResult]:
    if cfg.method == "vertex":
        return brute_force_two_copy
    return lambda q1, q2: sweep_two_copy(q1, q2, workers=cfg.workers)


def _compose_best(q1: Box, q2: Box, res: SweepResult) -> Box:
    alice = [res.alice_effects[x] if lab == "LP" else lab for x, lab in enumerate(res.alice)]
    return compose2(q1, q2, alice, res.bob)


def _run(p: Box, cfg: AlgorithmConfig, step: Callable[[Box], tuple[Box, tuple, tuple]],
         copies: int) -> DistillationTranscript:
    check(p)
    tr = DistillationTranscript(cfg.architecture, p, chsh(p), copies_per_round=copies)
    current, last = p, tr.initial_chsh
    for k in range(1, cfg.max_rounds + 1):
        nxt, alice, bob = step(current)
        value = chsh(nxt)
        if value <= last + cfg.improvement_tol:
            tr.stop_reason = "no_improvement"
            return tr
        tr.rounds.append(Round(k, value, alice, bob, nxt))
        log.info("%s round %d: CHSH %.6f", cfg.architecture, k, value)
        current, last = nxt, value
        if cfg.target is not None and value > cfg.target:
            tr.stop_reason = "threshold_reached"
            return tr
    tr.stop_reason = "round_cap"
    return tr


def serial_distill(p: Box, cfg: AlgorithmConfig | None = None) -> DistillationTranscript:
    """Wire the previous result (first box) with a fresh copy of ``p`` each round."""
    cfg = cfg or AlgorithmConfig("serial")
    sweep = _sweeper(cfg)

    def step(current):
        res = sweep(current, p)
        return _compose_best(current, p, res), res.alice, res.bob

    return _run(p, cfg, step, 2)


def parallel_distill(p: Box, cfg: AlgorithmConfig | None = None) -> DistillationTranscript:
    """Wire two copies of the previous result each round."""
    cfg = cfg or AlgorithmConfig("parallel")
    sweep = _sweeper(cfg)

    def step(current):
        res = sweep(current, current)
        return _compose_best(current, current, res), res.alice, res.bob

    return _run(p, cfg, step, 2)


def fixed_repeat(p: Box, protocol: str, cfg: AlgorithmConfig | None = None) -> DistillationTranscript:
    """Apply a named protocol to n copies of the current box every round."""
    cfg = cfg or AlgorithmConfig("repeat", protocol=protocol)
    proto = named_protocol(protocol)

    def step(current):
        return proto.apply(current), (proto.name,), (proto.name,)

    return _run(p, cfg, step, proto.n)


def distill(p: Box, cfg: AlgorithmConfig) -> DistillationTranscript:
    if cfg.architecture == "serial":
        return serial_distill(p, cfg)
    if cfg.architecture == "parallel":
        return parallel_distill(p, cfg)
    return fixed_repeat(p, cfg.protocol, cfg)


@dataclass
class TrivialCCResult:
    trivial: bool
    transcript: DistillationTranscript
    copies_used: int | None
    round: int | None

    def to_json(self) -> dict:
        return {"trivial": self.trivial, "copies_used": self.copies_used, "round": self.round,
                "threshold": TRIVIAL_CC_THRESHOLD, "transcript": self.transcript.to_json()}


def certify_trivial_cc(p: Box, cfg: AlgorithmConfig | None = None) -> TrivialCCResult:
    """Does some round exceed 4 sqrt(2/3)?  Reports the first such round and its copy count."""
    cfg = cfg or AlgorithmConfig("serial")
    threshold = TRIVIAL_CC_THRESHOLD if cfg.target is None else cfg.target
    if chsh(p) > threshold:
        tr = DistillationTranscript(cfg.architecture, p, chsh(p), stop_reason="threshold_reached")
        return TrivialCCResult(True, tr, 1, 0)
    run_cfg = AlgorithmConfig(cfg.architecture, cfg.protocol, cfg.max_rounds,
                              cfg.improvement_tol, threshold, cfg.method, cfg.workers)
    tr = distill(p, run_cfg)
    for r in tr.rounds:
        if r.chsh > threshold:
            return TrivialCCResult(True, tr, tr.copies_at(r.k), r.k)
    return TrivialCCResult(False, tr, None, None)


def check_transcript(tr: DistillationTranscript, tol: float = 1e-11) -> float:
    """Worst validity violation over the transcript's boxes."""
    return max([validate(tr.initial_box).worst] + [validate(r.box).worst for r in tr.rounds])
