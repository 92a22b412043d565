"""Grover-only approximate counting and the end-to-end action estimator.

Grover dynamics are simulated exactly in the two-dimensional invariant
subspace spanned by the uniform marked and unmarked components: a run
of j iterations measures a marked outcome with probability
sin^2((2j+1) * theta), theta = arcsin(sqrt(K/N)).  This is lossless for
measurement statistics; circuit-level fidelity is checked separately by
the oracle truth-table properties.

The count estimator works on the angle.  A first batch decides whether
to estimate theta or its complement phi = pi/2 - theta (for odd
multipliers u the unmarked-outcome rate at u equals sin^2(u * phi), so
both views share one code path).  Exponentially growing multipliers
bracket the angle; the bracket is then narrowed by sampling at a
multiplier that maps it inside a monotone half-period of sin^2 and
pulling the confidence interval back through the exact inverse.  The
two-stage wrapper reruns the estimator with the error parameter retuned
by the first estimate, which turns a relative guarantee into a
square-root-of-the-count one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .action import ActionCoefficients, abundances, bd_action_from_counts
from .causet import CausalSet
from .circuits import build_oracle, pair_index_inverse
from .errors import InvalidParameter, StageOneZero, ZeroMarked
from .simulators import oracle_sign, oracle_truth

HALF_PI = math.pi / 2.0

# Bracketing constants: the scan stops once the hit rate at multiplier u
# clears STOP_FRACTION, which pins sin^2(u * x) into [0.2, 0.415] bands
# whose preimages give the bracket below.
STOP_FRACTION = 0.3
BRACKET_LO = 0.464       # asin(sqrt(0.2))
BRACKET_HI = 0.698       # asin(sqrt(0.415))
VIEW_HI = 0.94           # angle cap right after the view is chosen
ROUNDS_CAP = 60
CONFIDENCE_HALF_WIDTH = 0.065


def derived_stream(seed: int, *lanes: int) -> np.random.Generator:
    """Independent counter-based stream for (seed, lane...) tuples."""
    key = np.array([np.uint64(seed & (2**64 - 1)), 0], dtype=np.uint64)
    for lane in lanes:
        key[1] = np.uint64((int(key[1]) * 1_000_003 + lane + 1) & (2**64 - 1))
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class GroverModel:
    """Exact 2D-subspace rotation model of the Grover iteration."""

    theta: float

    def success_probability(self, iterations: int) -> float:
        return math.sin((2 * iterations + 1) * self.theta) ** 2


class CountingOracle:
    """Membership predicate over {0..N-1} with a query counter.

    The counter advances by one per Grover iteration, i.e. per oracle
    application inside the simulated search.
    """

    def __init__(self, n_space: int, predicate: Callable[[int], bool],
                 marked_count: int | None = None):
        if n_space < 1:
            raise InvalidParameter("search space must be nonempty")
        self.n_space = n_space
        self.predicate = predicate
        self.queries = 0
        self._marked_count = marked_count

    @classmethod
    def from_marked_array(cls, marked: np.ndarray) -> "CountingOracle":
        marked = np.asarray(marked, dtype=bool).ravel()
        return cls(len(marked), lambda h: bool(marked[h]), int(marked.sum()))

    @classmethod
    def synthetic(cls, n_space: int, marked_count: int) -> "CountingOracle":
        if not 0 <= marked_count <= n_space:
            raise InvalidParameter("marked count outside 0..N")
        return cls(n_space, lambda h: h < marked_count, marked_count)

    @property
    def marked_count(self) -> int:
        if self._marked_count is None:
            self._marked_count = sum(bool(self.predicate(h)) for h in range(self.n_space))
        return self._marked_count

    @cached_property
    def model(self) -> GroverModel:
        return GroverModel(math.asin(math.sqrt(self.marked_count / self.n_space)))


@dataclass(frozen=True)
class CountingParams:
    """Error/failure budget; delta is the per-stage failure probability."""

    epsilon: float
    zeta: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidParameter("epsilon must lie strictly inside (0, 1)")
        if not 0.0 < self.zeta < 1.0:
            raise InvalidParameter("zeta must lie strictly inside (0, 1)")

    @property
    def delta(self) -> float:
        return 1.0 - math.sqrt(1.0 - self.zeta)


def grover_sample(oracle: CountingOracle, iterations: int,
                  rng: np.random.Generator) -> int:
    """One simulated Grover run: 1 with probability sin^2((2j+1) theta)."""
    if iterations < 0:
        raise InvalidParameter("iteration count must be >= 0")
    p = oracle.model.success_probability(iterations)
    oracle.queries += iterations
    return int(rng.random() < p)


def _batch_hits(oracle: CountingOracle, iterations: int, count: int,
                rng: np.random.Generator, flip: bool) -> int:
    """count independent grover_sample draws at one iteration setting."""
    p = oracle.model.success_probability(iterations)
    if flip:
        p = 1.0 - p
    oracle.queries += iterations * count
    return int(rng.binomial(count, p))


def _multipliers(t_max: int):
    yield 1
    for t in range(1, t_max + 1):
        yield (1 << t) + 1


def _round_odd(value: float) -> int:
    u = int(round(value))
    return u + 1 - (u & 1) if u >= 1 else 1


def _pick_multiplier(a: float, b: float, ideal: float) -> tuple[int, int]:
    """Odd u near ideal mapping [a, b] inside one monotone half-period of sin^2.

    Returns (u, half_period_index).  Candidates are built by centering
    the scaled window inside nearby half-periods, then swept outward;
    a base window under pi/2 always exists as fallback since b < pi/2.
    """
    length = max(b - a, 1e-15)
    span = min(0.8, ideal * length)
    center_phase = (HALF_PI - span) / 2.0
    candidates: list[int] = []
    base_half = int(ideal * a / HALF_PI)
    for m in (base_half - 1, base_half, base_half + 1, base_half + 2):
        if m >= 0 and a > 0:
            candidates.append(_round_odd((m * HALF_PI + center_phase) / a))
    anchor = _round_odd(ideal)
    for off in range(0, 202, 2):
        candidates.extend((anchor - off, anchor + off))
    # A multiplier far below ideal would lack the resolution to shrink the
    # bracket this round, so such windows are not acceptable placements.
    floor_u = max(1.0, ideal / 2.0)
    for margin in (0.15, 0.05):
        for u in candidates:
            if u < floor_u:
                continue
            lo, hi = u * a, u * b
            if hi - lo > HALF_PI - 2 * margin:
                continue
            half = int(lo // HALF_PI)
            if lo - half * HALF_PI >= margin and (half + 1) * HALF_PI - hi >= margin:
                return u, half
    u = max(1, int((HALF_PI - 0.02) / b))
    return u - (1 - (u & 1)) if u > 1 else 1, 0


def _interval_from_probability(p_lo: float, p_hi: float, u: int, half: int) -> tuple[float, float]:
    """Exact preimage of a sin^2 confidence interval through multiplier u."""
    p_lo = min(max(p_lo, 0.0), 1.0)
    p_hi = min(max(p_hi, 0.0), 1.0)
    if half % 2 == 0:
        s_lo, s_hi = math.asin(math.sqrt(p_lo)), math.asin(math.sqrt(p_hi))
    else:
        s_lo, s_hi = math.acos(math.sqrt(p_hi)), math.acos(math.sqrt(p_lo))
    base = half * HALF_PI
    return (base + s_lo) / u, (base + s_hi) / u


def approx_count(oracle: CountingOracle, epsilon: float, delta: float,
                 rng: np.random.Generator) -> int:
    """Estimate K with |K_hat - K| < epsilon * K at confidence 1 - delta.

    Raises ZeroMarked when the geometric bracketing scan (the O(sqrt(N))
    pre-scan) never observes a marked outcome.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameter("epsilon must lie strictly inside (0, 1)")
    if not 0.0 < delta < 1.0:
        raise InvalidParameter("delta must lie strictly inside (0, 1)")
    n_space = oracle.n_space
    t_max = max(1, math.ceil(math.log2(max(2.0, 1.4 * math.sqrt(n_space))))) + 1
    levels = t_max + 2
    r_scan = math.ceil(36.1 * math.log(8.0 * (levels + 1) / delta))

    # View selection: hit rate at u=1 decides whether theta or its
    # complement is the small angle; the same draw seeds the scan level.
    hits = _batch_hits(oracle, 0, r_scan, rng, flip=False)
    marked_view = hits < r_scan // 2
    flip = not marked_view

    bracket = None
    prev_u = None
    for u in _multipliers(t_max):
        if u == 1:
            level_hits = hits if marked_view else r_scan - hits
        else:
            level_hits = _batch_hits(oracle, (u - 1) // 2, r_scan, rng, flip)
        if level_hits >= STOP_FRACTION * r_scan:
            hi = VIEW_HI if prev_u is None else min(VIEW_HI, BRACKET_HI / prev_u)
            bracket = (BRACKET_LO / u, hi)
            break
        prev_u = u
    if bracket is None:
        if marked_view:
            raise ZeroMarked(f"no marked outcome in the bracketing scan over N={n_space}")
        return n_space  # complement angle is zero: every item is marked

    a, b = bracket
    rounds_budget = ROUNDS_CAP
    delta_round = (delta / 2.0) / rounds_budget
    r_refine = math.ceil(math.log(2.0 / delta_round) / (2.0 * CONFIDENCE_HALF_WIDTH ** 2))
    w = math.sqrt(math.log(2.0 / delta_round) / (2.0 * r_refine))

    def count_window(lo_ang: float, hi_ang: float) -> float:
        return n_space * math.sin(hi_ang - lo_ang) * math.sin(hi_ang + lo_ang)

    for _ in range(rounds_budget):
        k_low = n_space * (math.sin(a) ** 2 if marked_view else math.cos(b) ** 2)
        window_target = max(0.42, 0.45 * epsilon * k_low)
        if count_window(a, b) <= window_target:
            break
        # Grow the multiplier geometrically but never beyond what the stop
        # condition needs; the final round then lands near the minimal u
        # and total queries stay proportional to it.
        length = b - a
        length_target = window_target / (n_space * max(math.sin(a + b), 1e-12))
        ideal = 0.8 / max(length_target, length / 3.0, 1e-15)
        ideal = min(ideal, 1.1 / length)
        u, half = _pick_multiplier(a, b, ideal)
        hits = _batch_hits(oracle, (u - 1) // 2, r_refine, rng, flip)
        p_hat = hits / r_refine
        x_lo, x_hi = _interval_from_probability(p_hat - w, p_hat + w, u, half)
        a2, b2 = max(a, x_lo), min(b, x_hi)
        if a2 > b2:  # confidence window missed the bracket; collapse inward
            mid = min(max((x_lo + x_hi) / 2.0, a), b)
            a2 = b2 = mid
        a, b = a2, b2

    x_mid = (a + b) / 2.0
    k_real = n_space * (math.sin(x_mid) ** 2 if marked_view else math.cos(x_mid) ** 2)
    return int(min(max(round(k_real), 0), n_space))


def approx_count_sqrt(oracle: CountingOracle, epsilon: float, zeta: float,
                      rng: np.random.Generator) -> int:
    """Two-stage counting: |K_hat - K| < epsilon * sqrt(K) at confidence 1 - zeta.

    Stage one runs at relative error epsilon; its estimate retunes the
    stage-two error parameter to epsilon * sqrt(1 - epsilon) / sqrt(K_hat_1).
    """
    params = CountingParams(epsilon, zeta)  # validates before any query
    delta = params.delta

    first = None
    for _ in range(2):  # one retry before giving up on stage one
        try:
            first = approx_count(oracle, epsilon, delta, rng)
        except ZeroMarked:
            first = None
            continue
        if first > 0:
            break
    if first is None:
        raise ZeroMarked("stage one found no marked items")
    if first == 0:
        raise StageOneZero("stage one returned 0 twice for a marked oracle")

    eps2 = epsilon * math.sqrt(1.0 - epsilon) / math.sqrt(first)
    return approx_count(oracle, eps2, delta, rng)


# -- end-to-end estimator ------------------------------------------------------------

@dataclass(frozen=True)
class AbundanceEstimate:
    k: int
    n_hat: int
    queries: int
    zero_flag: bool
    n_true: int | None = None

    def as_dict(self) -> dict:
        return {"k": self.k, "N_true": self.n_true, "N_hat": self.n_hat,
                "queries": self.queries, "zero_flag": self.zero_flag}


@dataclass(frozen=True)
class ActionEstimate:
    n: int
    d: int
    epsilon: float
    delta: float
    seed: int
    oracle_mode: str
    per_k: tuple[AbundanceEstimate, ...]
    s_hat: float
    width_qubits: int
    s_true: float | None = None
    confidence: float = 0.0

    @property
    def total_queries(self) -> int:
        return sum(e.queries for e in self.per_k)

    def as_dict(self) -> dict:
        return {
            "n": self.n, "d": self.d, "epsilon": self.epsilon, "delta": self.delta,
            "seed": self.seed, "oracle_mode": self.oracle_mode,
            "per_k": [e.as_dict() for e in self.per_k],
            "S_hat": self.s_hat, "S_true": self.s_true,
            "width_qubits": self.width_qubits, "confidence": self.confidence,
        }


def protocol_width(n: int) -> int:
    """Qubit count of the full search protocol: data and index registers
    plus the oracle work registers (state-prep ancillae are reused)."""
    ceil_2log = (n * n - 1).bit_length() if n > 1 else 0
    floor_log = n.bit_length() - 1
    return 2 * n + ceil_2log + 2 * floor_log + 4


def predicate_oracle(c: CausalSet, k: int) -> CountingOracle:
    """Membership over pair indices h straight from the classical truth table."""
    return CountingOracle.from_marked_array(oracle_truth(c, k).ravel())


def circuit_oracle(c: CausalSet, k: int) -> CountingOracle:
    """Membership answered by reversible simulation of the oracle circuit."""
    circ = build_oracle(c.n, k)
    marked = np.zeros(c.n * c.n, dtype=bool)
    for h in range(c.n * c.n):
        i, j = pair_index_inverse(h, c.n)
        marked[h] = oracle_sign(circ, c.row_string(i), c.col_string(j)) == -1
    return CountingOracle.from_marked_array(marked)


def estimate_bd_action(c: CausalSet, coeff: ActionCoefficients, epsilon: float,
                       delta: float, seed: int = 0, oracle_mode: str = "predicate",
                       include_exact: bool | None = None) -> ActionEstimate:
    """Run two-stage counting once per abundance layer over the n^2 pair
    space and combine the estimates into the action.

    Search-space size is exactly n^2 (diagonal and unrelated pairs kept).
    A scan that finds no marked pair reports the layer as 0 with a flag.
    Per-layer randomness comes from independent streams derived from the
    seed, one lane per k.
    """
    if oracle_mode not in ("predicate", "circuit"):
        raise InvalidParameter(f"unknown oracle mode {oracle_mode!r}")
    make = predicate_oracle if oracle_mode == "predicate" else circuit_oracle
    if include_exact is None:
        include_exact = c.n <= 512
    exact = abundances(c, kmax=coeff.n_d - 1) if include_exact else None

    per_k = []
    for k in range(coeff.n_d):
        oracle = make(c, k)
        rng = derived_stream(seed, k)
        zero = False
        try:
            n_hat = approx_count_sqrt(oracle, epsilon, delta, rng)
        except (ZeroMarked, StageOneZero):
            n_hat, zero = 0, True
        per_k.append(AbundanceEstimate(
            k=k, n_hat=n_hat, queries=oracle.queries, zero_flag=zero,
            n_true=exact.counts[k] if exact else None))

    s_hat = bd_action_from_counts(c.n, [e.n_hat for e in per_k], coeff)
    s_true = bd_action_from_counts(c.n, exact.counts, coeff) if exact else None
    return ActionEstimate(
        n=c.n, d=coeff.d, epsilon=epsilon, delta=delta, seed=seed,
        oracle_mode=oracle_mode, per_k=tuple(per_k), s_hat=s_hat,
        width_qubits=protocol_width(c.n), s_true=s_true,
        confidence=(1.0 - delta) ** coeff.n_d)
