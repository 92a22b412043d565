"""Approximate 4D action estimation by simple random sampling of related pairs.

A sample of K pairs is drawn uniformly without replacement from the N
related pairs, so the per-volume tallies follow a multivariate
hypergeometric law.  Three standard-error figures are produced: the
full plug-in estimator with every covariance cross term, the
subadditivity bound, and the closed-form worst-case bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .action import FOUR_D_PREFACTOR, FOUR_D_WEIGHTS
from .causet import CausalSet, _popcount_rows, _rng
from .errors import EmptyRelation, InvalidParameter, KTooLarge

# Squared weights and the six cross coefficients of the variance expansion
# of -K_0 + 9 K_1 - 16 K_2 + 8 K_3 (pairs in index order 01,02,03,12,13,23).
_SQ_WEIGHTS = (1, 81, 256, 64)
_CROSS = {(0, 1): 18.0, (0, 2): -32.0, (0, 3): 16.0,
          (1, 2): 288.0, (1, 3): -144.0, (2, 3): 256.0}


@dataclass(frozen=True)
class SampleResult:
    """Tallies from one without-replacement sample of related pairs."""

    n: int
    K: int
    counts: tuple[int, ...]
    N: int

    def __post_init__(self):
        if not 1 <= self.K <= self.N:
            raise KTooLarge(f"sample size {self.K} outside 1..{self.N}")
        if sum(self.counts) > self.K:
            raise InvalidParameter("tallies exceed the sample size")


@dataclass(frozen=True)
class SampledEstimate:
    S_hat: float
    se_full: float
    se_subadditive: float
    se_simple_bound: float


def edge_volumes(c: CausalSet) -> np.ndarray:
    """Inclusive volume of every related pair, in row-major edge order."""
    if c.related_pairs == 0:
        return np.zeros(0, dtype=np.int64)
    rows = c.edges[:, 0] - 1
    cols = c.edges[:, 1] - 1
    return _popcount_rows(c._row_bits[rows] & c._col_bits[cols])


def sample_pairs(c: CausalSet, K: int, seed: int = 0, kmax: int = 3) -> SampleResult:
    """Uniform without-replacement sample of K related pairs; counts[k]
    tallies sampled pairs of inclusive volume k+2."""
    N = c.related_pairs
    if N == 0:
        raise EmptyRelation("causal set has no related pairs")
    if not 1 <= K <= N:
        raise KTooLarge(f"K={K} outside 1..{N}")
    vols = edge_volumes(c)
    picked = _rng(seed).choice(N, size=K, replace=False)
    hist = np.bincount(vols[picked], minlength=kmax + 3)[:kmax + 3]
    return SampleResult(n=c.n, K=K, counts=tuple(int(x) for x in hist[2:]), N=N)


def resample_counts(c: CausalSet, K: int, trials: int, seed: int = 0,
                    kmax: int = 3) -> np.ndarray:
    """(trials, kmax+1) tally matrix over independent resamples.

    Vectorized equivalent of repeated sample_pairs calls: each row ranks
    i.i.d. keys over the edge list and keeps the K smallest.
    """
    N = c.related_pairs
    if N == 0:
        raise EmptyRelation("causal set has no related pairs")
    if not 1 <= K <= N:
        raise KTooLarge(f"K={K} outside 1..{N}")
    vols = edge_volumes(c)
    klass = np.where((vols >= 2) & (vols <= kmax + 2), vols - 2, kmax + 1)
    rng = _rng(seed)
    out = np.empty((trials, kmax + 2), dtype=np.int64)
    chunk = max(1, 8_000_000 // max(N, 1))
    for start in range(0, trials, chunk):
        size = min(chunk, trials - start)
        keys = rng.random((size, N))
        picked = np.argpartition(keys, K - 1, axis=1)[:, :K]
        sampled = klass[picked]
        offsets = np.arange(size)[:, None] * (kmax + 2)
        flat = np.bincount((sampled + offsets).ravel(), minlength=size * (kmax + 2))
        out[start:start + size] = flat.reshape(size, kmax + 2)
    return out[:, :kmax + 1]


def _fpc(N: int, K: int) -> float:
    """Finite-population correction sqrt((N-K)/(N-1)); 0 for a full census."""
    if N <= 1 or K >= N:
        return 0.0
    return math.sqrt((N - K) / (N - 1))


def variance_linear_combination(N: int, K: int, n_k: "np.ndarray | list") -> float:
    """Hypergeometric variance of -K_0 + 9 K_1 - 16 K_2 + 8 K_3 with the
    true per-class totals N_k plugged in."""
    p = [nk / N for nk in n_k[:4]]
    bracket = sum(w * pk * (1.0 - pk) for w, pk in zip(_SQ_WEIGHTS, p))
    bracket += sum(coef * p[i] * p[j] for (i, j), coef in _CROSS.items())
    if N <= 1:
        return 0.0
    return K * (N - K) / (N - 1) * bracket


def estimate_sampled(s: SampleResult, length_ratio: float = 1.0) -> SampledEstimate:
    """Point estimate of the 4D action plus all three standard-error figures."""
    scale = FOUR_D_PREFACTOR * length_ratio * length_ratio
    blowup = s.N / s.K
    bracket = s.n + sum(w * blowup * kk for w, kk in zip(FOUR_D_WEIGHTS, s.counts))
    s_hat = scale * bracket

    p = [kk / s.K for kk in s.counts[:4]]
    fpc = _fpc(s.N, s.K)
    front = scale * s.N / math.sqrt(s.K) * fpc

    inner = sum(w * pk * (1.0 - pk) for w, pk in zip(_SQ_WEIGHTS, p))
    inner += sum(coef * p[i] * p[j] for (i, j), coef in _CROSS.items())
    se_full = front * math.sqrt(max(inner, 0.0))

    sub = sum(abs(w) * math.sqrt(max(pk * (1.0 - pk), 0.0))
              for w, pk in zip(FOUR_D_WEIGHTS, p))
    se_subadditive = front * sub

    se_simple = 34.0 * 2.0 / math.sqrt(6.0) * length_ratio * length_ratio \
        * s.N / math.sqrt(s.K) * fpc
    return SampledEstimate(S_hat=s_hat, se_full=se_full,
                           se_subadditive=se_subadditive,
                           se_simple_bound=se_simple)
