"""Order-interval abundances and the Benincasa-Dowker action.

The abundance N_k counts ordered pairs whose inclusive order interval
holds exactly k+2 elements.  Three exact backends are provided: a
streaming popcount scan that never materializes the volume matrix, a
schoolbook integer matrix square, and a Strassen square.  All three
must agree entry for entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .causet import CausalSet, volume_row
from .errors import InsufficientAbundances, InvalidParameter

ABUNDANCE_BACKENDS = ("naive", "matrix", "strassen")

# 4D weights on (N_0, N_1, N_2, N_3) and the global prefactor, as printed.
FOUR_D_WEIGHTS = (-1, 9, -16, 8)
FOUR_D_PREFACTOR = 4.0 / math.sqrt(6.0)

STRASSEN_BASE = 64  # below this, fall through to the library matmul


@dataclass(frozen=True)
class AbundanceVector:
    """Counts N_0..N_kmax plus the related-pair total |E|."""

    n: int
    counts: tuple[int, ...]
    related_pairs: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise InvalidParameter("abundances must be nonnegative")
        total = sum(self.counts)
        if total > self.related_pairs:
            raise InvalidParameter("abundances exceed the related-pair total")
        if len(self.counts) >= max(self.n - 1, 1) and total != self.related_pairs:
            raise InvalidParameter("full histogram must sum to the related-pair total")


@dataclass(frozen=True)
class VolumeMatrix:
    """Matrix of inclusive discrete volumes: square of the reflexive adjacency."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix.setflags(write=False)


@dataclass(frozen=True)
class ActionCoefficients:
    """Dimension data for the action.

    The 4D preset evaluates the four-dimensional formula directly with
    its printed weights.  The general form needs alpha, beta, and the
    n_d layer coefficients C_1..C_{n_d}, which the caller supplies (only
    the 4D constants ship built in).
    """

    d: int
    n_d: int
    length_ratio: float = 1.0
    alpha: float | None = None
    beta: float | None = None
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParameter("dimension must be >= 1")
        expected = self.d // 2 + 2 if self.d % 2 == 0 else (self.d - 1) // 2 + 2
        if self.n_d != expected:
            raise InvalidParameter(f"n_d must be {expected} for d={self.d}")
        if self.length_ratio <= 0:
            raise InvalidParameter("length_ratio must be positive")
        if not self.is_four_dim_preset:
            if self.alpha is None or self.beta is None:
                raise InvalidParameter("general form needs alpha and beta")
            if self.alpha == 0:
                raise InvalidParameter("alpha must be nonzero")
            if len(self.coeffs) != self.n_d:
                raise InvalidParameter(f"need exactly {self.n_d} layer coefficients")

    @classmethod
    def four_dim_preset(cls, length_ratio: float = 1.0) -> "ActionCoefficients":
        return cls(d=4, n_d=4, length_ratio=length_ratio)

    @property
    def is_four_dim_preset(self) -> bool:
        return self.alpha is None and self.beta is None and not self.coeffs


def _tally(values: np.ndarray, kmax: int) -> tuple[int, ...]:
    """Histogram of inclusive volumes v into counts[k] with v = k+2."""
    hist = np.bincount(values.ravel(), minlength=kmax + 3)
    return tuple(int(x) for x in hist[2:kmax + 3])


def abundances(c: CausalSet, kmax: int = 3, backend: str = "matrix") -> AbundanceVector:
    """Exact N_0..N_kmax.  All backends return identical vectors."""
    if kmax < 0:
        raise InvalidParameter("kmax must be >= 0")
    if backend == "naive":
        # Stream one row of volumes at a time; no n x n product is stored.
        hist = np.zeros(kmax + 3, dtype=np.int64)
        for i in range(c.n):
            vals = volume_row(c, i + 1)[c.adjacency[i] != 0]
            vals = vals[vals <= kmax + 2]
            hist += np.bincount(vals, minlength=kmax + 3)[:kmax + 3]
        counts = tuple(int(x) for x in hist[2:kmax + 3])
    elif backend in ("matrix", "strassen"):
        vbar = volume_matrix(c, "strassen" if backend == "strassen" else "schoolbook")
        counts = _tally(vbar.matrix, kmax)
    else:
        raise InvalidParameter(f"unknown backend {backend!r}; expected one of {ABUNDANCE_BACKENDS}")
    return AbundanceVector(n=c.n, counts=counts, related_pairs=c.related_pairs)


def volume_histogram(c: CausalSet, backend: str = "matrix") -> AbundanceVector:
    """Full histogram N_0..N_{n-2}; costs nothing beyond the kmax=3 run."""
    return abundances(c, kmax=max(c.n - 2, 0), backend=backend)


def volume_matrix(c: CausalSet, method: str = "schoolbook") -> VolumeMatrix:
    """Exact integer square of the reflexive adjacency matrix."""
    bar = c.reflexive_adjacency.astype(np.int64)
    if method == "schoolbook":
        return VolumeMatrix(bar @ bar)
    if method == "strassen":
        return VolumeMatrix(strassen_square(bar))
    raise InvalidParameter(f"unknown method {method!r}")


def _strassen(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    if n <= STRASSEN_BASE:
        return a @ b
    h = n // 2
    a11, a12, a21, a22 = a[:h, :h], a[:h, h:], a[h:, :h], a[h:, h:]
    b11, b12, b21, b22 = b[:h, :h], b[:h, h:], b[h:, :h], b[h:, h:]
    m1 = _strassen(a11 + a22, b11 + b22)
    m2 = _strassen(a21 + a22, b11)
    m3 = _strassen(a11, b12 - b22)
    m4 = _strassen(a22, b21 - b11)
    m5 = _strassen(a11 + a12, b22)
    m6 = _strassen(a21 - a11, b11 + b12)
    m7 = _strassen(a12 - a22, b21 + b22)
    out = np.empty((n, n), dtype=a.dtype)
    out[:h, :h] = m1 + m4 - m5 + m7
    out[:h, h:] = m3 + m5
    out[h:, :h] = m2 + m4
    out[h:, h:] = m1 - m2 + m3 + m6
    return out


def strassen_square(matrix: np.ndarray) -> np.ndarray:
    """Square an integer matrix, padding to the next power of two."""
    n = matrix.shape[0]
    size = 1 << max(n - 1, 1).bit_length() if n & (n - 1) else n
    if size == n:
        return _strassen(matrix, matrix)
    padded = np.zeros((size, size), dtype=matrix.dtype)
    padded[:n, :n] = matrix
    return _strassen(padded, padded)[:n, :n]


def bd_action_from_counts(n: int, counts: Sequence[float], coeff: ActionCoefficients) -> float:
    """Action in units of hbar from raw abundance values (exact or estimated).

    Integer or float inputs both work; the dimensionful prefactor is applied
    last so the bracketed combination stays exact for integer counts.
    """
    if len(counts) < coeff.n_d:
        raise InsufficientAbundances(
            f"need {coeff.n_d} abundances for d={coeff.d}, got {len(counts)}")
    lr = coeff.length_ratio
    if coeff.is_four_dim_preset:
        bracket = n + sum(w * c for w, c in zip(FOUR_D_WEIGHTS, counts))
        return FOUR_D_PREFACTOR * lr * lr * bracket
    weighted = sum(ck * nk for ck, nk in zip(coeff.coeffs, counts))
    bracket = n + (coeff.beta / coeff.alpha) * weighted
    return -coeff.alpha * lr ** (coeff.d - 2) * bracket


def bd_action(ab: AbundanceVector, coeff: ActionCoefficients) -> float:
    return bd_action_from_counts(ab.n, ab.counts, coeff)


# -- coefficient config file -----------------------------------------------------
#
# Lines of key=value: d, n_d, alpha, beta, C (comma-separated), length_ratio.

def parse_coefficients(text: str) -> ActionCoefficients:
    fields: dict[str, str] = {}
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if "=" not in ln:
            raise InvalidParameter(f"bad coefficient line {ln!r}")
        key, _, value = ln.partition("=")
        fields[key.strip()] = value.strip()
    try:
        d = int(fields["d"])
        n_d = int(fields["n_d"])
        alpha = float(fields["alpha"])
        beta = float(fields["beta"])
        coeffs = tuple(float(x) for x in fields["C"].split(","))
        lr = float(fields.get("length_ratio", "1.0"))
    except (KeyError, ValueError) as exc:
        raise InvalidParameter(f"coefficient file missing or malformed field: {exc}") from None
    return ActionCoefficients(d=d, n_d=n_d, length_ratio=lr, alpha=alpha,
                              beta=beta, coeffs=coeffs)


def load_coefficients(path) -> ActionCoefficients:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_coefficients(fh.read())
