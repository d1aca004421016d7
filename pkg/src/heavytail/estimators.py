"""Mean estimators for heavy-tailed data and the main/tail split of a sample."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np


class Centering(str, Enum):
    ANALYTIC = "ANALYTIC"
    NONE = "NONE"


@dataclass(frozen=True)
class Decomposition:
    b: float
    main_parts: np.ndarray
    tail_parts: np.ndarray
    main_avg: float
    tail_avg: float
    centering_mode: Centering

    def to_csv(self, xs, fh) -> None:
        fh.write("x,main,tail\n")
        for x, y, z in zip(xs, self.main_parts, self.tail_parts):
            fh.write(f"{float(x)!r},{float(y)!r},{float(z)!r}\n")


@dataclass(frozen=True)
class HillEstimate:
    k: int
    index: float


def _as_array(xs):
    return np.asarray(xs, dtype=np.float64).ravel()


def sample_mean(xs) -> float:
    """Arithmetic mean; the sum is exactly rounded (``math.fsum``)."""
    x = _as_array(xs)
    if x.size == 0:
        raise ValueError("sample_mean of an empty sequence")
    return math.fsum(x) / x.size


def decompose(xs, b: float, centers: Optional[tuple[float, float]] = None) -> Decomposition:
    """Split each ``x`` into the part with ``|x| <= b`` and the part beyond ``b``.

    With ``centers = (mean_inside, mean_outside)`` the parts are centered by
    those expectations (ANALYTIC); otherwise they are left raw (NONE).
    """
    if not b > 0:
        raise ValueError(f"truncation level must be positive, got {b}")
    x = _as_array(xs)
    inside = np.abs(x) <= b
    main = np.where(inside, x, 0.0)
    tail = np.where(inside, 0.0, x)
    mode = Centering.NONE
    if centers is not None:
        main = main - centers[0]
        tail = tail - centers[1]
        mode = Centering.ANALYTIC
    n = max(x.size, 1)
    return Decomposition(
        b=float(b),
        main_parts=main,
        tail_parts=tail,
        main_avg=math.fsum(main) / n,
        tail_avg=math.fsum(tail) / n,
        centering_mode=mode,
    )


def bubeck_thresholds(n: int, b_scale: float, delta: float, alpha: float) -> np.ndarray:
    """``b_k = (b_scale * k / log(1/delta))**(1/(1+alpha))`` for k = 1..n."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    k = np.arange(1, n + 1, dtype=np.float64)
    return (b_scale * k / math.log(1 / delta)) ** (1 / (1 + alpha))


def truncated_mean_bubeck(xs, b_scale: float, delta: float, alpha: float) -> float:
    """Truncated empirical mean with a threshold growing in the index.

    ``b_scale`` should dominate ``E|X|**(1+alpha)``; that is not checked
    because the moment is usually unknown.
    """
    x = _as_array(xs)
    if x.size == 0:
        raise ValueError("truncated mean of an empty sequence")
    keep = np.abs(x) <= bubeck_thresholds(x.size, b_scale, delta, alpha)
    return math.fsum(x[keep]) / x.size


def huber_score(x: np.ndarray, mu: float, H: float) -> float:
    return math.fsum(np.clip(x - mu, -H, H))


def huber_estimate(xs, H: float, tol: float = 1e-10) -> float:
    """Root of ``mu -> sum(clip(x - mu, -H, H))`` by bisection.

    The score is nonincreasing in ``mu``. When it vanishes on an interval the
    midpoint of that interval is returned.
    """
    x = _as_array(xs)
    if x.size == 0:
        raise ValueError("huber_estimate of an empty sequence")
    if not H > 0:
        raise ValueError(f"H must be positive, got {H}")
    lo0, hi0 = float(x.min()) - H, float(x.max()) + H

    def bisect(positive_side):
        # positive_side(s) is True on the left part of the bracket
        lo, hi = lo0, hi0
        s_lo = huber_score(x, lo, H)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            s_mid = huber_score(x, mid, H)
            assert s_mid <= s_lo + 1e-9 * x.size * H, "score must be nonincreasing"
            if positive_side(s_mid):
                lo, s_lo = mid, s_mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    left = bisect(lambda s: s > 0)    # sup{mu: score > 0}
    right = bisect(lambda s: s >= 0)  # sup{mu: score >= 0}
    return 0.5 * (left + right)


def huber_threshold(mu_alpha: float, n: int, delta: float, alpha: float) -> float:
    """``H = (mu_alpha n / log(2/delta))**(1/(1+alpha))``."""
    return (mu_alpha * n / math.log(2 / delta)) ** (1 / (1 + alpha))


def default_hill_k(n: int) -> int:
    return max(1, math.ceil(n**0.6))


def hill_estimate(xs, k: Optional[int] = None) -> HillEstimate:
    """Hill tail index from the ``k`` largest magnitudes ``|x|``."""
    v = np.abs(_as_array(xs))
    v = v[v > 0]
    if k is None:
        k = min(default_hill_k(v.size), v.size - 1)
    if not 1 <= k < v.size:
        raise ValueError(f"k must satisfy 1 <= k < {v.size} (positive magnitudes), got {k}")
    top = -np.partition(-v, k)[: k + 1]
    top.sort()
    top = top[::-1]
    h = math.fsum(np.log(top[:k])) / k - math.log(top[k])
    if not h > 0:
        raise ValueError("top order statistics are tied; Hill index undefined")
    return HillEstimate(k=int(k), index=1.0 / h)


def hill_curve(xs, ks: Sequence[int]) -> list[HillEstimate]:
    return [hill_estimate(xs, k) for k in ks]


def estimator_record(estimator: str, n: int, parameters: dict, value: float) -> dict:
    return {"estimator": estimator, "n": int(n), "parameters": parameters, "value": value}
