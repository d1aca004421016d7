"""Rate constants, thresholds and block partitions for sample means of
phi-mixing heavy-tailed sequences.

Everything here is a deterministic function of its arguments. ``log`` is
the natural logarithm throughout.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

INDEPENDENT = math.inf
"""Decay exponent meaning "no dependence" (r = infinity, C ignored)."""

# blocking parameters fixed by the construction (M large, epsilon <= 1/M)
BLOCK_M = 2
BLOCK_EPSILON = 0.5

_PHI_TERMS = 1000
_EPS_GRID = np.logspace(-4.0, 4.0, 400)


@dataclass(frozen=True)
class MixingDecay:
    """Envelope ``phi(m) <= C (m+1)**-r`` on the mixing coefficients."""

    C: float = 0.0
    r: float = INDEPENDENT

    def __post_init__(self):
        if not math.isfinite(self.C) or self.C < 0:
            raise ValueError(f"C must be finite and >= 0, got {self.C}")
        if math.isnan(self.r) or self.r <= 2:
            raise ValueError(f"r must be > 2 (or INDEPENDENT), got {self.r}")
        if self.independent and self.C != 0:
            object.__setattr__(self, "C", 0.0)

    @property
    def independent(self) -> bool:
        return math.isinf(self.r)

    @property
    def phi_sum(self) -> float:
        return phi_sum(self)


@dataclass(frozen=True)
class MomentSpec:
    """Moment condition: ``nu_alpha = max_n E|X_n|**(1+alpha)`` is finite."""

    alpha: float
    alpha_prime: float
    nu_alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.alpha_prime <= self.alpha:
            raise ValueError(
                f"alpha_prime must lie in [0, alpha], got {self.alpha_prime}"
            )
        if not (math.isfinite(self.nu_alpha) and self.nu_alpha > 0):
            raise ValueError(f"nu_alpha must be positive and finite, got {self.nu_alpha}")


@dataclass(frozen=True)
class RateConstants:
    alpha: float
    alpha_prime: float
    nu_alpha: float
    r: float
    C: float
    beta: float
    gamma: float
    lambda_: float
    kappa: float
    phi_sum: float
    c_alpha: float
    a1: float
    a2: float
    log_A: float
    delta: float
    p: float
    c: float
    c0: float
    n0: Optional[int]
    n1: Optional[int]

    @property
    def A(self) -> float:
        """``exp(log_A)``; ``inf`` when it overflows."""
        try:
            return math.exp(self.log_A)
        except OverflowError:
            return math.inf

    def report(self) -> dict:
        """Flat key/value report. ``A_raw`` is None when it overflows a float."""
        A = self.A
        return {
            "beta": self.beta,
            "gamma": self.gamma,
            "lambda": self.lambda_,
            "kappa": self.kappa,
            "phi_sum": self.phi_sum,
            "c_alpha": self.c_alpha,
            "a1": self.a1,
            "a2": self.a2,
            "A_raw": A if math.isfinite(A) else None,
            "log_A": self.log_A if math.isfinite(self.log_A) else None,
            "p": self.p,
            "c": self.c,
            "c0": self.c0,
            "n0": self.n0,
            "n1": self.n1,
        }

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BlockPartition:
    """Alternating big/small blocks over positions ``0..n-1`` (half-open ranges)."""

    n: int
    m: int
    l: int
    m_raw: float
    l_raw: float
    xi_ranges: list
    eta_ranges: list
    remainder_range: range
    M: int = BLOCK_M
    epsilon: float = BLOCK_EPSILON


def phi_sum(decay: MixingDecay) -> float:
    """Sum over m >= 1 of ``sqrt(C (m+1)**-r)`` = ``sqrt(C) * sum_{j>=2} j**(-r/2)``.

    Terms up to ``j = _PHI_TERMS - 1`` are summed directly; the remaining
    tail is the integral plus Euler-Maclaurin corrections through the
    third derivative, whose truncation error is below 1e-20 at this cutoff.
    """
    if decay.independent or decay.C == 0:
        return 0.0
    s = decay.r / 2.0
    K = _PHI_TERMS
    j = np.arange(K - 1, 1, -1, dtype=np.float64)  # smallest terms first
    head = math.fsum(j**-s)
    tail = (
        K ** (1 - s) / (s - 1)
        + 0.5 * K**-s
        + s * K ** (-s - 1) / 12
        - s * (s + 1) * (s + 2) * K ** (-s - 3) / 720
    )
    return math.sqrt(decay.C) * (head + tail)


def _f_eps(eps, alpha, phi):
    eps = np.asarray(eps, dtype=np.float64)
    shrink = 1.0 - 1.0 / (1.0 + eps)
    return 2.0 + eps + (1.0 + 4.0 * phi) / shrink**2 * 4.0 / (1.0 - alpha) ** 2


def moment_factor(eps, alpha: float, phi: float):
    """The factor f(eps) multiplying sum E|Z_k|^(1+alpha) in the moment inequality."""
    return _f_eps(eps, alpha, phi)


def _golden_min(f, a, b, rtol=1e-12):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > rtol * (abs(c) + abs(d)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def c_alpha_argmin(alpha: float, phi: float) -> tuple[float, float]:
    """Return ``(eps*, c_alpha)`` minimizing :func:`moment_factor` over eps > 0."""
    if not 0 < alpha < 1:
        raise ValueError(
            f"alpha must lie in (0, 1), got {alpha}; "
            "see c_alpha_iid_finite_variance() for the alpha = 1 constant"
        )
    if phi < 0 or not math.isfinite(phi):
        raise ValueError(f"phi must be finite and >= 0, got {phi}")
    values = _f_eps(_EPS_GRID, alpha, phi)
    i = int(np.argmin(values))
    lo = _EPS_GRID[max(i - 1, 0)] if i > 0 else _EPS_GRID[0] / 10
    hi = _EPS_GRID[min(i + 1, len(_EPS_GRID) - 1)]
    eps, value = _golden_min(lambda e: float(_f_eps(e, alpha, phi)), lo, hi)
    return eps, value


def c_alpha(alpha: float, phi: float) -> float:
    return c_alpha_argmin(alpha, phi)[1]


def c_alpha_iid_finite_variance() -> float:
    """Moment-inequality constant for independent data with finite variance (alpha = 1)."""
    return 0.25


def exponents(alpha: float, alpha_prime: float, r: float) -> tuple[float, float, float, float]:
    """``(beta, gamma, lambda, kappa)``; the r -> infinity limits when r is INDEPENDENT."""
    if math.isinf(r):
        base = alpha / (1 + alpha)
        return base, base, 1 / (1 + alpha), 1 / (1 + alpha)
    den = (1 + alpha) * (1 + r)
    base = alpha / (1 + alpha)
    # written as offsets from alpha/(1+alpha) so gamma <= base <= beta survives rounding
    return (
        base + (1 - alpha) / den,
        base - (alpha - alpha_prime) / den,
        (r - 1) / den,
        (alpha + r) / den,
    )


def _log_A(decay: MixingDecay) -> float:
    if decay.C == 0:
        return 0.25
    try:
        return 0.25 + math.sqrt(math.e) * decay.C * 4.0**decay.r
    except OverflowError:
        return math.inf


def _first_true(pred, limit=1 << 62):
    """Smallest integer n >= 1 with pred(n) true, for a monotone pred; None past ``limit``."""
    if pred(1):
        return 1
    hi = 2
    while not pred(hi):
        if hi >= limit:
            return None
        hi *= 2
    lo = hi // 2  # pred(lo) false
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def rate_constants(
    decay: MixingDecay,
    moments: MomentSpec,
    delta: float,
    c: Optional[float] = None,
) -> RateConstants:
    """Fill every derived constant. ``c=None`` uses ``c = c0``."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if c is not None and not (c > 0 and math.isfinite(c)):
        raise ValueError(f"c must be positive, got {c}")
    alpha, alpha_p, nu = moments.alpha, moments.alpha_prime, moments.nu_alpha
    beta, gamma, lam, kappa = exponents(alpha, alpha_p, decay.r)
    phi = phi_sum(decay)
    ca = c_alpha(alpha, phi)
    log_inv_delta = math.log(1 / delta)
    p = 2 * log_inv_delta
    log_A = _log_A(decay)
    c0 = 1 + (math.log(4) + log_A) / log_inv_delta
    if c is None:
        c = c0
    a1 = math.sqrt(3 * c * nu * (1 + 4 * phi))
    a2 = 2 * (ca * nu) ** (1 / (1 + alpha))

    consts = RateConstants(
        alpha=alpha, alpha_prime=alpha_p, nu_alpha=nu, r=decay.r, C=decay.C,
        beta=beta, gamma=gamma, lambda_=lam, kappa=kappa, phi_sum=phi,
        c_alpha=ca, a1=a1, a2=a2, log_A=log_A, delta=delta, p=p, c=c, c0=c0,
        n0=None, n1=None,
    )

    n0 = _first_true(lambda n: theta_star(n, consts) <= 2 * (p / n) ** kappa)

    n1 = None
    expo = _tail_exponent(consts)
    if expo > 0:
        target = delta / 2
        n1 = _first_true(lambda n: p**-alpha * (p / n) ** expo <= target, limit=1 << 1000)

    return RateConstants(**{**consts.as_dict(), "n0": n0, "n1": n1})


def _tail_exponent(k: RateConstants) -> float:
    if math.isinf(k.r):
        return 0.0
    return (k.alpha - k.alpha_prime) / (1 + k.r)


def truncation_level(n: int, k: RateConstants) -> float:
    """``b_n = (n/p)**lambda``."""
    return (n / k.p) ** k.lambda_


def main_threshold(n: int, k: RateConstants) -> float:
    return k.a1 * (k.p / n) ** k.beta


def tail_threshold(n: int, k: RateConstants) -> float:
    return k.a2 * (k.p / n) ** k.gamma


def deviation_threshold(n: int, k: RateConstants) -> float:
    """``a1 (p/n)**beta + a2 (p/n)**gamma``."""
    return main_threshold(n, k) + tail_threshold(n, k)


def theorem1_bound_raw(n: int, k: RateConstants) -> float:
    """Unclamped ``2 A delta**c + p**-alpha (p/n)**((alpha-alpha')/(1+r))``; may be inf."""
    log_first = math.log(2) + k.log_A + k.c * math.log(k.delta)
    first = math.exp(log_first) if log_first < 709 else math.inf
    return first + k.p**-k.alpha * (k.p / n) ** _tail_exponent(k)


def theorem1_bound(n: int, k: RateConstants) -> float:
    return min(1.0, theorem1_bound_raw(n, k))


def theta_star(n: int, k: RateConstants) -> float:
    """Maximizer of the exponential-moment exponent in the main-part bound."""
    delta_n = main_threshold(n, k)
    b = truncation_level(n, k)
    return delta_n / (3 * k.nu_alpha * (1 + 4 * k.phi_sum) * b ** (1 - k.alpha))


def block_partition(n: int, k: RateConstants) -> BlockPartition:
    if n < 2:
        raise ValueError(f"block partition needs n >= 2, got {n}")
    if math.isinf(k.r):
        raise ValueError("block partition is vacuous for independent data")
    M = BLOCK_M
    base = n / k.p
    m_raw = base ** (1 / (k.r + 1)) / M**2
    l_raw = M**2 * math.log(1 / k.delta) * base ** (k.r / (k.r + 1))
    m = max(1, math.floor(m_raw + 0.5))
    l = n // (2 * m)
    xi = [range(2 * i * m, (2 * i + 1) * m) for i in range(l)]
    eta = [range((2 * i + 1) * m, (2 * i + 2) * m) for i in range(l)]
    return BlockPartition(
        n=n, m=m, l=l, m_raw=m_raw, l_raw=l_raw,
        xi_ranges=xi, eta_ranges=eta, remainder_range=range(2 * l * m, n),
    )
