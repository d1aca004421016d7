"""Reproducible heavy-tailed samplers, i.i.d. and Markov-modulated.

A path position ``k`` consumes exactly ``DRAWS_PER_STEP`` uniforms from a
counter-based stream keyed by ``(seed, stream)``: draw 0 drives the
Markov state, draw 1 the magnitude and draw 2 the sign. Any prefix of a
path is therefore the shorter path with the same key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate, special

from . import kernels
from .bounds import INDEPENDENT, MixingDecay

DRAWS_PER_STEP = 3
MAX_BRUTE_FORCE_STATES = 20


class Kind(str, Enum):
    SYMMETRIC_PARETO = "SYMMETRIC_PARETO"
    PARETO = "PARETO"
    STUDENT_T = "STUDENT_T"


@dataclass(frozen=True)
class TailDistribution:
    """``X = location + scale * W`` with W a standard tail law.

    PARETO: W >= 1 with density ``a w**(-a-1)``. SYMMETRIC_PARETO: a random
    sign times that. STUDENT_T: W has ``tail_exponent`` degrees of freedom.
    """

    kind: Kind
    tail_exponent: float
    scale: float = 1.0
    location: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.tail_exponent > 1:
            raise ValueError(f"tail exponent must be > 1, got {self.tail_exponent}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not math.isfinite(self.location):
            raise ValueError("location must be finite")

    def require_moment(self, alpha: float) -> None:
        """Raise unless ``E|X|**(1+alpha)`` is finite."""
        if not 1 + alpha < self.tail_exponent:
            raise ValueError(
                f"1+alpha exceeds tail exponent: 1+{alpha} >= {self.tail_exponent}, "
                "so E|X|^(1+alpha) is infinite"
            )

    @property
    def mean(self) -> float:
        if self.kind is Kind.PARETO:
            a = self.tail_exponent
            return self.location + self.scale * a / (a - 1)
        return self.location

    def rescaled(self, factor: float) -> "TailDistribution":
        return replace(self, scale=self.scale * factor)


@dataclass(frozen=True)
class MarkovChainSpec:
    transition: np.ndarray
    emission_scale: np.ndarray
    stationary: Optional[np.ndarray] = None

    def __post_init__(self):
        P = np.array(self.transition, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
            raise ValueError("transition must be a square matrix")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
            raise ValueError("transition rows must be probability vectors")
        e = np.array(self.emission_scale, dtype=np.float64)
        if e.shape != (P.shape[0],) or np.any(~(e > 0)):
            raise ValueError("emission_scale must hold one positive value per state")
        if self.stationary is None:
            pi = _stationary(P)
        else:
            pi = np.array(self.stationary, dtype=np.float64)
        if (
            pi.shape != (P.shape[0],)
            or np.any(pi < -1e-15)
            or abs(pi.sum() - 1) > 1e-10
            or np.max(np.abs(pi @ P - pi)) > 1e-10
        ):
            raise ValueError("stationary must be a probability vector invariant under transition")
        for name, value in (("transition", P), ("emission_scale", e), ("stationary", pi)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def states(self) -> int:
        return self.transition.shape[0]

    def second_eigenvalue_modulus(self) -> float:
        mods = np.sort(np.abs(np.linalg.eigvals(self.transition)))[::-1]
        return float(mods[1]) if len(mods) > 1 else 0.0

    def __eq__(self, other):
        if not isinstance(other, MarkovChainSpec):
            return NotImplemented
        return (
            np.array_equal(self.transition, other.transition)
            and np.array_equal(self.emission_scale, other.emission_scale)
            and np.array_equal(self.stationary, other.stationary)
        )

    __hash__ = None


def _stationary(P):
    S = P.shape[0]
    A = np.vstack([P.T - np.eye(S), np.ones(S)])
    rhs = np.zeros(S + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True)
class GeneratorDescriptor:
    base: TailDistribution
    modulation: Optional[MarkovChainSpec] = None
    seed: int = 0
    declared_decay: MixingDecay = field(default_factory=MixingDecay)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.modulation is None:
            if not self.declared_decay.independent:
                raise ValueError("declared decay must be INDEPENDENT without modulation")
        else:
            if self.modulation.states > MAX_BRUTE_FORCE_STATES:
                raise ValueError(f"at most {MAX_BRUTE_FORCE_STATES} states are supported")
            _check_dominates(self.modulation, self.declared_decay)

    def to_json(self) -> dict:
        d = self.declared_decay
        chain = self.modulation
        return {
            "kind": self.base.kind.value,
            "tail_exponent": self.base.tail_exponent,
            "scale": self.base.scale,
            "location": self.base.location,
            "transition": None if chain is None else chain.transition.tolist(),
            "emission_scale": None if chain is None else chain.emission_scale.tolist(),
            "seed": self.seed,
            "C": d.C,
            "r": "inf" if d.independent else d.r,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GeneratorDescriptor":
        base = TailDistribution(
            Kind(doc["kind"]),
            float(doc["tail_exponent"]),
            float(doc.get("scale", 1.0)),
            float(doc.get("location", 0.0)),
        )
        chain = None
        if doc.get("transition") is not None:
            chain = MarkovChainSpec(
                np.asarray(doc["transition"], dtype=float),
                np.asarray(doc["emission_scale"], dtype=float),
            )
        r = doc.get("r", "inf")
        r = INDEPENDENT if r in (None, "inf", "INDEPENDENT") else float(r)
        C = doc.get("C", 0.0)
        if C == "fit":
            if chain is None:
                raise ValueError('C="fit" requires a transition matrix')
            decay = fit_decay_envelope(chain, r, horizon=200)
        else:
            decay = MixingDecay(float(C), r)
        return cls(base, chain, int(doc.get("seed", 0)), decay)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _check_dominates(chain, decay, horizon=None):
    phis = exact_phi_sequence(chain, horizon or _envelope_horizon(chain, decay.r, 200))
    if decay.independent:
        if np.any(phis > 1e-12):
            raise ValueError("chain is dependent but the declared decay is INDEPENDENT")
        return
    m = np.arange(1, len(phis) + 1)
    env = decay.C * (m + 1.0) ** -decay.r
    if np.any(phis > env * (1 + 1e-9) + 1e-15):
        worst = int(np.argmax(phis - env)) + 1
        raise ValueError(
            f"declared decay (C={decay.C}, r={decay.r}) does not dominate "
            f"the exact mixing coefficient at lag {worst}"
        )


# -- sampling ----------------------------------------------------------------

def _standard_draws(kind, a, u_mag, u_sign):
    if kind is Kind.STUDENT_T:
        return special.stdtrit(a, u_mag)
    w = u_mag ** (-1.0 / a)
    if kind is Kind.SYMMETRIC_PARETO:
        w = np.where(u_sign < 0.5, -w, w)
    return w


def sample_path(
    gen: GeneratorDescriptor, n: int, stream: int = 0, seed: Optional[int] = None
) -> np.ndarray:
    """Draw ``X_1..X_n``; bit-identical for fixed ``(seed, stream, n)``.

    ``seed`` defaults to ``gen.seed``.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    key = kernels.stream_key(gen.seed if seed is None else seed, stream)
    u = kernels.uniforms(key, 0, n, DRAWS_PER_STEP)
    base = gen.base
    w = _standard_draws(base.kind, base.tail_exponent, u[:, 1], u[:, 2])
    scale = base.scale
    if gen.modulation is not None:
        chain = gen.modulation
        states = kernels.chain_states(
            np.ascontiguousarray(u[:, 0]),
            np.ascontiguousarray(np.cumsum(chain.transition, axis=1)),
            np.ascontiguousarray(np.cumsum(chain.stationary)),
        )
        scale = scale * chain.emission_scale[states]
    return base.location + scale * w


def path_mean(gen: GeneratorDescriptor) -> float:
    """Stationary ``E[X_k]``."""
    if gen.modulation is None:
        return gen.base.mean
    chain = gen.modulation
    return math.fsum(
        pi * gen.base.rescaled(e).mean
        for pi, e in zip(chain.stationary, chain.emission_scale)
    )


# -- mixing coefficients -------------------------------------------------------

def _max_subset_deviation(diff):
    # all 2^S subset sums by doubling; diff is P^m(i, .) - pi
    sums = np.zeros(1)
    for d in diff:
        sums = np.concatenate([sums, sums + d])
    return float(np.max(np.abs(sums)))


def _phi_from_power(Pm, pi):
    best = 0.0
    for i in range(len(pi)):
        if pi[i] > 0:
            best = max(best, _max_subset_deviation(Pm[i] - pi))
    return best


def exact_phi(chain: MarkovChainSpec, m: int) -> float:
    """Max over start states i (pi_i > 0) and state sets B of |P^m(i,B) - pi(B)|.

    Brute force over all ``2**S`` subsets.
    """
    if chain.states > MAX_BRUTE_FORCE_STATES:
        raise ValueError(f"brute force needs at most {MAX_BRUTE_FORCE_STATES} states")
    if m < 1:
        raise ValueError("lag must be >= 1")
    Pm = np.linalg.matrix_power(chain.transition, m)
    return _phi_from_power(Pm, chain.stationary)


def exact_phi_sequence(chain: MarkovChainSpec, m_max: int) -> np.ndarray:
    """``[exact_phi(chain, m) for m in 1..m_max]`` with incremental powers."""
    if chain.states > MAX_BRUTE_FORCE_STATES:
        raise ValueError(f"brute force needs at most {MAX_BRUTE_FORCE_STATES} states")
    out = np.empty(m_max)
    Pm = np.eye(chain.states)
    for m in range(m_max):
        Pm = Pm @ chain.transition
        out[m] = _phi_from_power(Pm, chain.stationary)
    return out


def _envelope_horizon(chain, r, horizon):
    rho = chain.second_eigenvalue_modulus()
    if rho == 0 or rho >= 1 or math.isinf(r):
        return horizon
    # rho * ((m+2)/(m+1))**r < 1 once m+1 > 1/(rho**(-1/r) - 1); beyond that the
    # geometric envelope times (m+1)**r is decreasing. Margin covers the
    # transient before phi(m) settles onto its geometric rate.
    turn = 1.0 / (rho ** (-1.0 / r) - 1.0)
    return max(horizon, int(math.ceil(4 * turn)) + 10)


def fit_decay_envelope(chain: MarkovChainSpec, r_target: float, horizon: int = 200) -> MixingDecay:
    """Smallest C with ``exact_phi(m) <= C (m+1)**-r_target`` over the horizon."""
    if not r_target > 2:
        raise ValueError(f"r_target must be > 2, got {r_target}")
    if chain.second_eigenvalue_modulus() >= 1 - 1e-12:
        raise ValueError("chain is not mixing (second eigenvalue modulus is 1)")
    H = _envelope_horizon(chain, r_target, horizon)
    phis = exact_phi_sequence(chain, H)
    phis = np.where(phis < 64 * np.finfo(float).eps, 0.0, phis)  # rounding noise
    m = np.arange(1, H + 1)
    C = float(np.max(phis * (m + 1.0) ** r_target))
    return MixingDecay(C, r_target)


# -- truncated moments ---------------------------------------------------------

def _pareto_pieces(a, s, t):
    """For V = s*W, W standard Pareto(a): (E[V;V<=t], E[V;V>t], E[V^2;V<=t]), t >= s."""
    mean_out = a / (a - 1) * s**a * t ** (1 - a)
    mean_all = a / (a - 1) * s
    mean_in = mean_all - mean_out
    if a == 2:
        second_in = 2 * s**2 * math.log(t / s)
    else:
        second_in = a * s**a / (2 - a) * (t ** (2 - a) - s ** (2 - a))
    return mean_in, mean_out, second_in


def truncated_moments(dist: TailDistribution, b: float) -> tuple[float, float, float]:
    """``(E[X; |X|<=b], E[X; |X|>b], E[X^2; |X|<=b])``."""
    if not b > 0:
        raise ValueError(f"b must be positive, got {b}")
    a, s, loc = dist.tail_exponent, dist.scale, dist.location
    if dist.kind is Kind.STUDENT_T or (loc != 0 and dist.kind is Kind.SYMMETRIC_PARETO):
        return _quad_moments(dist, b)
    if dist.kind is Kind.PARETO:
        lo = loc + s
        if lo > 0 and b < lo:
            raise ValueError(f"b={b} lies below the support minimum {lo}")
        if loc != 0:
            return _quad_moments(dist, b)
        return _pareto_pieces(a, s, b)
    # symmetric Pareto centered at 0: odd parts vanish, |X| is Pareto(a) with scale s
    if b < s:
        return 0.0, 0.0, 0.0
    _, _, second_in = _pareto_pieces(a, s, b)
    return 0.0, 0.0, second_in


def _density(dist):
    a, s, loc = dist.tail_exponent, dist.scale, dist.location
    if dist.kind is Kind.STUDENT_T:
        from scipy.stats import t as student

        return lambda x: student.pdf((x - loc) / s, a) / s, [-np.inf, np.inf]
    if dist.kind is Kind.PARETO:
        return lambda x: a * s**a * (x - loc) ** (-a - 1), [loc + s, np.inf]

    def f(x):
        y = abs(x - loc)
        return 0.5 * a * s**a * y ** (-a - 1) if y >= s else 0.0

    return f, [-np.inf, loc - s, loc + s, np.inf]


def _integrate(g, lo, hi):
    if hi <= lo:
        return 0.0
    val, _ = integrate.quad(g, lo, hi, epsabs=1e-12, epsrel=1e-12, limit=500)
    return val


def _piecewise(g, cuts):
    return math.fsum(_integrate(g, lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:]))


def _quad_moments(dist, b):
    f, support = _density(dist)
    lo_s, hi_s = support[0], support[-1]
    inner = sorted({max(lo_s, min(hi_s, x)) for x in support + [-b, b]})
    inside = [x for x in inner if -b <= x <= b]
    mean_in = _piecewise(lambda x: x * f(x), inside) if len(inside) > 1 else 0.0
    second_in = _piecewise(lambda x: x * x * f(x), inside) if len(inside) > 1 else 0.0
    left = [x for x in inner if x <= -b]
    right = [x for x in inner if x >= b]
    mean_out = 0.0
    if len(left) > 1:
        mean_out += _piecewise(lambda x: x * f(x), left)
    if len(right) > 1:
        mean_out += _piecewise(lambda x: x * f(x), right)
    return mean_in, mean_out, second_in


def path_truncated_moments(gen: GeneratorDescriptor, b: float) -> tuple[float, float, float]:
    """Stationary truncated moments of ``X_k``; a pi-weighted mixture when modulated."""
    if gen.modulation is None:
        return truncated_moments(gen.base, b)
    chain = gen.modulation
    parts = [
        truncated_moments(gen.base.rescaled(e), b) if pi > 0 else (0.0, 0.0, 0.0)
        for pi, e in zip(chain.stationary, chain.emission_scale)
    ]
    return tuple(
        math.fsum(pi * part[i] for pi, part in zip(chain.stationary, parts))
        for i in range(3)
    )


def abs_moment(dist: TailDistribution, q: float) -> float:
    """``E|X|**q``; closed form for location 0, quadrature otherwise."""
    dist.require_moment(q - 1)
    a, s = dist.tail_exponent, dist.scale
    if dist.location == 0:
        if dist.kind is Kind.STUDENT_T:
            return s**q * a ** (q / 2) * math.exp(
                math.lgamma((q + 1) / 2) + math.lgamma((a - q) / 2)
                - math.lgamma(a / 2) - 0.5 * math.log(math.pi)
            )
        return s**q * a / (a - q)
    f, support = _density(dist)
    cuts = sorted(set(support + [0.0]))
    return _piecewise(lambda x: abs(x) ** q * f(x), cuts)


def path_abs_moment(gen: GeneratorDescriptor, q: float) -> float:
    if gen.modulation is None:
        return abs_moment(gen.base, q)
    chain = gen.modulation
    return math.fsum(
        pi * abs_moment(gen.base.rescaled(e), q)
        for pi, e in zip(chain.stationary, chain.emission_scale)
        if pi > 0
    )


def write_path_csv(xs, fh) -> None:
    fh.write("x\n")
    for x in xs:
        fh.write(f"{float(x)!r}\n")


def read_path_csv(fh) -> np.ndarray:
    header = fh.readline().strip()
    if header != "x":
        raise ValueError(f"expected header 'x', got {header!r}")
    values = []
    for lineno, line in enumerate(fh, start=2):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ValueError(f"line {lineno}: not a number: {line!r}") from None
    return np.asarray(values, dtype=np.float64)
