"""Optimal stealthy injection against a Laplace-protected release.

The attacker adds noise drawn from an exponentially tilted Laplace
density

    fa(y) = (k1^2 - b^2) / (2 b k1^2) * exp(-|y - theta| / b + (y - theta) / k1),

defined for tilt parameter k1 > b.  Smaller k1 tilts harder: the mean
of fa sits at theta + 2 b^2 k1 / (k1^2 - b^2), which grows without
bound as k1 -> b and collapses to theta as k1 -> inf.  How hard the
attacker may tilt is fixed by a stealth budget gamma, the KL divergence
of fa from the honest noise density f0:

    KL(fa || f0) = 2 b^2 / (k1^2 - b^2) + ln(1 - b^2 / k1^2) = gamma.

The divergence depends on k1 and b only through the ratio k1 / b and is
strictly decreasing in k1, so the budget constraint pins a unique k1
and the shift the attacker achieves is proportional to b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .laplace import PrivacyParams
from .seeds import as_generator

_MU_CONSISTENCY_RTOL = 1e-9


def _kl_of_ratio(r: float) -> float:
    # KL(fa || f0) as a function of r = k1 / b; valid for r > 1.
    return 2.0 / (r * r - 1.0) + math.log1p(-1.0 / (r * r))


@lru_cache(maxsize=4096)
def _solve_tilt_ratio(gamma: float) -> float:
    """Unique r > 1 with _kl_of_ratio(r) == gamma, by bisection."""
    if gamma > 1e12:
        raise ValueError(f"stealth budget {gamma} too large to resolve")
    lo, hi = 1.0 + 1e-12, 2.0
    while _kl_of_ratio(hi) > gamma:
        hi *= 2.0
        if hi > 1e160:
            raise ValueError(f"stealth budget {gamma} too small to resolve")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _kl_of_ratio(mid) > gamma:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kl_from_k1(k1: float, scale: float) -> float:
    """Stealth cost KL(fa || f0) of tilt k1 against noise scale b."""
    if scale <= 0.0:
        raise ValueError(f"noise scale must be positive, got {scale}")
    if k1 <= scale:
        raise ValueError("attack distribution undefined: k1 must exceed the noise scale")
    return _kl_of_ratio(k1 / scale)


def solve_k1(gamma: float, scale: float) -> float:
    """Tilt parameter k1 > b whose stealth cost equals gamma.

    The cost is strictly decreasing in k1, so the root is unique.
    gamma must be strictly positive; gamma == 0 only admits the honest
    density itself (k1 -> inf).
    """
    if scale <= 0.0:
        raise ValueError(f"noise scale must be positive, got {scale}")
    if not (gamma > 0.0) or math.isinf(gamma):
        raise ValueError("degenerate stealth budget")
    return scale * _solve_tilt_ratio(float(gamma))


@dataclass(frozen=True)
class AttackProfile:
    """A stealth-constrained attacker against one noisy release.

    Attributes:
        gamma: stealth budget in nats (KL divergence cap).
        k1: tilt parameter of the attack density, strictly above the
            noise scale of ``base``.
        base: parameters of the release under attack; its scale and
            theta fix the attack density.
        mu_star: mean of the attack density (derived).
    """

    gamma: float
    k1: float
    base: PrivacyParams
    mu_star: float = field(init=False)

    def __post_init__(self) -> None:
        b = self.base.scale
        if b <= 0.0:
            raise ValueError("attack needs a positive noise scale to hide in")
        if self.k1 <= b:
            raise ValueError("attack distribution undefined: k1 must exceed the noise scale")
        if not (self.gamma >= 0.0):
            raise ValueError(f"stealth budget must be non-negative, got {self.gamma}")
        theta = self.base.theta
        k1 = self.k1
        mu = theta + 2.0 * b * b * k1 / (k1 * k1 - b * b)
        # Same mean written without the shift split out; the two must agree.
        mu_literal = (b * b * (theta - 2.0 * k1) - theta * k1 * k1) / (b * b - k1 * k1)
        if abs(mu - mu_literal) > _MU_CONSISTENCY_RTOL * max(1.0, abs(mu)):
            raise ValueError("inconsistent attack mean; parameters out of range")
        w_neg = (k1 - b) / (2.0 * k1)
        w_pos = (k1 + b) / (2.0 * k1)
        if abs(w_neg + w_pos - 1.0) > 1e-12:
            raise ValueError("attack mixture weights must sum to one")
        object.__setattr__(self, "mu_star", mu)

    @classmethod
    def solve(cls, gamma: float, base: PrivacyParams) -> "AttackProfile":
        """Profile spending exactly the stealth budget gamma."""
        return cls(gamma=gamma, k1=solve_k1(gamma, base.scale), base=base)

    @classmethod
    def from_k1(cls, k1: float, base: PrivacyParams) -> "AttackProfile":
        """Profile at a given tilt; gamma is computed from k1."""
        return cls(gamma=kl_from_k1(k1, base.scale), k1=k1, base=base)

    @property
    def mean_shift(self) -> float:
        """Bias added to the release: mu_star - theta = 2 b^2 k1 / (k1^2 - b^2)."""
        return self.mu_star - self.base.theta


def attack_pdf(y, profile: AttackProfile):
    """Density of the attack noise at y (vectorized)."""
    b = profile.base.scale
    k1 = profile.k1
    theta = profile.base.theta
    y = np.asarray(y, dtype=float)
    z = y - theta
    out = (k1 * k1 - b * b) / (2.0 * b * k1 * k1) * np.exp(-np.abs(z) / b + z / k1)
    return float(out) if out.ndim == 0 else out


def optimal_impact(profile: AttackProfile) -> float:
    """Expected released value under attack, mu_star."""
    return profile.mu_star


def sample_attack_noise(profile: AttackProfile, rng, size=None):
    """Draw from the attack density.

    fa is a two-sided exponential mixture around theta: with
    probability (k1 - b) / (2 k1) go left at rate 1/b + 1/k1, otherwise
    right at rate 1/b - 1/k1.  Exact, no rejection step.
    """
    gen = as_generator(rng)
    b = profile.base.scale
    k1 = profile.k1
    w_neg = (k1 - b) / (2.0 * k1)
    rate_neg = 1.0 / b + 1.0 / k1
    rate_pos = 1.0 / b - 1.0 / k1
    u = gen.random(size)
    e = gen.standard_exponential(size)
    z = np.where(u < w_neg, -e / rate_neg, e / rate_pos)
    out = profile.base.theta + z
    return float(out) if size is None else out
