"""Population laws F(y, theta) on the unit square.

Three continuous families are supported: independent uniform marginals,
independent beta marginals, and a Gaussian copula coupling two beta
marginals. All of them can answer conditional tail queries
``P(theta >= level | y)`` in closed form, so every mass reduces to a single
integral over income. That integral is taken in probability space
``u = F_y(y)`` which absorbs the income density (and any beta singularity
at the ends of [0, 1]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, UnsupportedDistributionError
from .numerics import integrate

QUAD_TOL = 1e-10
SAMPLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class BetaMarginal:
    """Beta(a, b) law on [0, 1]; Beta(1, 1) takes exact uniform shortcuts."""

    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError(f"beta shape parameters must be positive, got {self.a}, {self.b}")

    @property
    def is_uniform(self) -> bool:
        return self.a == 1.0 and self.b == 1.0

    def cdf(self, x):
        x = np.clip(x, 0.0, 1.0)
        if self.is_uniform:
            return x
        return special.betainc(self.a, self.b, x)

    def ppf(self, u):
        u = np.clip(u, 0.0, 1.0)
        if self.is_uniform:
            return u
        return special.betaincinv(self.a, self.b, u)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        if self.is_uniform:
            return np.where(inside, 1.0, 0.0)
        with np.errstate(divide="ignore"):
            logpdf = (
                (self.a - 1.0) * np.log(x) + (self.b - 1.0) * np.log1p(-x) - special.betaln(self.a, self.b)
            )
        return np.where(inside, np.exp(logpdf), 0.0)


class JointDistribution:
    """Base class. Subclasses set ``y_marginal``/``theta_marginal`` and
    implement ``_cond_tail_u`` and ``_draw``."""

    kind = "abstract"
    y_marginal: BetaMarginal
    theta_marginal: BetaMarginal

    def descriptor(self) -> dict:
        raise NotImplementedError

    def _cond_tail_u(self, u, level):
        """P(theta >= level | F_y(y) = u), vectorised over ``u`` and ``level``."""
        raise NotImplementedError

    def _draw(self, rng: np.random.Generator, n: int):
        raise NotImplementedError

    def conditional_tail(self, y, level):
        return self._cond_tail_u(self.y_marginal.cdf(y), level)

    def tail_mass(self, c: float) -> float:
        """P(theta >= c)."""
        return float(1.0 - self.theta_marginal.cdf(c))

    def rect_mass(self, a: float, b: float, c: float, d: float) -> float:
        """P(a <= y <= b, c <= theta <= d)."""
        if b <= a or d <= c:
            return 0.0
        ua, ub = self.y_marginal.cdf(a), self.y_marginal.cdf(b)

        def integrand(u):
            return self._cond_tail_u(u, c) - self._cond_tail_u(u, d)

        return max(0.0, integrate(integrand, float(ua), float(ub), abs_tol=QUAD_TOL))

    def mixed_mass(self, a: float, b: float, boundary, *, breakpoints=(), abs_tol: float = QUAD_TOL) -> float:
        """P(a <= y <= b, theta >= boundary(y)) for a vectorised boundary.

        ``boundary`` may return values outside [0, 1] (including +inf).
        ``breakpoints`` are incomes where the boundary has a kink or jump.
        """
        if b <= a:
            return 0.0
        ym = self.y_marginal
        ua, ub = float(ym.cdf(a)), float(ym.cdf(b))

        def integrand(u):
            return self._cond_tail_u(u, boundary(ym.ppf(u)))

        bps = [float(ym.cdf(x)) for x in breakpoints]
        return integrate(integrand, ua, ub, breakpoints=bps, abs_tol=abs_tol)

    def sample(self, n: int, seed: int):
        """``n`` i.i.d. draws as ``(y, theta)`` arrays.

        Draws come from numpy's PCG64 generator. The stream is cut into fixed
        chunks of ``SAMPLE_CHUNK`` draws, each seeded by
        ``SeedSequence(seed).spawn``, so output depends only on
        ``(descriptor, seed, n)`` and chunks can be drawn independently.
        """
        if n < 1:
            raise DomainError(f"sample size must be >= 1, got {n}")
        n_chunks = -(-n // SAMPLE_CHUNK)
        children = np.random.SeedSequence(seed).spawn(n_chunks)
        ys, ts = [], []
        for i, child in enumerate(children):
            m = min(SAMPLE_CHUNK, n - i * SAMPLE_CHUNK)
            y, t = self._draw(np.random.Generator(np.random.PCG64(child)), m)
            ys.append(y)
            ts.append(t)
        return np.concatenate(ys), np.concatenate(ts)


class IndependentBeta(JointDistribution):
    kind = "beta"

    def __init__(self, y_alpha=1.0, y_beta=1.0, theta_alpha=1.0, theta_beta=1.0):
        self.y_marginal = BetaMarginal(float(y_alpha), float(y_beta))
        self.theta_marginal = BetaMarginal(float(theta_alpha), float(theta_beta))

    def descriptor(self):
        return {
            "kind": self.kind,
            "y_alpha": self.y_marginal.a,
            "y_beta": self.y_marginal.b,
            "theta_alpha": self.theta_marginal.a,
            "theta_beta": self.theta_marginal.b,
        }

    def _cond_tail_u(self, u, level):
        return (1.0 - self.theta_marginal.cdf(level)) + np.zeros(np.shape(u))

    def rect_mass(self, a, b, c, d):
        if b <= a or d <= c:
            return 0.0
        ym, tm = self.y_marginal, self.theta_marginal
        return float((ym.cdf(b) - ym.cdf(a)) * (tm.cdf(d) - tm.cdf(c)))

    def _draw(self, rng, n):
        u = rng.random((n, 2))
        return self.y_marginal.ppf(u[:, 0]), self.theta_marginal.ppf(u[:, 1])

    def __repr__(self):
        return f"IndependentBeta({self.y_marginal.a}, {self.y_marginal.b}, {self.theta_marginal.a}, {self.theta_marginal.b})"


class IndependentUniform(IndependentBeta):
    kind = "uniform"

    def __init__(self):
        super().__init__(1.0, 1.0, 1.0, 1.0)

    def descriptor(self):
        return {"kind": self.kind}

    def __repr__(self):
        return "IndependentUniform()"


class GaussianCopula(JointDistribution):
    """Beta marginals joined by a Gaussian copula with correlation ``r``.

    Given ``z_y = Phi^-1(F_y(y))`` the latent normal of theta is
    ``N(r z_y, 1 - r^2)``, which gives the conditional tail in closed form.
    """

    kind = "gaussian-copula"

    def __init__(self, r, y_alpha=1.0, y_beta=1.0, theta_alpha=1.0, theta_beta=1.0):
        if not -1.0 < r < 1.0:
            raise DomainError(f"copula correlation must lie in (-1, 1), got {r!r}")
        self.r = float(r)
        self._s = math.sqrt(1.0 - self.r * self.r)
        self.y_marginal = BetaMarginal(float(y_alpha), float(y_beta))
        self.theta_marginal = BetaMarginal(float(theta_alpha), float(theta_beta))

    def descriptor(self):
        return {
            "kind": self.kind,
            "r": self.r,
            "y_alpha": self.y_marginal.a,
            "y_beta": self.y_marginal.b,
            "theta_alpha": self.theta_marginal.a,
            "theta_beta": self.theta_marginal.b,
        }

    def _cond_tail_u(self, u, level):
        z_y = special.ndtri(np.clip(u, 1e-300, 1.0 - 1e-16))
        z_t = special.ndtri(self.theta_marginal.cdf(level))
        return special.ndtr((self.r * z_y - z_t) / self._s)

    def spearman(self) -> float:
        """Rank correlation implied by the copula."""
        return 6.0 / math.pi * math.asin(self.r / 2.0)

    def _draw(self, rng, n):
        z = rng.standard_normal((n, 2))
        z_t = self.r * z[:, 0] + self._s * z[:, 1]
        return self.y_marginal.ppf(special.ndtr(z[:, 0])), self.theta_marginal.ppf(special.ndtr(z_t))

    def __repr__(self):
        return f"GaussianCopula(r={self.r})"


def from_descriptor(desc: dict) -> JointDistribution:
    desc = dict(desc)
    kind = desc.pop("kind", None)
    try:
        if kind == "uniform":
            if desc:
                raise DomainError(f"uniform distribution takes no parameters, got {sorted(desc)}")
            return IndependentUniform()
        if kind == "beta":
            return IndependentBeta(**desc)
        if kind == "gaussian-copula":
            return GaussianCopula(**desc)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {kind!r}: {exc}") from None
    raise UnsupportedDistributionError(f"unknown distribution kind {kind!r}")
