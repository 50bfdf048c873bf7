"""Distributions, rational probability generating functions and the queue model.

Every distribution used by the discrete-time model has a rational pgf, so the
whole characteristic equation can be cleared to a single polynomial. The
classes here are immutable; equality is structural, which the spec-file
round trip relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import InvalidPmf, PoleAtArgument, Unstable

PMF_TOL = 1e-12
POLE_TOL = 1e-14


@dataclass(frozen=True)
class RationalPgf:
    """Ratio of two real polynomials, coefficients in ascending degree."""

    numerator: tuple[float, ...]
    denominator: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        num = _trim(self.numerator)
        den = _trim(self.denominator)
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)
        if not any(den):
            raise InvalidPmf("pgf denominator is identically zero")
        # compared against coefficient scale: 1 - (1 - p) is inexact for tiny p
        gap = P.polyval(1.0, num) - P.polyval(1.0, den)
        if abs(gap) > PMF_TOL * max(np.abs(num).sum(), np.abs(den).sum()):
            raise InvalidPmf(f"pgf value at 1 is {P.polyval(1.0, num) / P.polyval(1.0, den)!r}, expected 1")
        if len(den) > 1:
            poles = np.roots(den[::-1])
            if poles.size and np.min(np.abs(poles)) <= 1.0:
                raise InvalidPmf("pgf denominator has a root in the closed unit disk")

    @property
    def degree(self) -> int:
        return max(len(self.numerator), len(self.denominator)) - 1

    def __call__(self, z):
        return pgf_eval(self, z)

    def derivative(self, z):
        """Value of the first derivative at ``z`` (quotient rule)."""
        num, den = self.numerator, self.denominator
        d = _checked_den(den, z)
        n = P.polyval(z, num)
        dn = P.polyval(z, P.polyder(num)) if len(num) > 1 else 0.0 * z
        dd = P.polyval(z, P.polyder(den)) if len(den) > 1 else 0.0 * z
        return (dn * d - n * dd) / (d * d)

    @property
    def mean(self) -> float:
        return pgf_mean(self)


def _trim(coeffs) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c) if c else (0.0,)


def _checked_den(den, z):
    d = P.polyval(z, den)
    if np.any(np.abs(d) < POLE_TOL):
        raise PoleAtArgument(f"pgf denominator vanishes at {z!r}")
    return d


def pgf_eval(f: RationalPgf, z):
    """Evaluate ``f`` at a complex (or array of complex) argument via Horner."""
    d = _checked_den(f.denominator, z)
    return P.polyval(z, f.numerator) / d


def pgf_mean(f: RationalPgf) -> float:
    """First moment, i.e. the derivative of the pgf at 1."""
    return float(np.real(f.derivative(1.0)))


# -- distributions -----------------------------------------------------------


@dataclass(frozen=True)
class FinitePmf:
    """Pmf on a finite set of positive integers.

    Zero masses are dropped (so a trailing zero never defines the maximum
    support point). Masses must sum to one within ``1e-12``; nothing is
    renormalized.
    """

    points: tuple[int, ...]
    masses: tuple[float, ...]

    def __post_init__(self):
        if len(self.points) != len(self.masses):
            raise InvalidPmf("points and masses differ in length")
        pairs = {}
        for pt, m in zip(self.points, self.masses):
            if int(pt) != pt:
                raise InvalidPmf(f"support point {pt!r} is not an integer")
            pt, m = int(pt), float(m)
            if pt < 1:
                raise InvalidPmf(f"support point {pt} < 1 (mass at zero is not allowed)")
            if not math.isfinite(m) or m < 0.0:
                raise InvalidPmf(f"mass {m!r} at {pt} is not a probability")
            if pt in pairs:
                raise InvalidPmf(f"support point {pt} listed twice")
            pairs[pt] = m
        pairs = {k: v for k, v in sorted(pairs.items()) if v > 0.0}
        if not pairs:
            raise InvalidPmf("pmf has no positive mass")
        total = math.fsum(pairs.values())
        if abs(total - 1.0) > PMF_TOL:
            raise InvalidPmf(f"masses sum to {total!r}, not 1")
        object.__setattr__(self, "points", tuple(pairs))
        object.__setattr__(self, "masses", tuple(pairs.values()))

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, float]) -> "FinitePmf":
        return cls(tuple(mapping), tuple(mapping.values()))

    @property
    def max_point(self) -> int:
        return self.points[-1]

    @property
    def mean(self) -> float:
        return sum(p * m for p, m in zip(self.points, self.masses))

    @property
    def rate(self) -> float:
        return 1.0 / self.mean

    @property
    def pgf(self) -> RationalPgf:
        coeffs = [0.0] * (self.max_point + 1)
        for p, m in zip(self.points, self.masses):
            coeffs[p] = m
        return RationalPgf(tuple(coeffs))

    def at_one_minus(self, u):
        """pgf and its derivative at ``1 - u``."""
        pgf = self.pgf
        return pgf(1.0 - u), pgf.derivative(1.0 - u)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(np.asarray(self.points, dtype=np.int64), size=size, p=self.masses)


def deterministic(d: int) -> FinitePmf:
    """Point mass at ``d`` slots."""
    return FinitePmf((d,), (1.0,))


@dataclass(frozen=True)
class Geometric:
    """Geometric law on {1, 2, ...} with success probability ``p``."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise InvalidPmf(f"geometric parameter {self.p!r} not in (0, 1]")

    @property
    def mean(self) -> float:
        return 1.0 / self.p

    @property
    def rate(self) -> float:
        return self.p

    @property
    def pgf(self) -> RationalPgf:
        return RationalPgf((0.0, self.p), (1.0, -(1.0 - self.p)))

    def at_one_minus(self, u):
        """pgf and derivative at ``1 - u``, free of the ``1 - (1 - p)`` cancellation."""
        den = self.p + (1.0 - self.p) * u
        return self.p * (1.0 - u) / den, self.p / den**2

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.geometric(self.p, size=size).astype(np.int64)


@dataclass(frozen=True)
class NegBinomial:
    """Sum of ``k`` independent Geometric(p) slots; support starts at ``k``.

    Used as the slotted stand-in for Erlang inter-arrival times.
    """

    k: int
    p: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidPmf(f"stage count {self.k!r} must be a positive integer")
        if not 0.0 < self.p <= 1.0:
            raise InvalidPmf(f"geometric parameter {self.p!r} not in (0, 1]")

    @property
    def mean(self) -> float:
        return self.k / self.p

    @property
    def rate(self) -> float:
        return self.p / self.k

    @property
    def pgf(self) -> RationalPgf:
        num = P.polypow((0.0, self.p), self.k)
        den = P.polypow((1.0, -(1.0 - self.p)), self.k)
        return RationalPgf(tuple(num), tuple(den))

    def at_one_minus(self, u):
        one, done = Geometric(self.p).at_one_minus(u)
        return one**self.k, self.k * one ** (self.k - 1) * done

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return (rng.negative_binomial(self.k, self.p, size=size) + self.k).astype(np.int64)


InterArrivalDist = Union[FinitePmf, Geometric, NegBinomial]
CapacityDist = Union[FinitePmf, Geometric]


@dataclass(frozen=True)
class QueueModel:
    """Discrete-time batch-arrival, batch-service queue.

    Args:
        arrival: inter-arrival time law in slots (no mass at zero).
        batch: arrival batch-size pmf; its largest support point is ``b``.
        mu: per-slot service completion probability, in (0, 1).
        capacity: serving-capacity law (how many are taken per service).

    The derived quantities ``lam``, ``g_bar``, ``y_bar`` and ``rho`` are
    filled in on construction; an unstable model raises :class:`Unstable`.
    """

    arrival: InterArrivalDist
    batch: FinitePmf
    mu: float
    capacity: CapacityDist
    lam: float = field(init=False)
    g_bar: float = field(init=False)
    y_bar: float = field(init=False)
    rho: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.arrival, (FinitePmf, Geometric, NegBinomial)):
            raise TypeError(f"unsupported inter-arrival law {type(self.arrival).__name__}")
        if not isinstance(self.capacity, (FinitePmf, Geometric)):
            raise TypeError(f"unsupported capacity law {type(self.capacity).__name__}")
        if not isinstance(self.batch, FinitePmf):
            raise TypeError("batch must be a FinitePmf")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu = {self.mu!r} not in (0, 1)")
        lam = self.arrival.rate
        g_bar = self.batch.mean
        y_bar = self.capacity.mean
        rho = lam * g_bar / (self.mu * y_bar)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "g_bar", g_bar)
        object.__setattr__(self, "y_bar", y_bar)
        object.__setattr__(self, "rho", rho)
        if not rho < 1.0:
            raise Unstable(rho)

    @property
    def b(self) -> int:
        return self.batch.max_point

    @property
    def A(self) -> RationalPgf:
        return self.arrival.pgf

    @property
    def G(self) -> RationalPgf:
        return self.batch.pgf

    @property
    def Y(self) -> RationalPgf:
        return self.capacity.pgf

    @property
    def reversed_batch(self) -> np.ndarray:
        """Coefficients of sum_i g_i s^(b-i), ascending in s."""
        b = self.b
        c = np.zeros(b)
        for p, m in zip(self.batch.points, self.batch.masses):
            c[b - p] = m
        return c


def build_model(
    arrival: InterArrivalDist, batch: FinitePmf, mu: float, capacity: CapacityDist
) -> QueueModel:
    return QueueModel(arrival, batch, mu, capacity)
