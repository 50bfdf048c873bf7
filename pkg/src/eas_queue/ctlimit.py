"""Continuous-time GI^X/M^Y/1 queue as the small-slot limit of the discrete model.

The continuous characteristic equation replaces ``A(1 - mu + mu Y(s))`` by
``A*(mu_hat (1 - Y(s)))`` with ``A*`` the inter-arrival LST. Roots are found
by solving a slotted version of the model (slot width ``delta``) and
Newton-polishing every interior root on the exact continuous equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.polynomial import polynomial as P

from .chareq import MAX_DEGREE, find_interior_roots, select_interior
from .errors import QueueError, RepeatedRoot, RootCountMismatch, Unstable
from .pgf import (
    CapacityDist,
    FinitePmf,
    Geometric,
    InterArrivalDist,
    NegBinomial,
    QueueModel,
    deterministic,
)
from .steady import EpochDist, mixture_with_head, solve_linear_constants

DEFAULT_DELTA = 1e-3
# degree budget for the slotted bracketing problem; refined up to MAX_DEGREE
START_DEGREE = 400


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError(f"rate {self.rate!r} must be positive")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def lst(self, theta):
        return self.rate / (self.rate + theta)

    def lst_deriv(self, theta):
        return -self.rate / (self.rate + theta) ** 2

    def discretize(self, delta: float) -> InterArrivalDist:
        return Geometric(-math.expm1(-self.rate * delta))


@dataclass(frozen=True)
class Deterministic:
    d: float

    def __post_init__(self):
        if not self.d > 0.0:
            raise ValueError(f"inter-arrival time {self.d!r} must be positive")

    @property
    def mean(self) -> float:
        return self.d

    def lst(self, theta):
        return np.exp(-self.d * theta)

    def lst_deriv(self, theta):
        return -self.d * np.exp(-self.d * theta)

    def discretize(self, delta: float) -> InterArrivalDist:
        return deterministic(max(1, math.ceil(self.d / delta - 1e-9)))


@dataclass(frozen=True)
class Erlang:
    k: int
    rate: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"stage count {self.k!r} must be a positive integer")
        if not self.rate > 0.0:
            raise ValueError(f"rate {self.rate!r} must be positive")

    @property
    def mean(self) -> float:
        return self.k / self.rate

    def lst(self, theta):
        return (self.rate / (self.rate + theta)) ** self.k

    def lst_deriv(self, theta):
        return -self.k * self.rate**self.k / (self.rate + theta) ** (self.k + 1)

    def discretize(self, delta: float) -> InterArrivalDist:
        # each exponential stage becomes a geometric number of slots
        return NegBinomial(self.k, -math.expm1(-self.rate * delta))


CtInterArrival = Union[Exponential, Deterministic, Erlang]


@dataclass(frozen=True)
class CtModel:
    """Continuous-time model; ``mu_hat`` is the exponential service rate."""

    arrival: CtInterArrival
    batch: FinitePmf
    mu_hat: float
    capacity: CapacityDist
    lam_hat: float = field(init=False)
    rho: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.arrival, (Exponential, Deterministic, Erlang)):
            raise TypeError(f"unsupported continuous inter-arrival law {type(self.arrival).__name__}")
        if not self.mu_hat > 0.0:
            raise ValueError(f"mu_hat = {self.mu_hat!r} must be positive")
        lam_hat = 1.0 / self.arrival.mean
        rho = lam_hat * self.batch.mean / (self.mu_hat * self.capacity.mean)
        object.__setattr__(self, "mu_hat", float(self.mu_hat))
        object.__setattr__(self, "lam_hat", lam_hat)
        object.__setattr__(self, "rho", rho)
        if not rho < 1.0:
            raise Unstable(rho)

    @property
    def b(self) -> int:
        return self.batch.max_point

    @property
    def Y(self):
        return self.capacity.pgf

    @property
    def reversed_batch(self) -> np.ndarray:
        b = self.b
        c = np.zeros(b)
        for p, m in zip(self.batch.points, self.batch.masses):
            c[b - p] = m
        return c


@dataclass(frozen=True)
class CtSolution:
    model: CtModel
    roots: np.ndarray
    constants: np.ndarray
    residuals: np.ndarray
    pre_arrival: EpochDist
    arbitrary: EpochDist
    delta: float


def ct_char_fn(model: CtModel, s):
    theta = model.mu_hat * (1.0 - model.Y(s))
    return model.arrival.lst(theta) * P.polyval(s, model.reversed_batch) - s**model.b


def ct_char_deriv(model: CtModel, s):
    theta = model.mu_hat * (1.0 - model.Y(s))
    dtheta = -model.mu_hat * model.Y.derivative(s)
    gr = model.reversed_batch
    dgr = P.polyval(s, P.polyder(gr)) if len(gr) > 1 else 0.0 * s
    b = model.b
    return (
        model.arrival.lst_deriv(theta) * dtheta * P.polyval(s, gr)
        + model.arrival.lst(theta) * dgr
        - b * s ** (b - 1)
    )


def discretize(model: CtModel, delta: float) -> QueueModel:
    """Slotted model with slot width ``delta`` (so ``mu = mu_hat * delta``)."""
    return QueueModel(model.arrival.discretize(delta), model.batch, model.mu_hat * delta, model.capacity)


def _slotted_degree(model: CtModel, delta: float) -> int:
    a = model.arrival.discretize(delta).pgf
    y = model.Y
    inner = max(len(y.numerator), len(y.denominator)) - 1
    return a.degree * inner + model.b


def _initial_delta(model: CtModel, delta: float, budget: int) -> float:
    """Slot width for the bracketing problem.

    Only deterministic arrivals grow in degree as the slot shrinks; for them
    the slot is coarsened to fit ``budget`` while keeping ``mu_hat*delta <= 1/2``.
    """
    if not isinstance(model.arrival, Deterministic):
        return min(delta, 0.5 / model.mu_hat)
    d = model.arrival.d
    inner = max(1, model.Y.degree)
    slots = min(math.ceil(d / delta), max((budget - model.b) // inner, math.ceil(2.0 * model.mu_hat * d)))
    return d / slots


def ct_char_roots(model: CtModel, delta: float = DEFAULT_DELTA) -> tuple[np.ndarray, float]:
    """Interior roots of the continuous characteristic equation.

    Returns the roots and the slot width whose slotted roots seeded Newton.
    The slot is refined (halved) when polishing merges or loses roots.
    """
    step = _initial_delta(model, delta, START_DEGREE)
    f = lambda s: ct_char_fn(model, s)  # noqa: E731
    df = lambda s: ct_char_deriv(model, s)  # noqa: E731
    last_error: QueueError | None = None
    while _slotted_degree(model, step) <= MAX_DEGREE:
        try:
            seeds = find_interior_roots(discretize(model, step)).interior_roots
            return select_interior(seeds, model.b, f, df), step
        except (RootCountMismatch, RepeatedRoot) as exc:
            last_error = exc
        if not isinstance(model.arrival, Deterministic):
            break
        step /= 2.0
    raise RootCountMismatch(f"continuous roots not resolved down to slot {step:.3g}: {last_error}")


def ct_solve(model: CtModel, delta: float = DEFAULT_DELTA) -> CtSolution:
    """Roots, constants and both epoch laws of the continuous-time queue.

    Constants solve the same conditions as the slotted model with ``lam_hat``
    in place of ``lam``.
    """
    roots, step = ct_char_roots(model, delta)
    c, resid = solve_linear_constants(roots, model.lam_hat)
    b = model.b
    s_b = np.zeros(b + 1)
    s_b[b] = 1.0
    ny, dy = np.asarray(model.Y.numerator), np.asarray(model.Y.denominator)
    num = P.polymul(dy, P.polysub(model.reversed_batch, s_b))
    den = model.mu_hat * P.polysub(dy, ny)
    pre = EpochDist("pre_arrival", c / model.lam_hat, roots)
    arb = mixture_with_head("arbitrary", c, roots, num, den, b)
    return CtSolution(model, roots, c, resid, pre, arb, step)


def ct_distributions(model: CtModel, delta: float = DEFAULT_DELTA) -> tuple[EpochDist, EpochDist]:
    sol = ct_solve(model, delta)
    return sol.pre_arrival, sol.arbitrary
