"""Steady-state queue-length distributions from the interior roots.

With interior roots ``r_j`` and constants ``c_j`` the pre-arrival law is
``p_n^- = (1/lam) sum_j c_j r_j^n`` and the arbitrary-epoch law is
``p_n = sum_j K_j r_j^n`` for ``n >= 1`` with ``p_0`` by complementation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Optional

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq

from .chareq import CharSystem, char_fn, find_interior_roots
from .errors import IllConditioned, NotSpecialCase, SingularSystem
from .pgf import FinitePmf, QueueModel

EpochKind = Literal["pre_arrival", "arbitrary"]

PIVOT_TOL = 1e-13
COND_WARN = 1e12
TAIL_EPS = 1e-12
MAX_CUTOFF = 100_000


@dataclass(frozen=True)
class EpochDist:
    """A queue-length law with an explicit head and a geometric-mixture tail.

    ``probs(n)`` is ``head[n]`` for ``n < len(head)`` and
    ``Re sum_j weights_j roots_j^(n - len(head))`` beyond. Pre-arrival laws
    have an empty head; arbitrary-epoch laws carry ``p_0 .. p_{b-1}`` there.
    """

    epoch_kind: EpochKind
    weights: np.ndarray
    roots: np.ndarray
    head: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    @property
    def offset(self) -> int:
        return len(self.head)

    def complex_probs(self, n) -> np.ndarray:
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        k = np.maximum(n - self.offset, 0)
        vals = (self.weights[None, :] * self.roots[None, :] ** k[:, None]).sum(axis=1)
        if self.offset:
            vals = np.where(n < self.offset, self.head[np.minimum(n, self.offset - 1)], vals)
        return vals

    def probs(self, n):
        """Probability of ``n`` customers; scalar in, scalar out."""
        vals = self.complex_probs(n).real
        return float(vals[0]) if np.ndim(n) == 0 else vals

    def imag_residue(self, n_max: int = 500) -> float:
        return float(np.max(np.abs(self.complex_probs(np.arange(n_max + 1)).imag)))

    @property
    def tail_rate(self) -> float:
        return float(np.max(np.abs(self.roots)))

    def cutoff(self, eps: float = TAIL_EPS) -> int:
        """Smallest N past the head with tail_rate^N < eps, capped."""
        rate = self.tail_rate
        n = 1 if rate <= 0.0 else math.ceil(math.log(eps) / math.log(rate))
        return min(MAX_CUTOFF, self.offset + max(1, n))

    def truncate(self, n_max: Optional[int] = None) -> tuple[np.ndarray, float]:
        """Probabilities for ``0..n_max`` and the mass they capture."""
        n_max = self.cutoff() if n_max is None else n_max
        p = self.probs(np.arange(n_max + 1))
        return p, float(p.sum())

    @property
    def mean(self) -> float:
        return mean_queue_length(self)


@dataclass(frozen=True)
class SteadySolution:
    """Roots, constants and both epoch laws of a solved model.

    ``coeffs_K`` are the arbitrary-epoch weights with ``p_n = sum_j K_j r_j^n``
    (n >= 1); the stored :class:`EpochDist` evaluates the same law without the
    cancellation that form suffers for ``n < b``.
    """

    model: QueueModel
    roots: np.ndarray
    constants: np.ndarray
    lam: float
    coeffs_K: np.ndarray
    p0: float
    residuals: np.ndarray
    arbitrary: EpochDist

    @property
    def tail_rate(self) -> float:
        return float(np.max(np.abs(self.roots)))

    @property
    def pre_arrival(self) -> EpochDist:
        return pre_arrival_dist(self)


class TailDecay(NamedTuple):
    rate: float
    dominant_real: bool
    dominant_unique: bool

    @property
    def ratio_converges(self) -> bool:
        return self.dominant_real and self.dominant_unique


def constants_residuals(c: np.ndarray, roots: np.ndarray, lam: float) -> np.ndarray:
    """Residual of each condition, ordered k = b-1 .. 1 then the ``lam`` row.

    Homogeneous rows are relative to their largest term; the ``lam`` row is
    absolute.
    """
    r = np.asarray(roots, dtype=complex)
    b = len(r)
    resid = np.empty(b)
    for k in range(1, b):
        terms = c * r ** (-k)
        resid[b - 1 - k] = abs(terms.sum()) / max(np.max(np.abs(terms)), 1e-300)
    resid[b - 1] = abs((c / (1.0 - r)).sum() - lam)
    return resid


def solve_linear_constants(
    roots: np.ndarray, lam: float, method: Literal["product", "lu"] = "product"
) -> tuple[np.ndarray, np.ndarray]:
    """Constants ``c_j`` from the ``b`` conditions on the interior roots.

    The conditions are ``sum_j c_j r_j^-k = 0`` (k = 1 .. b-1) and
    ``sum_j c_j/(1-r_j) = lam``.

    ``method="product"`` uses their exact solution: the first ``b-1`` rows
    say ``sum_j c_j/(1 - r_j z)`` decays like ``z^-b``, so it equals
    ``C / prod_j (1 - r_j z)``, giving
    ``c_j = lam prod_i (1-r_i) / prod_{i != j} (1 - r_i/r_j)``.
    This stays accurate when small roots cluster, where the Vandermonde
    system loses about ``log10(cond)`` digits.

    ``method="lu"`` solves the system directly: unknowns rescaled to
    ``c_j r_j^-(b-1)`` (a plain Vandermonde block), rows equilibrated, then
    partially pivoted LU.

    Returns the constants and :func:`constants_residuals`.
    """
    r = np.asarray(roots, dtype=complex)
    b = len(r)
    if method == "product":
        ratios = 1.0 - r[:, None] / r[None, :]
        np.fill_diagonal(ratios, 1.0)
        if b > 1 and np.min(np.abs(ratios)) < PIVOT_TOL:
            raise SingularSystem("interior roots repeated or nearly so")
        c = lam * np.prod(1.0 - r) / np.prod(ratios, axis=0)
    elif method == "lu":
        M = np.empty((b, b), dtype=complex)
        M[: b - 1] = r[None, :] ** np.arange(b - 1)[:, None]
        M[b - 1] = r ** (b - 1) / (1.0 - r)
        rhs = np.zeros(b, dtype=complex)
        rhs[b - 1] = lam
        scale = np.max(np.abs(M), axis=1)
        Ms = M / scale[:, None]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(Ms)
        pivots = np.abs(np.diag(lu))
        if pivots.min() < PIVOT_TOL:
            raise SingularSystem(f"smallest pivot {pivots.min():.3g}; roots repeated or nearly so")
        cond = np.linalg.cond(Ms)
        if cond > COND_WARN:
            warnings.warn(f"constants system condition number {cond:.3g}", IllConditioned, stacklevel=2)
        c = scipy.linalg.lu_solve((lu, piv), rhs / scale) * r ** (b - 1)
    else:
        raise ValueError(f"unknown method {method!r}")
    return c, constants_residuals(c, r, lam)


def _taylor(num: np.ndarray, den: np.ndarray, order: int) -> np.ndarray:
    """First ``order`` Taylor coefficients at 0 of ``num/den``."""
    num = np.pad(np.asarray(num, dtype=float), (0, max(0, order - len(num))))
    den = np.asarray(den, dtype=float)
    t = np.zeros(order)
    for k in range(order):
        acc = num[k]
        for i in range(1, min(k, len(den) - 1) + 1):
            acc -= den[i] * t[k - i]
        t[k] = acc / den[0]
    return t


def mixture_with_head(
    epoch_kind: EpochKind,
    c: np.ndarray,
    r: np.ndarray,
    num: np.ndarray,
    den: np.ndarray,
    b: int,
) -> EpochDist:
    """Law ``p_n = sum_j c_j h(r_j) r_j^(n-b)`` for ``n >= 1`` plus ``p_0`` by
    complementation, where ``h = num/den`` is analytic at zero.

    Because ``sum_j c_j r_j^-k = 0`` for ``k = 1 .. b-1``, the principal part
    of ``h(s) s^(n-b)`` at zero contributes nothing and is removed in
    coefficient space before evaluating ``p_1 .. p_{b-1}``.
    """
    dr = P.polyval(r, den)
    weights = c * P.polyval(r, num) / dr
    head = np.zeros(b, dtype=complex)
    if b > 1:
        t = _taylor(num, den, b - 1)
        for n in range(1, b):
            m = b - n
            rem = P.polysub(num, P.polymul(den, t[:m]))
            q = np.asarray(rem[m:]) if len(rem) > m else np.zeros(1)
            head[n] = (c * P.polyval(r, q) / dr).sum()
    head[0] = 1.0 - head[1:].sum() - (weights / (1.0 - r)).sum()
    return EpochDist(epoch_kind, weights, np.asarray(r, dtype=complex), head)


def _arbitrary_numerator(model: QueueModel, *, unit_capacity: bool = False):
    """``h = (1-mu+mu Y)(Gr - s^b) / (mu (1 - Y))`` as a polynomial ratio."""
    mu, b = model.mu, model.b
    s_b = np.zeros(b + 1)
    s_b[b] = 1.0
    gr_minus = P.polysub(model.reversed_batch, s_b)
    if unit_capacity:
        lead, one_minus_y = np.array([1.0 - mu, mu]), np.array([1.0, -1.0])
    else:
        ny, dy = np.asarray(model.Y.numerator), np.asarray(model.Y.denominator)
        lead = P.polyadd((1.0 - mu) * dy, mu * ny)
        one_minus_y = P.polysub(dy, ny)
    return P.polymul(lead, gr_minus), mu * one_minus_y


def _assemble(model: QueueModel, r: np.ndarray, c: np.ndarray, resid, *, unit_capacity=False):
    b = model.b
    num, den = _arbitrary_numerator(model, unit_capacity=unit_capacity)
    arb = mixture_with_head("arbitrary", c, r, num, den, b)
    K = arb.weights * r ** (-b)
    return SteadySolution(
        model=model,
        roots=r,
        constants=c,
        lam=model.lam,
        coeffs_K=K,
        p0=float(arb.head[0].real),
        residuals=resid,
        arbitrary=arb,
    )


def solve_constants(cs: CharSystem, model: QueueModel) -> SteadySolution:
    r = cs.interior_roots
    c, resid = solve_linear_constants(r, model.lam)
    return _assemble(model, r, c, resid)


def solve(model: QueueModel) -> SteadySolution:
    """Roots, constants and distributions through the general path."""
    return solve_constants(find_interior_roots(model), model)


def pre_arrival_dist(sol: SteadySolution) -> EpochDist:
    return EpochDist("pre_arrival", sol.constants / sol.lam, sol.roots)


def arbitrary_dist(sol: SteadySolution) -> EpochDist:
    return sol.arbitrary


def mean_queue_length(dist: EpochDist) -> float:
    """Closed form of ``sum_n n p_n`` via geometric series."""
    r, o = dist.roots, dist.offset
    head = float(np.real((np.arange(o) * dist.head).sum())) if o else 0.0
    tail = dist.weights * (o / (1.0 - r) + r / (1.0 - r) ** 2)
    return head + float(np.real(tail.sum()))


def tail_decay_rate(sol: SteadySolution) -> TailDecay:
    """Largest interior-root modulus and whether the root attaining it is a
    single real root (then ``p_{n+1}^-/p_n^-`` tends to it)."""
    mods = np.abs(sol.roots)
    rate = float(mods.max())
    top = np.flatnonzero(mods > rate * (1.0 - 1e-9))
    lead = sol.roots[top[0]]
    return TailDecay(rate, bool(abs(lead.imag) < 1e-12), bool(len(top) == 1))


# -- special cases -----------------------------------------------------------


def _is_unit(pmf) -> bool:
    return isinstance(pmf, FinitePmf) and pmf.points == (1,)


def _single_root(model: QueueModel) -> float:
    """The unique root of the (real, convex) characteristic function in (0, 1)."""

    def f(s):
        return float(np.real(char_fn(model, s)))

    for k in range(3, 15):
        hi = 1.0 - 10.0**-k
        if f(hi) < 0.0:
            break
    else:
        raise NotSpecialCase("could not bracket the interior root")
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def solve_special(model: QueueModel) -> SteadySolution:
    """Reduced closed forms for unit arrival batches and/or unit capacity.

    * unit batches (``G(s) = s``): the single root is bracketed on (0, 1),
      ``c_1 = lam (1 - r_1)`` and ``p_n^- = (1 - r_1) r_1^n``;
    * unit batches and unit capacity: the ``GI/Geo/1`` forms;
    * unit capacity only (``Y(s) = s``): general roots and constants with the
      simplified arbitrary-epoch weights.
    """
    unit_batch = _is_unit(model.batch)
    unit_cap = _is_unit(model.capacity)
    lam, mu = model.lam, model.mu
    if unit_batch:
        r = _single_root(model)
        c = lam * (1.0 - r)
        if unit_cap:
            K = (lam / mu) * (1.0 - r) * (1.0 - mu + mu * r) / r
            p0 = 1.0 - (lam / mu) * (1.0 - mu + mu * r)
        else:
            y = float(np.real(model.Y(r)))
            K = lam * (1.0 - r) ** 2 * (1.0 - mu + mu * y) / (mu * (1.0 - y) * r)
            p0 = 1.0 - lam * (1.0 - r) * (1.0 - mu + mu * y) / (mu * (1.0 - y))
        roots = np.array([r], dtype=complex)
        arb = EpochDist("arbitrary", np.array([K * r], dtype=complex), roots, np.array([p0], dtype=complex))
        return SteadySolution(
            model=model,
            roots=roots,
            constants=np.array([c], dtype=complex),
            lam=lam,
            coeffs_K=np.array([K], dtype=complex),
            p0=p0,
            residuals=np.array([abs(c / (1.0 - r) - lam)]),
            arbitrary=arb,
        )
    if unit_cap:
        r = find_interior_roots(model).interior_roots
        c, resid = solve_linear_constants(r, lam)
        return _assemble(model, r, c, resid, unit_capacity=True)
    raise NotSpecialCase("model has neither unit arrival batches nor unit serving capacity")
