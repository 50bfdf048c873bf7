"""Characteristic equation of the EAS queue and its roots inside the unit disk.

The equation is

    A(1 - mu + mu Y(s)) * sum_i g_i s^(b-i) - s^b = 0

and, for a stable model, it has exactly ``b`` roots with ``|s| < 1``. Those
roots generate the geometric-mixture form of every queue-length distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DegreeOverflow, RepeatedRoot, RootCountMismatch
from .pgf import QueueModel

MAX_DEGREE = 10_000
INTERIOR_MARGIN = 1e-7
REPEAT_TOL = 1e-6
RESIDUAL_TOL = 1e-9
CONJ_TOL = 1e-9
REAL_SNAP = 1e-8


@dataclass(frozen=True)
class CharSystem:
    """Cleared polynomial (ascending, unscaled), all its roots, and the ``b``
    interior roots sorted by decreasing modulus, then real, then imaginary part."""

    cleared_poly: np.ndarray
    all_roots: np.ndarray
    interior_roots: np.ndarray


def char_fn(model: QueueModel, s):
    """Left-hand side of the characteristic equation at ``s``.

    ``A`` is evaluated at ``1 - u`` with ``u = mu (1 - Y(s))`` formed
    directly, which keeps the evaluation accurate for small ``mu`` or ``lam``.
    """
    a, _ = model.arrival.at_one_minus(model.mu * (1.0 - model.Y(s)))
    return a * P.polyval(s, model.reversed_batch) - s**model.b


def char_deriv(model: QueueModel, s):
    a, da = model.arrival.at_one_minus(model.mu * (1.0 - model.Y(s)))
    gr = model.reversed_batch
    dw = model.mu * model.Y.derivative(s)
    dgr = P.polyval(s, P.polyder(gr)) if len(gr) > 1 else 0.0 * s
    b = model.b
    return da * dw * P.polyval(s, gr) + a * dgr - b * s ** (b - 1)


def build_cleared_poly(model: QueueModel) -> np.ndarray:
    """Characteristic function times its denominators, as an ascending
    coefficient array.

    With ``A = NA/DA`` of degree ``d``, ``Y = NY/DY`` and
    ``W = (1-mu) DY + mu NY`` the result is
    ``NA~ * Gr - s^b * DA~`` where ``NA~ = sum_k alpha_k W^k DY^(d-k)``.
    Denominator roots lie outside the closed unit disk, so no spurious
    interior roots are introduced.
    """
    A, Y, mu, b = model.A, model.Y, model.mu, model.b
    num_a, den_a = np.asarray(A.numerator), np.asarray(A.denominator)
    ny, dy = np.asarray(Y.numerator), np.asarray(Y.denominator)
    d = max(len(num_a), len(den_a)) - 1
    w = P.polyadd((1.0 - mu) * dy, mu * ny)
    inner_deg = max(len(w), len(dy)) - 1
    est = d * inner_deg + b
    if est > MAX_DEGREE:
        raise DegreeOverflow(f"cleared characteristic polynomial would have degree {est} > {MAX_DEGREE}")

    w_pows = [np.array([1.0])]
    dy_pows = [np.array([1.0])]
    for _ in range(d):
        w_pows.append(P.polymul(w_pows[-1], w))
        dy_pows.append(P.polymul(dy_pows[-1], dy))

    def compose(coeffs):
        out = np.zeros(1)
        for k, ck in enumerate(coeffs):
            if ck != 0.0:
                out = P.polyadd(out, ck * P.polymul(w_pows[k], dy_pows[d - k]))
        return out

    na, da = compose(num_a), compose(den_a)
    s_b = np.zeros(b + 1)
    s_b[b] = 1.0
    poly = P.polysub(P.polymul(na, model.reversed_batch), P.polymul(s_b, da))
    return P.polytrim(poly)


def polish_root(
    f: Callable, df: Callable, z0: complex, *, maxiter: int = 100, tol: float = 1e-13
) -> complex:
    """Newton iteration from ``z0``; returns ``z0`` unchanged if it blows up."""
    z = z0
    for _ in range(maxiter):
        fz, dfz = f(z), df(z)
        if fz == 0:
            break
        if dfz == 0:
            return z0
        dz = fz / dfz
        if not np.isfinite(dz):
            return z0
        z = z - dz
        if abs(dz) < tol:
            break
    return z


def select_interior(
    candidates: np.ndarray, b: int, f: Callable, df: Callable, *, poly_roots=None
) -> np.ndarray:
    """Polish, snap, pair and validate the interior roots of ``f``.

    Shared by the discrete solver and the continuous-time limit.
    """
    polished = []
    for r in candidates:
        if abs(r) < 1.0 + 1e-3:
            r = complex(polish_root(f, df, complex(r)))
        polished.append(r)
    inside = [r for r in polished if abs(r) < 1.0 - INTERIOR_MARGIN]

    reals, upper, lower = [], [], []
    for r in inside:
        if abs(r.imag) < REAL_SNAP:
            x = polish_root(lambda t: f(t).real, lambda t: df(t).real, r.real)
            reals.append(complex(float(np.real(x)), 0.0))
        elif r.imag > 0:
            upper.append(r)
        else:
            lower.append(r)

    def moduli_msg():
        ref = poly_roots if poly_roots is not None else np.asarray(polished)
        mods = np.sort(np.abs(ref))
        return ", ".join(f"{m:.9g}" for m in mods)

    if len(upper) != len(lower):
        raise RootCountMismatch(
            f"interior roots are not conjugate-closed ({len(upper)} above, {len(lower)} below "
            f"the real axis); root moduli: {moduli_msg()}"
        )
    roots = list(reals)
    lower_left = list(lower)
    for r in upper:
        j = int(np.argmin([abs(r - q.conjugate()) for q in lower_left]))
        q = lower_left.pop(j)
        if abs(r - q.conjugate()) > 1e-6:
            raise RootCountMismatch(f"no conjugate partner for interior root {r}")
        m = 0.5 * (r + q.conjugate())
        roots.extend([m, m.conjugate()])

    if len(roots) != b:
        raise RootCountMismatch(
            f"expected {b} roots inside the unit circle, found {len(roots)}; "
            f"root moduli: {moduli_msg()}"
        )
    roots = np.array(sorted(roots, key=lambda r: (-abs(r), -r.real, -r.imag)), dtype=complex)

    resid = np.abs(np.array([f(r) for r in roots]))
    if resid.size and resid.max() > RESIDUAL_TOL:
        raise RootCountMismatch(f"root polishing failed: max residual {resid.max():.3g}")
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) < REPEAT_TOL:
                raise RepeatedRoot(f"interior roots {roots[i]} and {roots[j]} coincide")
    return roots


def _drop_negligible_top(coeffs: np.ndarray, tol: float = 1e-15) -> np.ndarray:
    """Drop leading coefficients whose total size is below ``tol``.

    On ``|s| <= 1`` this perturbs the polynomial by at most ``tol``; it only
    discards roots of huge modulus, which would otherwise overflow the
    companion matrix (e.g. ``mu^d`` leading terms for long deterministic
    inter-arrival times).
    """
    tail = np.cumsum(np.abs(coeffs[::-1]))[::-1]
    keep = np.flatnonzero(tail > tol)
    return coeffs[: keep[-1] + 1] if keep.size else coeffs


def find_interior_roots(model: QueueModel) -> CharSystem:
    """All roots of the cleared polynomial plus the ``b`` interior ones.

    Candidates come from the companion-matrix eigenvalues of the scaled
    polynomial; each candidate near or inside the disk is Newton-polished on
    :func:`char_fn` itself. ``all_roots`` omits roots of huge modulus carried
    only by negligible leading coefficients.
    """
    poly = build_cleared_poly(model)
    scaled = poly / np.max(np.abs(poly))
    all_roots = np.roots(_drop_negligible_top(scaled)[::-1])
    interior = select_interior(
        all_roots,
        model.b,
        lambda s: char_fn(model, s),
        lambda s: char_deriv(model, s),
        poly_roots=all_roots,
    )
    return CharSystem(cleared_poly=poly, all_roots=all_roots, interior_roots=interior)
