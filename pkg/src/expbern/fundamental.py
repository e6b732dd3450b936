"""Fundamental function, Hankel determinants and Chebyshev diagnostics.

The fundamental function ``Phi_n`` of ``E_Lambda`` is the solution of the
initial value problem ``Phi^(i)(0) = 0`` for ``i < n`` and ``Phi^(n)(0) = 1``.
It is the divided difference of ``z -> exp(x z)`` at the eigenvalues.  The
Hankel determinants ``Phi_{n,k}(t) = det[Phi^(i+j)(t)]_{i,j=0..k}`` decide
whether ``E_Lambda`` admits a Bernstein-like basis for the pair ``{a, b}``:
this is the case iff ``Phi_{n,k}(b - a) != 0`` for ``k = 0..n``.

Numerical zero tests compare a value with the size of the terms that were
summed to produce it (its *envelope*), so a value is called zero only when
it is indistinguishable from cancellation noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConstructionError
from .exppoly import EigenvalueMultiset, ExpPoly, is_conjugate_closed

ZERO_TOL = 1e-10
# below this |Lambda| * |t| derivatives of Phi are summed from the Taylor series
SERIES_RADIUS = 2.0
MAX_REFINE = 64


def _system_matrix(lam: EigenvalueMultiset) -> np.ndarray:
    """Rows i = 0..n: i-th derivative at 0 of each canonical basis function."""
    dim = lam.dimension
    A = np.zeros((dim, dim), dtype=complex)
    for col, (mu, s) in enumerate(lam.basis_terms()):
        for i in range(s, dim):
            A[i, col] = math.perm(i, s) * mu ** (i - s)
    return A


@lru_cache(maxsize=256)
def _fundamental_cached(lam: EigenvalueMultiset) -> tuple[ExpPoly, float]:
    A = _system_matrix(lam)
    dim = lam.dimension
    # row equilibration keeps the LU pivots comparable for large |mu|
    rho = max(1.0, lam.spectral_radius)
    D = rho ** -np.arange(dim, dtype=float)
    As = A * D[:, None]
    rhs = np.zeros(dim, dtype=complex)
    rhs[-1] = D[-1]
    try:
        c = np.linalg.solve(As, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConstructionError(f"singular initial value system for {lam}") from exc
    cond = float(np.linalg.cond(As))
    if not np.isfinite(cond) or cond > 1e15:
        raise ConstructionError(f"initial value system for {lam} is singular (cond {cond:.3g})")
    terms = {}
    for (mu, s), v in zip(lam.basis_terms(), c):
        terms.setdefault(mu, []).append(v)
    return ExpPoly(terms), cond


def fundamental_function(lam: EigenvalueMultiset) -> ExpPoly:
    """Fundamental function Phi_n of E_Lambda.

    Parameters
    ----------
    lam : EigenvalueMultiset
        Spectrum with total multiplicity n + 1.

    Returns
    -------
    ExpPoly
        The unique member of E_Lambda with ``Phi^(i)(0) = 0`` for ``i < n``
        and ``Phi^(n)(0) = 1``.  Obtained from a pivoted linear solve on the
        initial conditions, which covers repeated eigenvalues as well.
    """
    return _fundamental_cached(lam)[0]


def condition_estimate(lam: EigenvalueMultiset) -> float:
    """2-norm condition number of the (row-equilibrated) initial value system."""
    return _fundamental_cached(lam)[1]


def complete_homogeneous(values, rmax: int) -> np.ndarray:
    """h_0..h_rmax of the multiset ``values`` (coefficients of prod 1/(1 - l z))."""
    h = np.zeros(rmax + 1, dtype=complex)
    h[0] = 1.0
    for lv in values:
        for r in range(1, rmax + 1):
            h[r] += lv * h[r - 1]
    return h


def phi_derivatives(lam: EigenvalueMultiset, t, m: int):
    """Derivatives ``Phi^(j)(t)``, j = 0..m, with their envelopes.

    Returns
    -------
    values, envelopes : ndarray, shape (m + 1, len(t))
        The envelope bounds the modulus of every summand; it is the scale
        against which rounding noise in the value is judged.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = lam.n
    vals = np.zeros((m + 1, t.size), dtype=complex)
    env = np.zeros((m + 1, t.size))
    rho = lam.spectral_radius
    near = rho * np.abs(t) <= SERIES_RADIUS
    far = ~near
    if np.any(near):
        tn = t[near]
        rmax = 60 + m
        lamvals = lam.values()
        h = complete_homogeneous(lamvals, rmax)
        habs = complete_homogeneous([abs(v) for v in lamvals], rmax).real
        for j in range(m + 1):
            r0 = max(0, j - n)
            acc = np.zeros(tn.size, dtype=complex)
            eacc = np.zeros(tn.size)
            for r in range(r0, rmax + 1):
                p = r + n - j
                w = tn ** p / math.factorial(p)
                acc += h[r] * w
                eacc += habs[r] * np.abs(w)
            vals[j, near] = acc
            env[j, near] = eacc
    if np.any(far):
        tf = t[far]
        g = fundamental_function(lam)
        for j in range(m + 1):
            vals[j, far] = g(tf)
            env[j, far] = envelope(g, tf)
            g = g.derivative(1)
    return vals, env


def envelope(f: ExpPoly, x):
    """Sum of the moduli of the summands of ``f(x)``."""
    xa = np.asarray(x, dtype=float)
    out = np.zeros(xa.shape)
    ax = np.abs(xa)
    for mu, c in f.terms:
        poly = np.zeros(xa.shape)
        for v in reversed(c):
            poly = poly * ax + abs(v)
        out = out + poly * np.exp(mu.real * xa)
    return out


def _hankel_from_derivs(vals, env, k: int, sigma):
    """Determinants and thresholds of the (k+1)x(k+1) Hankel matrices.

    The threshold is ``ZERO_TOL`` times the Hadamard bound of the envelope
    matrix after the congruence scaling ``E_ij -> E_ij sigma^(i+j)``, which
    makes entries of different derivative order commensurate.
    """
    idx = np.add.outer(np.arange(k + 1), np.arange(k + 1))
    H = np.moveaxis(vals[idx], -1, 0)
    E = np.moveaxis(env[idx], -1, 0)
    dets = np.linalg.det(H)
    sig = np.asarray(sigma, dtype=float)[:, None, None]
    Es = E * sig ** idx[None]
    bound = np.prod(np.sqrt(np.sum(Es ** 2, axis=2)), axis=1)
    return dets, ZERO_TOL * bound * np.asarray(sigma, dtype=float) ** (-k * (k + 1))


def _length_scale(lam: EigenvalueMultiset, t) -> np.ndarray:
    t = np.abs(np.atleast_1d(np.asarray(t, dtype=float)))
    rho = lam.spectral_radius
    return np.minimum(t, 1.0 / rho) if rho > 0 else t


def hankel_value(lam: EigenvalueMultiset, k: int, t: float) -> complex:
    """Hankel determinant ``Phi_{n,k}(t) = det[Phi^(i+j)(t)]_{i,j=0..k}``."""
    if not 0 <= k <= lam.n:
        raise ValueError(f"k must lie in 0..{lam.n}")
    if k == 0:
        return complex(fundamental_function(lam)(t))
    vals, env = phi_derivatives(lam, [t], 2 * k)
    dets, _ = _hankel_from_derivs(vals, env, k, _length_scale(lam, t))
    return complex(dets[0])


def hankel_with_threshold(lam: EigenvalueMultiset, k: int, t) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Hankel determinants over ``t`` with their zero thresholds."""
    vals, env = phi_derivatives(lam, t, 2 * k)
    return _hankel_from_derivs(vals, env, k, _length_scale(lam, t))


def window_bound(lam: EigenvalueMultiset) -> float:
    """pi / M_n with M_n = max |Im lambda|; infinite for real spectra."""
    m = lam.max_imag
    return math.inf if m <= lam.eps else math.pi / m


@dataclass
class ChebyshevDiagnosis:
    """Outcome of the pair or interval Chebyshev test.

    ``pair_ok`` holds iff every ``|Phi_{n,k}(b - a)|`` exceeds its threshold.
    ``near_zero_flags`` lists ``(k, x)`` where a value fell in the band
    ``(0.1 T, T]`` of the threshold ``T`` (or where a sign change was found).
    """

    hankel_values: list
    pair_ok: bool
    interval_ok: bool | None
    window_bound: float
    conjugate_closed: bool
    near_zero_flags: list = field(default_factory=list)
    thresholds: list = field(default_factory=list)
    condition: float = math.nan
    a: float = 0.0
    b: float = 1.0

    @property
    def window_certified(self) -> bool:
        """Sufficient certificate: conjugate closed and b - a below the window."""
        return self.conjugate_closed and (self.b - self.a) < self.window_bound

    def to_record(self) -> dict:
        rec = {
            "a": self.a,
            "b": self.b,
            "pair_ok": self.pair_ok,
            "interval_ok": self.interval_ok,
            "window_bound": self.window_bound,
            "conjugate_closed": self.conjugate_closed,
            "window_certified": self.window_certified,
            "condition": self.condition,
        }
        for k, v in enumerate(self.hankel_values):
            rec[f"hankel_{k}"] = complex(v)
        rec["near_zero_flags"] = [[int(k), float(x)] for k, x in self.near_zero_flags]
        return rec


def _pair_values(lam, length):
    n = lam.n
    vals, env = phi_derivatives(lam, [length], 2 * n)
    out, thr = [], []
    for k in range(n + 1):
        d, t = _hankel_from_derivs(vals, env, k, _length_scale(lam, length))
        out.append(complex(d[0]))
        thr.append(float(t[0]))
    return out, thr


def chebyshev_pair_test(lam: EigenvalueMultiset, a: float, b: float) -> ChebyshevDiagnosis:
    """Test whether E_Lambda is an extended Chebyshev system for {a, b}."""
    if a == b:
        raise ValueError("a and b must differ")
    vals, thr = _pair_values(lam, b - a)
    flags = [(k, b) for k, (v, t) in enumerate(zip(vals, thr)) if 0.1 * t < abs(v) <= t]
    ok = all(abs(v) > t for v, t in zip(vals, thr))
    return ChebyshevDiagnosis(
        hankel_values=vals,
        pair_ok=ok,
        interval_ok=None,
        window_bound=window_bound(lam),
        conjugate_closed=is_conjugate_closed(lam),
        near_zero_flags=flags,
        thresholds=thr,
        condition=condition_estimate(lam),
        a=a,
        b=b,
    )


def _refine_minimum(lam, k, lo, hi):
    """Minimum of |Phi_{n,k}| / threshold on [lo, hi] and its location."""

    def obj(x):
        d, t = hankel_with_threshold(lam, k, [x])
        return abs(d[0]) / t[0]

    res = minimize_scalar(obj, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(1.0, hi)})
    return float(res.fun), float(res.x)


def chebyshev_interval_test(
    lam: EigenvalueMultiset, a: float, b: float, samples: int = 512
) -> ChebyshevDiagnosis:
    """Sampled test that no ``Phi_{n,k}`` vanishes on ``(0, b - a]``.

    The grid is ``a + (b - a) i / samples`` for ``i = 1..samples``.  A sign
    change of a real Hankel function between neighbours is refined by one
    bisection step and makes ``interval_ok`` false, as does a value below a
    tenth of its threshold.  Values inside the band ``(0.1 T, T]`` only
    leave ``interval_ok`` unset.  The window certificate reported alongside
    does not depend on sampling.
    """
    if not a < b:
        raise ValueError("need a < b")
    if samples < 2:
        raise ValueError("samples must be at least 2")
    diag = chebyshev_pair_test(lam, a, b)
    L = b - a
    t = L * np.arange(1, samples + 1) / samples
    real = diag.conjugate_closed
    vals, env = phi_derivatives(lam, t, 2 * lam.n)
    sigma = _length_scale(lam, t)
    failed = False
    undecided = False
    flags = []
    for k in range(lam.n + 1):
        dets, thr = _hankel_from_derivs(vals, env, k, sigma)
        mag = np.abs(dets)
        zero = mag <= 0.1 * thr
        band = (mag > 0.1 * thr) & (mag <= thr)
        for i in np.flatnonzero(zero):
            flags.append((k, a + t[i]))
            failed = True
        for i in np.flatnonzero(band):
            flags.append((k, a + t[i]))
            undecided = True
        # even-order zeros show no sign change; refine interior local minima
        ratio = mag / thr
        interior = np.flatnonzero(
            (ratio[1:-1] <= ratio[:-2])
            & (ratio[1:-1] <= ratio[2:])
            & (ratio[1:-1] < 0.9 * np.maximum(ratio[:-2], ratio[2:]))
            & (ratio[1:-1] > 1.0)
        ) + 1
        for i in interior[:MAX_REFINE]:
            rmin, tmin = _refine_minimum(lam, k, t[i - 1], t[i + 1])
            if rmin <= 0.1:
                flags.append((k, a + tmin))
                failed = True
            elif rmin <= 1.0:
                flags.append((k, a + tmin))
                undecided = True
        if real:
            s = np.sign(dets.real)
            for i in np.flatnonzero(s[:-1] * s[1:] < 0):
                mid = 0.5 * (t[i] + t[i + 1])
                dm, _ = hankel_with_threshold(lam, k, [mid])
                lo, hi = (t[i], mid) if np.sign(dm[0].real) != s[i] else (mid, t[i + 1])
                flags.append((k, a + 0.5 * (lo + hi)))
                failed = True
    diag.near_zero_flags = sorted(set(diag.near_zero_flags) | set(flags))
    if failed:
        diag.interval_ok = False
    elif undecided:
        diag.interval_ok = None
    else:
        diag.interval_ok = True
    return diag
