"""Exact algebra of exponential polynomials.

An exponential polynomial is a finite sum ``sum_mu P_mu(x) exp(mu x)`` with
complex polynomial coefficients ``P_mu``.  :class:`ExpPoly` stores the
coefficient sequences keyed by exponent and implements differentiation,
spectral shifts and affine reparametrization symbolically, so that every
derivative used downstream is exact up to floating-point rounding of the
coefficients.

:class:`EigenvalueMultiset` is the spectrum ``Lambda`` defining the space
``E_Lambda`` of solutions of ``(d/dx - l_0) ... (d/dx - l_n) f = 0``.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import NonFiniteError, OrderUndeterminedError

DEFAULT_EPS = 1e-9
TRIM_TOL = 1e-14
# exponents closer than this (relative) are the same term in arithmetic
KEY_TOL = 1e-12


def _key_close(u: complex, v: complex, tol: float = KEY_TOL) -> bool:
    return abs(u - v) <= tol * max(1.0, abs(u), abs(v))


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenvalueMultiset:
    """Canonical multiset of eigenvalues with multiplicities.

    Entries are sorted by (real, imag) so that permutations of the input give
    identical objects.  Use :func:`canonicalize` to build one from raw values.
    """

    entries: tuple[tuple[complex, int], ...]
    eps: float = DEFAULT_EPS
    ambiguous: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.entries:
            raise ValueError("empty spectrum")
        for mu, m in self.entries:
            if m < 1:
                raise ValueError(f"multiplicity of {mu} must be positive")

    @property
    def dimension(self) -> int:
        return sum(m for _, m in self.entries)

    @property
    def n(self) -> int:
        """Degree n; the space has dimension n + 1."""
        return self.dimension - 1

    @property
    def max_imag(self) -> float:
        """M_n = max |Im lambda_j|."""
        return max(abs(mu.imag) for mu, _ in self.entries)

    @property
    def spectral_radius(self) -> float:
        return max(abs(mu) for mu, _ in self.entries)

    def values(self) -> list[complex]:
        """Eigenvalues repeated according to multiplicity."""
        return [mu for mu, m in self.entries for _ in range(m)]

    def basis_terms(self) -> list[tuple[complex, int]]:
        """Canonical basis x^s exp(mu x) as (mu, s) pairs."""
        return [(mu, s) for mu, m in self.entries for s in range(m)]

    def find(self, value: complex) -> complex | None:
        """Representative within eps of ``value``, or None."""
        tol = max(self.eps, KEY_TOL * max(1.0, abs(value)))
        best = None
        for mu, _ in self.entries:
            d = abs(mu - value)
            if d <= tol and (best is None or d < abs(best - value)):
                best = mu
        return best

    def multiplicity(self, value: complex) -> int:
        mu = self.find(value)
        if mu is None:
            return 0
        return dict(self.entries)[mu]

    def __contains__(self, value) -> bool:
        return self.find(complex(value)) is not None

    def remove(self, value: complex) -> EigenvalueMultiset:
        """Drop one multiplicity of ``value``."""
        mu = self.find(complex(value))
        if mu is None:
            raise KeyError(f"{value} is not an eigenvalue of {self}")
        out = []
        for nu, m in self.entries:
            if nu == mu:
                m -= 1
            if m > 0:
                out.append((nu, m))
        if not out:
            raise ValueError("removing the last eigenvalue leaves an empty spectrum")
        return EigenvalueMultiset(tuple(out), self.eps)

    def add(self, value: complex, count: int = 1) -> EigenvalueMultiset:
        return canonicalize(self.values() + [complex(value)] * count, self.eps)

    def shift(self, c: complex) -> EigenvalueMultiset:
        return canonicalize([mu + c for mu in self.values()], self.eps)

    def scale(self, c: complex) -> EigenvalueMultiset:
        return canonicalize([mu * c for mu in self.values()], self.eps)

    def is_real(self, tol: float | None = None) -> bool:
        tol = self.eps if tol is None else tol
        return all(abs(mu.imag) <= tol for mu, _ in self.entries)

    def __str__(self):
        parts = []
        for mu, m in self.entries:
            parts.append(format_complex(mu, 6) + (f"^{m}" if m > 1 else ""))
        return "(" + ", ".join(parts) + ")"


def _sort_key(mu: complex):
    return (round(mu.real, 12), round(mu.imag, 12))


def canonicalize(values: Iterable, eps: float = DEFAULT_EPS) -> EigenvalueMultiset:
    """Cluster raw eigenvalues into a canonical multiset.

    Values whose pairwise distance is at most ``eps`` are linked, and the
    transitive closure of that relation defines the clusters.  Each cluster
    is replaced by its centroid with the summed multiplicity.  When a chain
    links two values further apart than ``eps`` the result is flagged
    ``ambiguous`` and a warning is issued.
    """
    vals = [complex(v) for v in values]
    if not vals:
        raise ValueError("values must be nonempty")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    parent = list(range(len(vals)))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if abs(vals[i] - vals[j]) <= eps:
                parent[root(i)] = root(j)
    clusters: dict[int, list[complex]] = {}
    for i, v in enumerate(vals):
        clusters.setdefault(root(i), []).append(v)

    ambiguous = False
    entries = []
    for members in clusters.values():
        if len(members) == 1:
            centroid = members[0]
        else:
            centroid = sum(members) / len(members)
            if max(abs(u - v) for u in members for v in members) > eps:
                ambiguous = True
        entries.append((complex(centroid), len(members)))
    if ambiguous:
        warnings.warn("eigenvalue clustering is ambiguous (chained merge)", stacklevel=2)
    entries.sort(key=lambda e: _sort_key(e[0]))
    return EigenvalueMultiset(tuple(entries), eps, ambiguous)


def is_conjugate_closed(lam: EigenvalueMultiset, eps: float | None = None) -> bool:
    eps = lam.eps if eps is None else eps
    for mu, m in lam.entries:
        if not any(abs(nu - mu.conjugate()) <= eps and k == m for nu, k in lam.entries):
            return False
    return True


def equivalent(lam: EigenvalueMultiset, other: EigenvalueMultiset, eps: float | None = None) -> bool:
    """True iff the two spectra agree as multisets up to eps-matching."""
    eps = max(lam.eps, other.eps) if eps is None else eps
    if len(lam.entries) != len(other.entries):
        return False
    unused = list(other.entries)
    for mu, m in lam.entries:
        for i, (nu, k) in enumerate(unused):
            if abs(mu - nu) <= eps and m == k:
                del unused[i]
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# Exponential polynomials
# ---------------------------------------------------------------------------


def _trim(terms: dict[complex, np.ndarray]) -> tuple[tuple[complex, tuple[complex, ...]], ...]:
    scale = max((float(np.max(np.abs(c))) for c in terms.values() if len(c)), default=0.0)
    cut = TRIM_TOL * scale
    out = []
    for mu, c in terms.items():
        c = np.asarray(c, dtype=complex)
        k = len(c)
        while k > 0 and abs(c[k - 1]) <= cut:
            k -= 1
        if k:
            out.append((complex(mu), tuple(complex(v) for v in c[:k])))
    out.sort(key=lambda t: _sort_key(t[0]))
    return tuple(out)


class ExpPoly:
    """Immutable exponential polynomial ``sum_mu sum_s c_{mu,s} x^s exp(mu x)``.

    Parameters
    ----------
    terms : mapping or iterable of (mu, coefficients)
        Coefficient sequence ``(c_0, c_1, ...)`` for each exponent ``mu``.
        Exponents within a relative 1e-12 are merged.  Trailing coefficients
        below 1e-14 of the largest coefficient are trimmed.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[complex, np.ndarray] = {}
        for mu, coefs in items:
            mu = complex(mu)
            c = np.atleast_1d(np.asarray(coefs, dtype=complex))
            key = next((k for k in merged if _key_close(k, mu)), None)
            if key is None:
                merged[mu] = c.copy()
            else:
                merged[key] = _padd(merged[key], c)
        self._terms = _trim(merged)
        self._hash = None

    # construction helpers -------------------------------------------------

    @classmethod
    def exp(cls, mu: complex, coef: complex = 1.0) -> ExpPoly:
        return cls({mu: [coef]})

    @classmethod
    def monomial(cls, s: int, mu: complex = 0.0, coef: complex = 1.0) -> ExpPoly:
        c = np.zeros(s + 1, dtype=complex)
        c[s] = coef
        return cls({mu: c})

    @classmethod
    def zero(cls) -> ExpPoly:
        return cls()

    # basic protocol ---------------------------------------------------------

    @property
    def terms(self) -> tuple[tuple[complex, tuple[complex, ...]], ...]:
        return self._terms

    def exponents(self) -> list[complex]:
        return [mu for mu, _ in self._terms]

    def coefficients(self, mu: complex) -> tuple[complex, ...]:
        for nu, c in self._terms:
            if _key_close(nu, mu):
                return c
        return ()

    @property
    def degree(self) -> int:
        """Largest polynomial degree over all terms (-1 for zero)."""
        return max((len(c) - 1 for _, c in self._terms), default=-1)

    def max_coefficient(self) -> float:
        return max((abs(v) for _, c in self._terms for v in c), default=0.0)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        return isinstance(other, ExpPoly) and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms)
        return self._hash

    def __repr__(self):
        return f"ExpPoly({self.to_text()!r})"

    # arithmetic -------------------------------------------------------------

    def __add__(self, other: ExpPoly) -> ExpPoly:
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return ExpPoly(list(self._terms) + list(other._terms))

    def __neg__(self) -> ExpPoly:
        return self * -1.0

    def __sub__(self, other: ExpPoly) -> ExpPoly:
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar) -> ExpPoly:
        if isinstance(scalar, ExpPoly):
            raise TypeError("products of exponential polynomials are not supported")
        s = complex(scalar)
        return ExpPoly([(mu, np.asarray(c) * s) for mu, c in self._terms])

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> ExpPoly:
        return self * (1.0 / complex(scalar))

    def conj(self) -> ExpPoly:
        """The exponential polynomial x -> conj(f(x)) for real x."""
        return ExpPoly([(mu.conjugate(), np.conj(c)) for mu, c in self._terms])

    # evaluation -----------------------------------------------------------

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        out = np.zeros(xa.shape, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            for mu, c in self._terms:
                poly = np.zeros(xa.shape, dtype=complex)
                for v in reversed(c):
                    poly = poly * xa + v
                out = out + poly * np.exp(mu * xa)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError(f"non-finite value evaluating {self!r} at {x}")
        return complex(out) if out.ndim == 0 else out

    def eval(self, x):
        return self(x)

    def derivative(self, order: int = 1) -> ExpPoly:
        """Exact derivative of the given order."""
        if order < 0:
            raise ValueError("order must be nonnegative")
        terms = [(mu, np.asarray(c, dtype=complex)) for mu, c in self._terms]
        for _ in range(order):
            new = []
            for mu, c in terms:
                d = mu * c
                if len(c) > 1:
                    d[:-1] += np.arange(1, len(c)) * c[1:]
                new.append((mu, d))
            terms = new
        return ExpPoly(terms) if order else self

    def apply_first_order(self, lam: complex) -> ExpPoly:
        """(d/dx - lam) f."""
        return self.derivative(1) - self * lam

    def modulate(self, c: complex, a: float = 0.0) -> ExpPoly:
        """x -> f(x) exp(c (x - a))."""
        c = complex(c)
        factor = np.exp(-c * a)
        return ExpPoly([(mu + c, np.asarray(co) * factor) for mu, co in self._terms])

    def reparametrize(self, c: float, gamma: float = 0.0) -> ExpPoly:
        """x -> f(c x + gamma)."""
        if c == 0:
            raise ValueError("reparametrization scale must be nonzero")
        inner = Polynomial([gamma, c])
        terms = []
        for mu, co in self._terms:
            p = Polynomial(np.asarray(co, dtype=complex))(inner)
            terms.append((mu * c, np.asarray(p.coef, dtype=complex) * np.exp(mu * gamma)))
        return ExpPoly(terms)

    def taylor_derivatives(self, x0: float, m: int) -> list[complex]:
        """(f(x0), f'(x0), ..., f^(m)(x0))."""
        out = []
        g = self
        for j in range(m + 1):
            out.append(complex(g(x0)))
            if j < m:
                g = g.derivative(1)
        return out

    def zero_order_at(self, x0: float, max_order: int, tol: float = 1e-10) -> tuple[int, complex]:
        """Order of the zero of f at x0 and the first nonvanishing derivative.

        A derivative counts as nonzero when its modulus exceeds
        ``tol * max|c| * max(1, |x0|)**deg``.
        """
        if self.is_zero():
            raise OrderUndeterminedError("zero function has no finite zero order")
        scale = self.max_coefficient() * max(1.0, abs(x0)) ** max(self.degree, 0)
        for k, v in enumerate(self.taylor_derivatives(x0, max_order)):
            if abs(v) > tol * scale:
                return k, v
        raise OrderUndeterminedError(
            f"all derivatives up to order {max_order} vanish at {x0} (scale {scale:.3g})"
        )

    def is_real_valued(self, tol: float = 1e-10) -> bool:
        """True iff the coefficients are invariant under conjugate reflection."""
        if self.is_zero():
            return True
        scale = self.max_coefficient()
        diff = self - self.conj()
        # unmatched exponents survive as separate terms and show up here
        return diff.max_coefficient() <= tol * scale

    def in_space(self, lam: EigenvalueMultiset) -> bool:
        for mu, c in self._terms:
            rep = lam.find(mu)
            if rep is None or len(c) > lam.multiplicity(rep):
                return False
        return True

    # text form ------------------------------------------------------------

    def to_text(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        for mu, c in self._terms:
            for s, v in enumerate(c):
                if v == 0:
                    continue
                parts.append(
                    f"({v.real:.17g},{v.imag:.17g}) * x^{s} * exp(({mu.real:.17g},{mu.imag:.17g})*x)"
                )
        return " + ".join(parts) if parts else "0"

    @classmethod
    def from_text(cls, text: str) -> ExpPoly:
        text = text.strip()
        if text == "0":
            return cls()
        terms = []
        pos = 0
        for m in _TERM_RE.finditer(text):
            gap = text[pos:m.start()].strip()
            if gap not in ("", "+"):
                raise ValueError(f"cannot parse exponential polynomial near {gap!r}")
            cre, cim, s, mre, mim = m.groups()
            coef = np.zeros(int(s) + 1, dtype=complex)
            coef[int(s)] = complex(float(cre), float(cim))
            terms.append((complex(float(mre), float(mim)), coef))
            pos = m.end()
        if text[pos:].strip() or not terms:
            raise ValueError(f"cannot parse exponential polynomial: {text!r}")
        return cls(terms)


_NUM = r"\s*([-+]?(?:\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|inf|nan))\s*"
_TERM_RE = re.compile(
    r"\(" + _NUM + "," + _NUM + r"\)\s*\*\s*x\^(\d+)\s*\*\s*exp\(\(" + _NUM + "," + _NUM + r"\)\s*\*\s*x\)"
)


def _padd(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if len(u) < len(v):
        u, v = v, u
    out = u.astype(complex).copy()
    out[: len(v)] += v
    return out


def format_complex(z: complex, digits: int = 17) -> str:
    """Render in the CLI literal grammar: ``re``, ``imi``, ``re+imi``, ``re-imi``."""
    z = complex(z)
    re_s = f"{z.real:.{digits}g}"
    if z.imag == 0:
        return re_s
    im_s = f"{abs(z.imag):.{digits}g}"
    if z.real == 0:
        return ("-" if z.imag < 0 else "") + im_s + "i"
    return re_s + ("-" if z.imag < 0 else "+") + im_s + "i"


_REAL = r"(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_LITERAL_RE = re.compile(
    rf"^(?:[-+]?{_REAL}|[-+]?(?:{_REAL})?i|[-+]?{_REAL}[-+](?:{_REAL})?i)$"
)


def parse_complex(text: str) -> complex:
    """Parse the literal grammar of :func:`format_complex` (also ``i``, ``-i``)."""
    t = text.strip()
    if not _LITERAL_RE.match(t):
        raise ValueError(f"malformed complex literal {text!r}")
    if t.endswith("i"):
        body = t[:-1]
        if body == "" or body[-1] in "+-":
            body += "1"
        return complex(body + "j")
    return complex(float(t), 0.0)


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)


def as_exppoly_list(items: Sequence) -> list[ExpPoly]:
    return [f if isinstance(f, ExpPoly) else ExpPoly(f) for f in items]
