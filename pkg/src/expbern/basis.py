"""Normalized Bernstein-like bases of exponential polynomial spaces.

A Bernstein-like basis of ``E_Lambda`` for ``[a, b]`` consists of functions
``p_k`` with a zero of exact order ``k`` at ``a`` and exact order ``n - k``
at ``b``, normalized by ``p_k^(k)(a) = 1``.  It is built from the fundamental
function by a three-term recursion that raises the zero order at ``b`` one
step at a time.  Values and boundary derivatives are taken from a second,
independent solve of the two-point conditions by multiple shooting, because
the expanded exponential sums lose about ``e^{(b-a) spread}`` of relative
accuracy, ``spread`` being the range of the real parts of the spectrum.
Equidistant spectra ``lambda_j = lambda_0 + j omega`` have a closed form
which is evaluated directly, so that large degrees stay stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConstructionError, NotChebyshevError, OrderMismatchError
from .exppoly import EigenvalueMultiset, ExpPoly, canonicalize
from .fundamental import ZERO_TOL, envelope, fundamental_function, phi_derivatives

# tolerance for derivatives that must vanish in a 0/0 limit
VANISH_TOL = 1e-7
# cap on shooting segments
MAX_SEGMENTS = 400


@dataclass(frozen=True, eq=False)
class BernsteinBasis:
    """Ordered normalized basis ``p_0..p_n`` of ``E_Lambda`` on ``[a, b]``.

    Attributes
    ----------
    lam : EigenvalueMultiset
    a, b : float
    functions : tuple of ExpPoly
        ``functions[k]`` is ``p_k``.
    construction_log : tuple of (alpha, beta)
        Scalars of the recursion, one pair per step.
    closed_form : callable or None
        ``closed_form(k, x)`` evaluating ``p_k`` without expansion, present
        for equidistant spectra.
    """

    lam: EigenvalueMultiset
    a: float
    b: float
    functions: tuple
    construction_log: tuple = ()
    closed_form: Callable | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.functions) - 1

    def __len__(self):
        return len(self.functions)

    def __getitem__(self, k) -> ExpPoly:
        return self.functions[k]

    def __iter__(self):
        return iter(self.functions)

    def eval(self, k: int, x):
        """Value of ``p_k`` at ``x`` (complex)."""
        if self.closed_form is not None:
            return self.closed_form(k, x)
        vals = self.evaluate(x)[k]
        return vals[0] if np.ndim(x) == 0 else vals.reshape(np.shape(x))

    def evaluate(self, x) -> np.ndarray:
        """Matrix of values, shape ``(n + 1, len(x))``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.closed_form is not None:
            return np.array([np.asarray(self.closed_form(k, x)) for k in range(self.n + 1)])
        return two_point_jets(self.lam, self.a, self.b).evaluate(x)


def _nonzero(value: complex, f: ExpPoly, x0: float) -> bool:
    return abs(value) > ZERO_TOL * float(envelope(f, x0))


def _build_basis_uncached(lam: EigenvalueMultiset, a: float, b: float) -> BernsteinBasis:
    n = lam.n
    q0 = fundamental_function(lam).reparametrize(1.0, -a)
    if n == 0:
        return BernsteinBasis(lam, a, b, (q0,), ())
    qs = [q0]
    log = []
    # the k-th derivative at b of q_k is its first nonvanishing one
    lead = []
    v0 = complex(q0(b))
    if not _nonzero(v0, q0, b):
        raise NotChebyshevError(f"{lam} is not a Chebyshev pair on {{{a}, {b}}}: q_0(b) vanishes", k=0)
    lead.append(v0)
    dq0 = q0.derivative(1)
    alphas = [complex(dq0(b)) / v0]
    log.append((alphas[0], 0j))
    qs.append(dq0 - q0 * alphas[0])
    for k in range(2, n + 1):
        qk1, qk2 = qs[k - 1], qs[k - 2]
        dk1 = qk1.derivative(k - 1)
        vk1 = complex(dk1(b))
        if not _nonzero(vk1, dk1, b):
            raise NotChebyshevError(
                f"{lam} is not a Chebyshev pair on {{{a}, {b}}}: q_{k - 1}^({k - 1})(b) vanishes", k=k - 1
            )
        lead.append(vk1)
        alpha = complex(dk1.derivative(1)(b)) / vk1
        beta = vk1 / lead[k - 2]
        alphas.append(alpha)
        log.append((alpha, beta))
        qs.append(qk1.derivative(1) - qk1 * (alpha - alphas[k - 2]) - qk2 * beta)
    dn = qs[n].derivative(n)
    vn = complex(dn(b))
    if not _nonzero(vn, dn, b):
        raise NotChebyshevError(f"{lam} is not a Chebyshev pair on {{{a}, {b}}}: q_{n}^({n})(b) vanishes", k=n)
    funcs = [None] * (n + 1)
    for k, q in enumerate(qs):
        dq = q.derivative(n - k)
        norm = complex(dq(a))
        if not _nonzero(norm, dq, a):
            raise NotChebyshevError(
                f"{lam} is not a Chebyshev pair on {{{a}, {b}}}: q_{k}^({n - k})(a) vanishes", k=n - k
            )
        funcs[n - k] = q / norm
    return BernsteinBasis(lam, a, b, tuple(funcs), tuple(log))


@lru_cache(maxsize=1024)
def _build_basis_cached(lam, a, b):
    return _build_basis_uncached(lam, a, b)


def build_basis(lam: EigenvalueMultiset, a: float, b: float) -> BernsteinBasis:
    """Bernstein-like basis of ``E_Lambda`` on ``[a, b]`` by the q-recursion.

    ``q_0(x) = Phi_n(x - a)`` and ``q_1 = q_0' - alpha_0 q_0`` with
    ``alpha_0 = q_0'(b) / q_0(b)``; for ``k >= 2``::

        q_k = q_{k-1}' - (alpha_{k-1} - alpha_{k-2}) q_{k-1} - beta_k q_{k-2},
        beta_k = q_{k-1}^(k-1)(b) / q_{k-2}^(k-2)(b),
        alpha_{k-1} = q_{k-1}^(k)(b) / q_{k-1}^(k-1)(b).

    Then ``p_{n-k} = q_k / q_k^(n-k)(a)``.

    Raises
    ------
    NotChebyshevError
        When a denominator at ``b`` (or a normalizer at ``a``) is below the
        zero threshold; ``k`` names the failing step.
    """
    if a == b:
        raise ValueError("a and b must differ")
    return _build_basis_cached(lam, float(a), float(b))


# ---------------------------------------------------------------------------
# Two-point solve by multiple shooting
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BasisJets:
    """Derivatives ``p_k^(j)`` at equally spaced anchors ``x_0 = a < ... < x_K = b``.

    Attributes
    ----------
    jets : ndarray, shape (n + 1, K + 1, n + 1)
        ``jets[k, i, j] = p_k^(j)(x_i)``.
    charpoly : ndarray
        ``charpoly[m]`` is the coefficient of ``z^m`` in ``prod (z - lambda_j)``.
    """

    lam: EigenvalueMultiset
    a: float
    b: float
    step: float
    jets: np.ndarray
    charpoly: np.ndarray

    def at_b(self, k: int, j: int) -> complex:
        """``p_k^(j)(b)``."""
        return complex(self.jets[k, -1, j])

    def at_a(self, k: int, j: int) -> complex:
        """``p_k^(j)(a)``."""
        return complex(self.jets[k, 0, j])

    def evaluate(self, x) -> np.ndarray:
        """Values of all ``p_k`` at ``x``, shape ``(n + 1, len(x))``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        K = self.jets.shape[1] - 1
        seg = np.clip(np.floor((x - self.a) / self.step).astype(int), 0, K - 1)
        s = x - (self.a + seg * self.step)
        G = _cardinals(self.lam, self.charpoly, s)
        # p_k(x) = sum_j p_k^(j)(x_seg) g_j(x - x_seg)
        return np.einsum("kij,ji->ki", self.jets[:, seg, :], G)


def _cardinals(lam: EigenvalueMultiset, charpoly: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``g_j(s)``, j = 0..n: solutions with ``g_j^(i)(0) = delta_ij`` (shape (n + 1, len(s)))."""
    n = lam.n
    phi, _ = phi_derivatives(lam, s, n)
    G = np.zeros((n + 1, s.size), dtype=complex)
    for j in range(n + 1):
        for m in range(j + 1, n + 2):
            G[j] += charpoly[m] * phi[m - j - 1]
    return G


def _propagator(lam: EigenvalueMultiset, charpoly: np.ndarray, h: float) -> np.ndarray:
    """``P[i, j] = g_j^(i)(h)``, mapping the derivatives at ``x`` to those at ``x + h``."""
    n = lam.n
    phi, _ = phi_derivatives(lam, np.array([h]), 2 * n)
    P = np.zeros((n + 1, n + 1), dtype=complex)
    for i in range(n + 1):
        for j in range(n + 1):
            P[i, j] = sum(charpoly[m] * phi[m - j - 1 + i, 0] for m in range(j + 1, n + 2))
    return P


@lru_cache(maxsize=1024)
def _two_point_jets_cached(lam: EigenvalueMultiset, a: float, b: float) -> BasisJets:
    n = lam.n
    L = b - a
    # steps with rho h <= 1 keep every propagation inside the Taylor regime of Phi
    K = int(min(MAX_SEGMENTS, max(1, math.ceil(lam.spectral_radius * L))))
    h = L / K
    charpoly = np.poly(np.array(lam.values(), dtype=complex))[::-1]
    # unknowns z_{i,j} = p^(j)(x_i) h^j keep the orders commensurate
    S = h ** np.arange(n + 1)
    P = _propagator(lam, charpoly, h) * S[:, None] / S[None, :]
    size = (K + 1) * (n + 1)
    base = np.zeros((size, size), dtype=complex)
    for i in range(K):
        r = slice(i * (n + 1), (i + 1) * (n + 1))
        base[r, i * (n + 1):(i + 1) * (n + 1)] = -P
        base[r, (i + 1) * (n + 1):(i + 2) * (n + 1)] = np.eye(n + 1)
    # boundary rows follow the continuity rows; the unknowns at b start at the same offset
    first = last = K * (n + 1)
    jets = np.zeros((n + 1, K + 1, n + 1), dtype=complex)
    for k in range(n + 1):
        M = base.copy()
        rhs = np.zeros(size, dtype=complex)
        row = first
        # zero of order k at a, normalized k-th derivative
        for j in range(k + 1):
            M[row, j] = 1.0
            row += 1
        rhs[first + k] = S[k]
        # zero of order n - k at b
        for j in range(n - k):
            M[row, last + j] = 1.0
            row += 1
        z = np.linalg.solve(M, rhs).reshape(K + 1, n + 1)
        # the boundary conditions hold exactly, not only to solver rounding
        z[0, :k] = 0.0
        z[0, k] = S[k]
        z[K, : n - k] = 0.0
        jets[k] = z / S
    return BasisJets(lam, a, b, h, jets, charpoly)


def boundary_ratio(num: EigenvalueMultiset, den: EigenvalueMultiset, a: float, b: float, k: int) -> complex:
    """``lim_{x->b} p_{num,k}(x) / p_{den,k}(x)`` for spectra of equal dimension.

    Both functions vanish to order ``n - k`` at ``b``; the limit is the ratio
    of their ``(n - k)``-th derivatives there.
    """
    if num.n != den.n:
        raise ValueError("spectra must have the same dimension")
    order = num.n - k
    return two_point_jets(num, a, b).at_b(k, order) / two_point_jets(den, a, b).at_b(k, order)


def two_point_jets(lam: EigenvalueMultiset, a: float, b: float) -> BasisJets:
    """Derivatives of the normalized basis at anchors on ``[a, b]``.

    Each ``p_k`` is determined by its ``n + 1`` conditions at ``a`` and ``b``.
    The interval is cut into ``K`` steps with ``rho h <= 1`` (``rho`` the
    spectral radius); unknowns are the scaled derivatives at every anchor,
    linked by the exact propagator built from the Taylor series of ``Phi``.
    Relative accuracy then degrades like ``e^{h spread}`` per step instead of
    ``e^{(b - a) spread}``.
    """
    if not a < b:
        raise ValueError("need a < b")
    return _two_point_jets_cached(lam, float(a), float(b))


# ---------------------------------------------------------------------------
# Equidistant closed form
# ---------------------------------------------------------------------------


def _equidistant_eval(lam0, omega, n, a, b):
    denom = 1.0 - np.exp(omega * (a - b))
    facts = [math.factorial(k) * omega ** k for k in range(n + 1)]

    def evaluate(k, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            left = np.exp(omega * (x - a)) - 1.0
            right = (1.0 - np.exp(omega * (x - b))) / denom
            out = np.exp(lam0 * (x - a)) * left ** k * right ** (n - k) / facts[k]
        return complex(out) if out.ndim == 0 else out

    return evaluate


def equidistant_basis(lam0: complex, omega: complex, n: int, a: float, b: float) -> BernsteinBasis:
    """Closed-form basis for ``Lambda = (lambda_0 + j omega)_{j=0..n}``.

    ``p_k(x) = e^{l0 (x-a)} / (k! w^k) (e^{w(x-a)} - 1)^k
    ((1 - e^{w(x-b)}) / (1 - e^{w(a-b)}))^(n-k)``, expanded binomially into
    exponential polynomials and also evaluable in product form through
    :attr:`BernsteinBasis.closed_form`.
    """
    lam0, omega = complex(lam0), complex(omega)
    if omega == 0:
        raise ValueError("omega must be nonzero")
    denom = 1.0 - np.exp(omega * (a - b))
    if abs(denom) <= 1e-12:
        raise ConstructionError("degenerate denominator: exp(omega (a - b)) = 1")
    lam = canonicalize([lam0 + j * omega for j in range(n + 1)])
    funcs = []
    for k in range(n + 1):
        terms: dict[int, complex] = {}
        pref = 1.0 / (math.factorial(k) * omega ** k * denom ** (n - k))
        for i in range(k + 1):
            ci = math.comb(k, i) * (-1) ** (k - i)
            for j in range(n - k + 1):
                cj = math.comb(n - k, j) * (-1) ** j
                c = pref * ci * cj * np.exp(-lam0 * a - i * omega * a - j * omega * b)
                terms[i + j] = terms.get(i + j, 0) + c
        funcs.append(ExpPoly([(lam0 + m * omega, [c]) for m, c in terms.items()]))
    return BernsteinBasis(lam, float(a), float(b), tuple(funcs), (), _equidistant_eval(lam0, omega, n, a, b))


# ---------------------------------------------------------------------------
# Limits and coefficients
# ---------------------------------------------------------------------------


def limit_ratio(f: ExpPoly, g: ExpPoly, x0: float, order: int, check: bool = True) -> complex:
    """``lim_{x -> x0} f(x) / g(x)`` when both vanish to ``order`` at ``x0``.

    Returns ``f^(order)(x0) / g^(order)(x0)``.  With ``check`` the lower
    derivatives are verified to vanish (relative to their envelopes) and the
    denominator to be nonzero.

    Raises
    ------
    OrderMismatchError
        Reporting the first offending derivative.
    """
    fd, gd = f, g
    for i in range(order):
        if check:
            for name, h in (("f", fd), ("g", gd)):
                v = complex(h(x0))
                if abs(v) > VANISH_TOL * max(float(envelope(h, x0)), 1e-300):
                    raise OrderMismatchError(f"{name}^({i})({x0}) = {v:.3g} does not vanish")
        fd, gd = fd.derivative(1), gd.derivative(1)
    den = complex(gd(x0))
    if den == 0 or (check and not _nonzero(den, gd, x0)):
        raise OrderMismatchError(f"g^({order})({x0}) = {den:.3g} vanishes")
    return complex(fd(x0)) / den


def _resolve(lam: EigenvalueMultiset, value) -> complex:
    mu = lam.find(complex(value))
    if mu is None:
        raise ValueError(f"{value} is not an eigenvalue of {lam}")
    return mu


def d_coefficients(lam: EigenvalueMultiset, a: float, b: float, drop) -> list[complex]:
    """``d_k = lim_{x->b} p'_{Lambda,k}(x) / p_{Lambda minus drop,k}(x)``, k = 0..n-1.

    The limit is taken at order ``n - k - 1``, the zero order of both
    functions at ``b``.
    """
    n = lam.n
    if n == 0:
        return []
    mu = _resolve(lam, drop)
    build_basis(lam, a, b)
    build_basis(lam.remove(mu), a, b)
    full = two_point_jets(lam, a, b)
    red = two_point_jets(lam.remove(mu), a, b)
    # both sides vanish to order n - k - 1; the limit is the ratio of the next derivatives
    return [full.at_b(k, n - k) / red.at_b(k, n - k - 1) for k in range(n)]


def exp_in_basis(lam: EigenvalueMultiset, a: float, b: float, which) -> list[complex]:
    """Coefficients of ``e^{(x-a) which}`` in the basis of ``E_Lambda``.

    ``beta_0 = 1`` and ``beta_k = (-1)^k d_0 ... d_{k-1}`` with ``d`` from
    :func:`d_coefficients` dropping ``which``.  The closure identity
    ``beta_n p_n(b) = e^{(b-a) which}`` is verified.

    Raises
    ------
    ConstructionError
        If the closure identity fails beyond 1e-6 relative.
    """
    mu = _resolve(lam, which)
    d = d_coefficients(lam, a, b, mu)
    beta = [1.0 + 0j]
    for k, dk in enumerate(d):
        beta.append(-beta[-1] * dk)
    basis = build_basis(lam, a, b)
    lhs = beta[-1] * basis.eval(lam.n, b)
    rhs = np.exp((b - a) * mu)
    if abs(lhs - rhs) > 1e-6 * abs(rhs):
        raise ConstructionError(f"closure identity failed: {lhs} != {rhs}")
    return beta


def connection_constant(lam_full: EigenvalueMultiset, a: float, b: float, k: int, keep0, keep1) -> complex:
    """Constant ``C`` with ``p_{Lambda minus keep1,k} - p_{Lambda minus keep0,k} = C p_{Lambda,k+1}``.

    ``keep0`` survives in the first reduced system and ``keep1`` in the
    second.  ``C`` is the ``(k+1)``-th derivative ratio at ``a``.
    """
    mu0, mu1 = _resolve(lam_full, keep0), _resolve(lam_full, keep1)
    if mu0 == mu1:
        raise ValueError("keep0 and keep1 must differ")
    left = build_basis(lam_full.remove(mu1), a, b)[k]
    right = build_basis(lam_full.remove(mu0), a, b)[k]
    full = build_basis(lam_full, a, b)[k + 1]
    c = limit_ratio(left - right, full, a, k + 1, check=False)
    if abs(c) <= ZERO_TOL:
        raise ConstructionError(f"connection constant vanishes ({c:.3g})")
    return c


def recursion_residual(lam: EigenvalueMultiset, a: float, b: float, k: int, grid: int = 101) -> float:
    """Sup residual of ``(d/dx - l_n) p_{Lambda,k} - p_{Lambda',k-1} - d_k p_{Lambda',k}``.

    ``l_n`` is the last canonical eigenvalue and ``Lambda'`` the spectrum
    without it.  Relative to the sup of the left term.
    """
    mu = lam.values()[-1]
    red = lam.remove(mu)
    full = build_basis(lam, a, b)
    rb = build_basis(red, a, b)
    d = d_coefficients(lam, a, b, mu)
    lhs = full[k].apply_first_order(mu)
    if k >= 1:
        lhs = lhs - rb[k - 1]
    if k < lam.n:
        lhs = lhs - rb[k] * d[k]
    x = np.linspace(a, b, grid)
    scale = max(np.max(np.abs(full[k].apply_first_order(mu)(x))), 1e-300)
    return float(np.max(np.abs(lhs(x))) / scale)


def expand_in_basis(basis: BernsteinBasis, f: ExpPoly) -> list[complex]:
    """Coefficients ``c`` with ``f = sum_k c_k p_k`` for ``f`` in ``E_Lambda``.

    Uses the Taylor data at ``a``: ``p_k`` vanishes to order ``k`` there with
    ``p_k^(k)(a) = 1``, so the system is unit lower triangular.
    """
    n, a = basis.n, basis.a
    F = f.taylor_derivatives(a, n)
    if basis.closed_form is None:
        jets = two_point_jets(basis.lam, a, basis.b)
        P = [jets.jets[k, 0] for k in range(n + 1)]
    else:
        P = [p.taylor_derivatives(a, n) for p in basis.functions]
    c = []
    for j in range(n + 1):
        s = F[j] - sum(c[k] * P[k][j] for k in range(j))
        c.append(s / P[j][j])
    return c


def _polynomial_eval(lam0, n, a, b):
    L = b - a

    def evaluate(k, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(lam0 * (x - a)) * (x - a) ** k * (b - x) ** (n - k) / (math.factorial(k) * L ** (n - k))
        out = np.asarray(out, dtype=complex)
        return complex(out) if out.ndim == 0 else out

    return evaluate


def polynomial_basis(lam0: complex, n: int, a: float, b: float) -> BernsteinBasis:
    """Basis for ``Lambda = {lambda_0 : n + 1}``, the limit omega -> 0 of the equidistant case.

    ``p_k(x) = e^{l0 (x-a)} (x - a)^k (b - x)^(n-k) / (k! (b - a)^(n-k))``.
    """
    lam0 = complex(lam0)
    L = b - a
    if L == 0:
        raise ValueError("a and b must differ")
    funcs = []
    for k in range(n + 1):
        left = np.polynomial.Polynomial([-a, 1.0]) ** k
        right = np.polynomial.Polynomial([b, -1.0]) ** (n - k)
        poly = (left * right).coef / (math.factorial(k) * L ** (n - k))
        funcs.append(ExpPoly({0.0: poly}).modulate(lam0, a))
    lam = canonicalize([lam0] * (n + 1))
    return BernsteinBasis(lam, float(a), float(b), tuple(funcs), (), _polynomial_eval(lam0, n, a, b))
