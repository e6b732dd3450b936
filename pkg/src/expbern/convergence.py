"""Convergence experiments for families of Bernstein operators.

The convergence theorem considers three distinct real eigenvalues
``l0, l1, l2`` present in every spectrum of a family.  With

    a(n, k) = lim_{x->b} p_{Lambda - l1, k} / p_{Lambda - l0, k} = d~_k / D_k,
    b(n, k) = lim_{x->b} p_{Lambda - l2, k} / p_{Lambda - l0, k},

the operators converge to the identity when the mesh tends to zero and
``log b(n, k) / (t_k - t_{k+1}) -> l2 - l0`` uniformly in ``k``.  This module
measures both conditions and the sup error on test functions.

For equidistant spectra ``l_j = l0 + j w`` (j = 0..N) the reproduced pair is
``(l0, l_N)`` and the third eigenvalue is ``l_m`` with ``m = N // 2``.  Then
``a(N, k) = e^{-w (b-a)}`` and ``b(N, k) = S_k / S_{k+1}`` where
``S_k = sum_j C(k, j) C(N-k, m-j) e^{j w (b-a)}``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import boundary_ratio, build_basis
from .errors import ExpBernError
from .exppoly import EigenvalueMultiset, canonicalize, parse_complex
from .operator import BernsteinOperator, apply, build_operator, classical_operator, equidistant_operator

FAMILY_KINDS = ("equidistant", "morigi_neamtu", "classical", "custom")


@dataclass(frozen=True)
class FamilySpec:
    """A sequence of spectra indexed by ``n`` together with the fixed-pair rule.

    kinds
        ``equidistant``: ``lam0``, ``lam_end``; degree ``n`` with
        ``l_j = lam0 + j (lam_end - lam0) / n``.
        ``morigi_neamtu``: ``mu0``, ``mu1``; degree ``2n`` with
        ``l_j = mu0 + j (mu1 - mu0) / (2n)``.
        ``classical``: ``lam0``; ``{lam0 : n + 1}`` with the confluent pair.
        ``custom``: ``spectrum(n)`` returning eigenvalues, ``fix = (l0, l1)``
        and ``third = l2``; built by the generic construction.
    """

    kind: str
    a: float = 0.0
    b: float = 1.0
    params: dict = field(default_factory=dict)
    spectrum: Callable | None = None
    fix: tuple | None = None
    third: complex | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}; choose from {FAMILY_KINDS}")
        if not self.a < self.b:
            raise ValueError("need a < b")
        if self.kind == "custom" and (self.spectrum is None or self.fix is None):
            raise ValueError("custom families need spectrum and fix")
        if self.kind == "morigi_neamtu":
            mu0, mu1 = complex(self.params["mu0"]), complex(self.params["mu1"])
            if mu0 == mu1:
                raise ValueError("mu0 and mu1 must differ")
            real = mu0.imag == 0 and mu1.imag == 0
            if not real and abs(mu1 - mu0.conjugate()) > 1e-12:
                raise ValueError("mu0 and mu1 must be real or complex conjugates")
            if not real and self.b - self.a >= math.pi / abs(mu0.imag):
                raise ValueError("conjugate endpoints need b - a < pi / |Im mu0|")

    def degree(self, n: int) -> int:
        return 2 * n if self.kind == "morigi_neamtu" else n

    def eigenvalues(self, n: int) -> EigenvalueMultiset:
        if self.kind == "equidistant":
            l0, le = complex(self.params["lam0"]), complex(self.params["lam_end"])
            return canonicalize([l0 + j * (le - l0) / n for j in range(n + 1)])
        if self.kind == "morigi_neamtu":
            return morigi_neamtu_family(self.params["mu0"], self.params["mu1"], n)
        if self.kind == "classical":
            return canonicalize([self.params.get("lam0", 0.0)] * (n + 1))
        return canonicalize(self.spectrum(n))


def morigi_neamtu_family(mu0: complex, mu1: complex, n: int) -> EigenvalueMultiset:
    """Eigenvalues ``mu0 + j (mu1 - mu0) / (2n)``, j = 0..2n."""
    mu0, mu1 = complex(mu0), complex(mu1)
    if mu0 == mu1:
        raise ValueError("mu0 and mu1 must differ")
    if n < 1:
        raise ValueError("n must be positive")
    delta = mu1 - mu0
    return canonicalize([mu0 + j * delta / (2 * n) for j in range(2 * n + 1)])


def _equidistant_params(family: FamilySpec, n: int):
    N = family.degree(n)
    if family.kind == "equidistant":
        l0, le = complex(family.params["lam0"]), complex(family.params["lam_end"])
    else:
        l0, le = complex(family.params["mu0"]), complex(family.params["mu1"])
    return l0, (le - l0) / N, N


def family_operator(family: FamilySpec, n: int) -> BernsteinOperator:
    """Operator of the family at index ``n`` (closed form where available)."""
    if family.kind in ("equidistant", "morigi_neamtu"):
        l0, w, N = _equidistant_params(family, n)
        return equidistant_operator(l0, w, N, family.a, family.b)
    if family.kind == "classical":
        return classical_operator(float(complex(family.params.get("lam0", 0.0)).real), n, family.a, family.b)
    lam = family.eigenvalues(n)
    return build_operator(lam, family.a, family.b, family.fix)


@dataclass
class ConvergenceEntry:
    """Diagnostics at one ``n``; lists are indexed by ``k = 0..N-1``."""

    n: int
    degree: int
    sup_error: float = math.nan
    mesh: float = math.nan
    a_vals: list = field(default_factory=list)
    b_vals: list = field(default_factory=list)
    log_ratio_dev: float = math.nan
    ratio_dev: float = math.nan
    real_triple: bool = True
    error: str | None = None


@dataclass
class ConvergenceReport:
    family: FamilySpec
    function: str
    entries: list

    def column(self, name: str) -> list:
        return [getattr(e, name) for e in self.entries]

    def rows(self) -> list[list]:
        return [[e.n, e.sup_error, e.mesh, e.ratio_dev, e.log_ratio_dev] for e in self.entries]


def _triple_values(family: FamilySpec, n: int):
    if family.kind in ("equidistant", "morigi_neamtu"):
        l0, w, N = _equidistant_params(family, n)
        m = N // 2
        if m == 0:
            raise ValueError("a third eigenvalue needs degree at least 2")
        return l0, l0 + N * w, l0 + m * w
    if family.kind == "classical":
        raise ValueError("the classical family has no three distinct eigenvalues")
    if family.third is None:
        raise ValueError("custom families need the third eigenvalue l2")
    l0, l1 = (complex(v) for v in family.fix)
    return l0, l1, complex(family.third)


def hypothesis_report(family: FamilySpec, n: int, op: BernsteinOperator | None = None) -> ConvergenceEntry:
    """Evaluate the convergence hypotheses at index ``n``.

    Computes ``a(n,k)``, ``b(n,k)``, the mesh ``max_k (t_k - t_{k-1})``,
    ``log_ratio_dev = max_k |log b(n,k) / (t_k - t_{k+1}) - (l2 - l0)|`` and
    ``ratio_dev = max_k |(1 - b) / (1 - a) - (l2 - l0) / (l1 - l0)|``.
    Complex triples (conjugate Morigi-Neamtu endpoints) are evaluated in
    complex arithmetic and flagged with ``real_triple = False``.

    Raises
    ------
    ValueError
        No three distinct eigenvalues are designated.
    """
    l0, l1, l2 = _triple_values(family, n)
    if len({l0, l1, l2}) < 3:
        raise ValueError("l0, l1, l2 must be distinct")
    if op is None:
        op = family_operator(family, n)
    N = op.n
    t = op.nodes
    if family.kind in ("equidistant", "morigi_neamtu"):
        _, w, _ = _equidistant_params(family, n)
        L = family.b - family.a
        Y = np.exp(w * L)
        m = N // 2
        S = [sum(math.comb(k, j) * math.comb(N - k, m - j) * Y ** j for j in range(max(0, m - N + k), min(k, m) + 1))
             for k in range(N + 1)]
        a_vals = [complex(np.exp(-w * L))] * N
        b_vals = [complex(S[k] / S[k + 1]) for k in range(N)]
    else:
        lam = op.basis.lam
        a_vals = [complex(r) for r in op.node_ratios]
        num, den = lam.remove(l2), lam.remove(l0)
        build_basis(num, family.a, family.b)
        build_basis(den, family.a, family.b)
        b_vals = [boundary_ratio(num, den, family.a, family.b, k) for k in range(N)]
    target_log = l2 - l0
    target_ratio = (l2 - l0) / (l1 - l0)
    log_dev = max(abs(cmath.log(bv) / (t[k] - t[k + 1]) - target_log) for k, bv in enumerate(b_vals))
    ratio_dev = max(abs((1 - bv) / (1 - av) - target_ratio) for av, bv in zip(a_vals, b_vals))
    real = all(abs(v.imag) <= 1e-12 for v in (l0, l1, l2))
    if real:
        a_vals = [v.real for v in a_vals]
        b_vals = [v.real for v in b_vals]
    return ConvergenceEntry(
        n=n,
        degree=N,
        mesh=float(np.max(np.diff(t))),
        a_vals=a_vals,
        b_vals=b_vals,
        log_ratio_dev=float(log_dev),
        ratio_dev=float(ratio_dev),
        real_triple=real,
    )


TEST_FUNCTIONS = ("abs_mid", "square", "exp:<lambda>", "sin", "runge")


def test_function(name: str, a: float = 0.0, b: float = 1.0) -> Callable[[float], float]:
    """Named test function on ``[a, b]``.

    ``abs_mid`` is ``|x - (a + b)/2|``, ``square`` is ``x^2``, ``exp:L`` is
    ``e^{L x}``, ``sin`` is ``sin x`` and ``runge`` is ``1 / (1 + 25 x^2)``.
    """
    key = name.strip()
    if key == "abs_mid":
        mid = 0.5 * (a + b)
        return lambda x: np.abs(np.asarray(x) - mid) if np.ndim(x) else abs(x - mid)
    if key == "square":
        return lambda x: x * x
    if key == "sin":
        return np.sin
    if key == "runge":
        return lambda x: 1.0 / (1.0 + 25.0 * x * x)
    for prefix in ("exp:", "exp ", "exp"):
        if key.startswith(prefix) and len(key) > len(prefix):
            lam = parse_complex(key[len(prefix):].strip("() "))
            if lam.imag == 0:
                lr = lam.real
                return lambda x: np.exp(lr * x)
            return lambda x: np.exp(lam * x)
    raise ValueError(f"unknown test function {name!r}; choose from {', '.join(TEST_FUNCTIONS)}")


test_function.__test__ = False  # not a pytest test


def convergence_study(
    family: FamilySpec,
    f,
    n_list: Sequence[int],
    grid: int = 1001,
) -> ConvergenceReport:
    """Sup errors and hypothesis diagnostics along ``n_list``.

    Parameters
    ----------
    f : str or callable
        Test function name (see :func:`test_function`) or a callable.
    grid : int
        Number of uniform points on ``[a, b]`` for the sup error.

    A construction failure at some ``n`` is recorded in that entry's
    ``error`` field and the study continues.
    """
    name = f if isinstance(f, str) else getattr(f, "__name__", "callable")
    func = test_function(f, family.a, family.b) if isinstance(f, str) else f
    x = np.linspace(family.a, family.b, grid)
    fx = np.array([func(float(v)) for v in x])
    entries = []
    for n in n_list:
        try:
            op = family_operator(family, n)
        except (ExpBernError, ValueError) as exc:
            entries.append(ConvergenceEntry(n=n, degree=family.degree(n), error=str(exc)))
            continue
        try:
            entry = hypothesis_report(family, n, op)
        except (ExpBernError, ValueError) as exc:
            entry = ConvergenceEntry(n=n, degree=op.n, mesh=float(np.max(np.diff(op.nodes))), error=str(exc))
            if family.kind == "classical":
                entry.error = None
        approx = apply(op, func, x)
        entry.sup_error = float(np.max(np.abs(approx - fx)))
        entries.append(entry)
    return ConvergenceReport(family, name, entries)
