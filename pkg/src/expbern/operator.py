"""Generalized Bernstein operators reproducing two exponentials.

Given real eigenvalues ``l0 != l1`` of ``Lambda`` the operator

    B f = sum_k alpha_k f(t_k) p_k

reproduces ``e^{l0 x}`` and ``e^{l1 x}``.  With ``d~_l`` the limit
coefficients of the space without ``l0`` and ``D_l`` those without ``l1``,
the nodes and weights are

    t_0 = a,   t_k = t_{k-1} + log(d~_{k-1} / D_{k-1}) / (l0 - l1),
    alpha_k = e^{-l0 (t_k - a)} (-1)^k d~_0 ... d~_{k-1}.

When ``l0`` is a repeated eigenvalue the operator reproducing ``e^{l0 x}``
and ``x e^{l0 x}`` is the limit ``l1 -> l0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .basis import (
    BernsteinBasis,
    build_basis,
    boundary_ratio,
    d_coefficients,
    equidistant_basis,
    expand_in_basis,
    polynomial_basis,
)
from .errors import ConstructionError, ExpBernError, LimitUnresolvedError, MissingNodesError
from .exppoly import EigenvalueMultiset, ExpPoly, canonicalize, is_conjugate_closed

IMAG_TOL = 1e-9
ENDPOINT_TOL = 1e-8
DEFAULT_EPS_SCHEDULE = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True, eq=False)
class BernsteinOperator:
    """Nodes, weights and basis of a generalized Bernstein operator.

    Attributes
    ----------
    basis : BernsteinBasis
    fixed_pair : tuple of complex
        ``(l0, l1)``; for a confluent operator ``l1 == l0`` and the
        reproduced pair is ``e^{l0 x}``, ``x e^{l0 x}``.
    nodes, weights : ndarray
        ``t_0..t_n`` and ``alpha_0..alpha_n``.  Weights are complex only for
        spectra that are not closed under conjugation.
    nodes_ordered, weights_positive : bool
        Reported, never enforced.
    node_ratios : ndarray
        ``d~_k / D_k = e^{(l0 - l1)(t_{k+1} - t_k)}``; empty when not computed.
    info : dict
        Construction details (method, extrapolation gaps).
    """

    basis: BernsteinBasis
    fixed_pair: tuple
    nodes: np.ndarray
    weights: np.ndarray
    nodes_ordered: bool
    weights_positive: bool
    confluent: bool = False
    d_tilde: tuple = ()
    d_big: tuple = ()
    node_ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))
    info: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def a(self) -> float:
        return self.basis.a

    @property
    def b(self) -> float:
        return self.basis.b

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.weights)

    def apply(self, f, x):
        return apply(self, f, x)

    def to_record(self) -> dict:
        """Flat export record."""
        rec = {
            "eigenvalues": [complex(v) for v in self.basis.lam.values()],
            "interval": [self.a, self.b],
            "fixed_pair": [complex(v) for v in self.fixed_pair],
            "confluent": self.confluent,
            "nodes": [float(t) for t in self.nodes],
            "weights": [w if np.iscomplexobj(self.weights) else float(w) for w in self.weights],
            "nodes_ordered": self.nodes_ordered,
            "weights_positive": self.weights_positive,
        }
        if len(self.node_ratios):
            rec["node_ratios"] = [float(r) for r in self.node_ratios]
        for k, v in self.info.items():
            if isinstance(v, (int, float, str, bool)):
                rec[k] = v
        return rec


def _realify(values, scale_tol=IMAG_TOL, what="value"):
    arr = np.asarray(values, dtype=complex)
    if arr.size and np.all(np.abs(arr.imag) <= scale_tol * np.maximum(np.abs(arr), 1e-300)):
        return arr.real.copy()
    return arr


def _flags(nodes, weights):
    ordered = bool(np.all(np.diff(nodes) > 0))
    positive = bool(not np.iscomplexobj(weights) and np.all(weights > 0))
    return ordered, positive


def _resolve_real(lam: EigenvalueMultiset, value, name) -> complex:
    mu = lam.find(complex(value))
    if mu is None:
        raise ValueError(f"fixed eigenvalue {name}={value} is not in {lam}")
    if abs(mu.imag) > lam.eps:
        raise ValueError(f"fixed eigenvalue {name}={value} must be real")
    return complex(mu.real)


def build_operator(lam: EigenvalueMultiset, a: float, b: float, fix) -> BernsteinOperator:
    """Bernstein operator of ``E_Lambda`` on ``[a, b]`` fixing ``e^{l0 x}``, ``e^{l1 x}``.

    Parameters
    ----------
    lam : EigenvalueMultiset
    a, b : float
    fix : pair of eigenvalues
        Distinct real members ``(l0, l1)`` of ``lam``.

    Raises
    ------
    ValueError
        Fixed eigenvalues missing, complex or equal.
    NotChebyshevError
        ``Lambda``, ``Lambda - l0`` or ``Lambda - l1`` lacks a basis.
    ConstructionError
        A node ratio is not positive real or ``t_n`` misses ``b``.
    """
    l0 = _resolve_real(lam, fix[0], "l0")
    l1 = _resolve_real(lam, fix[1], "l1")
    if l0 == l1:
        raise ValueError("fixed eigenvalues must differ; use build_operator_confluent")
    basis = build_basis(lam, a, b)
    n = lam.n
    dt = d_coefficients(lam, a, b, l0)
    dD = d_coefficients(lam, a, b, l1)
    ratios = np.array([x / y for x, y in zip(dt, dD)], dtype=complex)
    if ratios.size and np.any(np.abs(ratios.imag) > IMAG_TOL * np.abs(ratios)):
        raise ConstructionError(f"node ratios are not real: {ratios}")
    ratios = ratios.real
    if np.any(ratios <= 0):
        raise ConstructionError(f"node ratios are not positive: {ratios}")
    nodes = [float(a)]
    for r in ratios:
        nodes.append(nodes[-1] + math.log(r) / (l0.real - l1.real))
    nodes = np.array(nodes)
    if abs(nodes[-1] - b) > ENDPOINT_TOL * max(1.0, abs(b), abs(a)):
        raise ConstructionError(f"t_n = {nodes[-1]!r} differs from b = {b!r}")
    weights = [1.0 + 0j]
    prod = 1.0 + 0j
    for k in range(1, n + 1):
        prod *= -dt[k - 1]
        weights.append(np.exp(-l0.real * (nodes[k] - a)) * prod)
    weights = _realify(weights)
    if is_conjugate_closed(lam) and np.iscomplexobj(weights):
        raise ConstructionError(f"weights are not real: {weights}")
    weights[0] = 1.0
    ordered, positive = _flags(nodes, weights)
    return BernsteinOperator(
        basis=basis,
        fixed_pair=(l0, l1),
        nodes=nodes,
        weights=weights,
        nodes_ordered=ordered,
        weights_positive=positive,
        d_tilde=tuple(dt),
        d_big=tuple(dD),
        node_ratios=ratios,
        info={"method": "generic"},
    )


def _confluent_direct(lam, a, b, l0):
    basis = build_basis(lam, a, b)
    e0 = ExpPoly.exp(l0).modulate(0.0) * np.exp(-l0 * a)
    e1 = ExpPoly({l0: [-a, 1.0]}) * np.exp(-l0 * a)
    beta = np.array(expand_in_basis(basis, e0))
    delta = np.array(expand_in_basis(basis, e1))
    beta_r, delta_r = _realify(beta), _realify(delta)
    if np.iscomplexobj(beta_r) or np.iscomplexobj(delta_r):
        raise ConstructionError("confluent expansion coefficients are not real")
    if np.any(beta_r == 0):
        raise ConstructionError("vanishing coefficient of e^{l0 (x - a)}")
    nodes = a + delta_r / beta_r
    nodes[0] = a
    weights = np.exp(-l0.real * (nodes - a)) * beta_r
    weights[0] = 1.0
    return basis, nodes, weights


def _confluent_extrapolate(lam, a, b, l0, eps_schedule):
    levels = []
    errors = []
    for eps in sorted(eps_schedule, reverse=True):
        lam_eps = lam.remove(l0).add(l0 + eps)
        try:
            op = build_operator(lam_eps, a, b, (l0, l0 + eps))
        except (ExpBernError, ValueError) as exc:
            errors.append(f"eps={eps:g}: {exc}")
            continue
        levels.append((eps, op.nodes, op.weights))
    if len(levels) < 2:
        raise LimitUnresolvedError(
            "perturbed construction failed at too many levels: " + "; ".join(errors or ["<2 levels"])
        )

    def extrap(lo, hi):
        (e0, t0, w0), (e1, t1, w1) = lo, hi
        s = e0 / (e1 - e0)
        return t0 + (t0 - t1) * s, w0 + (w0 - w1) * s

    # levels are sorted by decreasing eps
    nodes, weights = extrap(levels[-1], levels[-2])
    gap = math.nan
    if len(levels) >= 3:
        pn, pw = extrap(levels[-2], levels[-3])
        gap = float(max(np.max(np.abs(nodes - pn)), np.max(np.abs(weights - pw) / np.maximum(1.0, np.abs(weights)))))
        if gap > 1e-5:
            raise LimitUnresolvedError(f"extrapolated limits disagree by {gap:.3g} between the last two levels")
    return nodes, weights, gap, errors


def build_operator_confluent(
    lam: EigenvalueMultiset,
    a: float,
    b: float,
    fix_double,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    method: str = "direct",
) -> BernsteinOperator:
    """Operator fixing ``e^{l0 x}`` and ``x e^{l0 x}`` for a repeated eigenvalue ``l0``.

    Parameters
    ----------
    method : {"direct", "extrapolate"}
        ``"direct"`` evaluates the limit exactly.  Reproducing both functions
        forces ``alpha_k e^{l0 (t_k - a)} = beta_k`` and
        ``(t_k - a) beta_k = delta_k``, where ``beta`` and ``delta`` expand
        ``e^{l0 (x-a)}`` and ``(x - a) e^{l0 (x-a)}`` in the basis.
        ``"extrapolate"`` builds the operators with ``l1 = l0 + eps`` over
        ``eps_schedule`` and extrapolates linearly in ``eps`` from the two
        smallest levels; extrapolants from successive level pairs must agree
        within 1e-5.

    Raises
    ------
    LimitUnresolvedError
        Extrapolation failed or did not settle.
    """
    l0 = _resolve_real(lam, fix_double, "l0")
    if lam.multiplicity(l0) < 2:
        raise ValueError(f"{fix_double} must have multiplicity at least 2")
    if method == "direct":
        basis, nodes, weights = _confluent_direct(lam, a, b, l0)
        info = {"method": "direct"}
    elif method == "extrapolate":
        if not eps_schedule or any(e <= 0 for e in eps_schedule):
            raise ValueError("eps_schedule must hold positive values")
        basis = build_basis(lam, a, b)
        nodes, weights, gap, errors = _confluent_extrapolate(lam, a, b, l0, eps_schedule)
        info = {"method": "extrapolate", "extrapolation_gap": gap, "failed_levels": len(errors)}
    else:
        raise ValueError(f"unknown method {method!r}")
    ordered, positive = _flags(nodes, weights)
    gaps = np.diff(nodes)
    info["min_node_gap"] = float(np.min(gaps)) if gaps.size else math.nan
    return BernsteinOperator(
        basis=basis,
        fixed_pair=(l0, l0),
        nodes=np.asarray(nodes, dtype=float),
        weights=np.asarray(weights, dtype=float),
        nodes_ordered=ordered,
        weights_positive=positive,
        confluent=True,
        info=info,
    )


def equidistant_operator(lam0: complex, omega: complex, n: int, a: float, b: float) -> BernsteinOperator:
    """Closed-form operator for ``lambda_j = lambda_0 + j omega``, j = 0..n.

    ``t_k = a + k (b - a) / n`` and
    ``alpha_k = n!/(n-k)! omega^k e^{-l0 k (b-a)/n} / (e^{omega (b-a)} - 1)^k``.
    It reproduces ``e^{l0 x}`` and ``e^{l_n x}``, so ``fixed_pair`` is
    ``(l0, l0 + n omega)``.
    """
    lam0, omega = complex(lam0), complex(omega)
    basis = equidistant_basis(lam0, omega, n, a, b)
    L = b - a
    nodes = a + L * np.arange(n + 1) / n
    den = np.exp(omega * L) - 1.0
    weights = [
        math.perm(n, k) * omega ** k * np.exp(-lam0 * k * L / n) / den ** k for k in range(n + 1)
    ]
    weights = _realify(weights)
    weights[0] = 1.0
    ordered, positive = _flags(nodes, weights)
    return BernsteinOperator(
        basis=basis,
        fixed_pair=(lam0, lam0 + n * omega),
        nodes=nodes,
        weights=weights,
        nodes_ordered=ordered,
        weights_positive=positive,
        node_ratios=np.full(n, np.exp(-omega * L)).real if abs(omega.imag) == 0 else np.zeros(0),
        info={"method": "equidistant"},
    )


def classical_operator(lam0: float, n: int, a: float, b: float) -> BernsteinOperator:
    """Operator of ``{lambda_0 : n + 1}`` fixing ``e^{l0 x}`` and ``x e^{l0 x}``.

    For ``lambda_0 = 0`` this is the classical Bernstein polynomial operator:
    ``t_k = a + k (b - a)/n`` and ``alpha_k = n!/(n-k)! / (b - a)^k``.
    """
    basis = polynomial_basis(lam0, n, a, b)
    L = b - a
    nodes = a + L * np.arange(n + 1) / n
    weights = np.array([math.perm(n, k) / L ** k * math.exp(-lam0 * (nodes[k] - a)) for k in range(n + 1)])
    ordered, positive = _flags(nodes, weights)
    return BernsteinOperator(
        basis=basis,
        fixed_pair=(complex(lam0), complex(lam0)),
        nodes=nodes,
        weights=weights,
        nodes_ordered=ordered,
        weights_positive=positive,
        confluent=True,
        info={"method": "classical"},
    )


def _node_values(op: BernsteinOperator, f) -> np.ndarray:
    if callable(f):
        return np.array([f(float(t)) for t in op.nodes])
    if isinstance(f, Mapping):
        keys = np.array(sorted(f.keys()), dtype=float)
        vals, missing = [], []
        for t in op.nodes:
            tol = 1e-10 * max(1.0, abs(t))
            hit = np.flatnonzero(np.abs(keys - t) <= tol) if keys.size else []
            if len(hit):
                vals.append(f[keys[hit[0]]] if keys[hit[0]] in f else f[min(f, key=lambda s: abs(s - t))])
            else:
                missing.append(float(t))
        if missing:
            raise MissingNodesError(missing)
        return np.array(vals)
    raise TypeError("f must be callable or a mapping from nodes to values")


def apply(op: BernsteinOperator, f, x):
    """``(B f)(x) = sum_k alpha_k f(t_k) p_k(x)``.

    Parameters
    ----------
    f : callable or mapping
        Function on ``[a, b]`` or a table ``{node: value}`` covering all nodes
        (matched within 1e-10 relative).
    x : float or array

    Returns
    -------
    float, complex or ndarray
        Real whenever the operator and the node values are real.
    """
    fv = _node_values(op, f)
    xa = np.asarray(x, dtype=float)
    P = op.basis.evaluate(xa.ravel())
    out = (op.weights * fv) @ P
    if op.is_real and not np.iscomplexobj(fv):
        out = out.real
    out = out.reshape(xa.shape)
    return out.item() if out.ndim == 0 else out


def fixed_point_residuals(op: BernsteinOperator, grid: int = 201) -> tuple[float, float]:
    """Relative sup errors of ``B`` on its two reproduced functions.

    ``r_j = sup |B g_j - g_j| / sup |g_j|`` over ``grid`` points, with
    ``g_0 = e^{l0 x}`` and ``g_1 = e^{l1 x}`` (``x e^{l0 x}`` if confluent).
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    x = np.linspace(op.a, op.b, grid)
    l0, l1 = op.fixed_pair
    g0 = lambda s: np.exp(l0 * s)
    g1 = (lambda s: s * np.exp(l0 * s)) if op.confluent else (lambda s: np.exp(l1 * s))
    out = []
    for g in (g0, g1):
        gx = g(x)
        out.append(float(np.max(np.abs(apply(op, g, x) - gx)) / max(np.max(np.abs(gx)), 1e-300)))
    return out[0], out[1]


def node_consistency(op: BernsteinOperator) -> np.ndarray:
    """``|e^{(l0-l1)(t_k - t_{k-1})} - lim p_{Lambda-l1,k-1} / p_{Lambda-l0,k-1}|`` per k."""
    lam, a, b = op.basis.lam, op.a, op.b
    l0, l1 = op.fixed_pair
    n = lam.n
    without1, without0 = lam.remove(l1), lam.remove(l0)
    build_basis(without1, a, b)
    build_basis(without0, a, b)
    out = []
    for k in range(1, n + 1):
        lhs = math.exp((l0.real - l1.real) * (op.nodes[k] - op.nodes[k - 1]))
        rhs = boundary_ratio(without1, without0, a, b, k - 1)
        out.append(abs(lhs - rhs))
    return np.array(out)


def muntz_to_exponential(exponents: Sequence[float], a: float, b: float):
    """Map the Muntz space spanned by ``x^{r_j}`` on ``[a, b]`` to ``E_Lambda`` via ``x = e^t``.

    Returns ``(Lambda, (log a, log b))``.  Density of the Muntz system in
    ``C[a, b]`` needs ``sum 1 / r_j = inf``; no check of that is made here.
    """
    if a <= 0:
        raise ValueError("the transformation x = e^t needs a > 0")
    if not b > a:
        raise ValueError("need b > a")
    ex = [float(r) for r in exponents]
    if any(r < 0 for r in ex) or any(y <= x for x, y in zip(ex, ex[1:])):
        raise ValueError("exponents must be nonnegative and strictly increasing")
    return canonicalize(ex), (math.log(a), math.log(b))
