import math

import numpy as np
import pytest

from expbern import (
    ConstructionError,
    LimitUnresolvedError,
    MissingNodesError,
    apply,
    build_operator,
    build_operator_confluent,
    canonicalize,
    classical_operator,
    equidistant_operator,
    fixed_point_residuals,
    muntz_to_exponential,
)
from expbern.operator import node_consistency

from oracles import classical_bernstein, equidistant_d, equidistant_weights, hp_operator

E = math.e
COUNTER = canonicalize([-1, 1, 1j, -1j])


def random_window_spectrum(rng, n_max=6):
    """Two real fixed eigenvalues plus conjugate pairs (and maybe extra reals)."""
    n = int(rng.integers(3, n_max + 1))
    pairs = int(rng.integers(1, (n - 1) // 2 + 1))
    reals = n + 1 - 2 * pairs
    rv = sorted(rng.choice(np.linspace(-2, 2, 81), size=reals, replace=False))
    vals = [float(v) for v in rv]
    for _ in range(pairs):
        z = complex(rng.uniform(-1.5, 1.5), rng.uniform(0.2, 2.5))
        vals += [z, z.conjugate()]
    i, j = sorted(rng.choice(reals, size=2, replace=False))
    return canonicalize(vals), (vals[i], vals[j])


def test_two_dimensional_operator():
    op = build_operator(canonicalize([0, 1]), 0, 1, (0, 1))
    assert np.allclose(op.nodes, [0, 1], atol=1e-14)
    assert op.weights[0] == 1
    assert abs(op.weights[1] - 1 / (E - 1)) < 1e-14 and abs(op.weights[1] - 0.5819767) < 1e-7
    r0, r1 = fixed_point_residuals(op)
    assert r0 <= 1e-12 and r1 <= 1e-12


def test_counterexample():
    op = build_operator(COUNTER, 0, 3.5, (-1, 1))
    t = op.nodes
    assert abs(math.exp(-2 * (t[2] - t[1])) - 2.8454) < 1e-3
    assert t[0] < t[2] < t[1] < t[3]
    assert not op.nodes_ordered and op.weights_positive
    assert max(fixed_point_residuals(op)) <= 1e-8
    assert abs(op.node_ratios[1] - math.exp(-2 * (t[2] - t[1]))) < 1e-12


def test_equidistant_example_endpoint_pair():
    lam = canonicalize([j / 2 for j in range(5)])
    op = build_operator(lam, 0, 1, (0, 2))
    assert np.allclose(op.nodes, np.arange(5) / 4, atol=1e-12)


def test_equidistant_neighbour_pair_is_not_uniform():
    # fixing (l0, l1) instead of (l0, l_n) gives a different, non-uniform mesh
    lam = canonicalize([j / 2 for j in range(5)])
    op = build_operator(lam, 0, 1, (0, 0.5))
    assert op.nodes_ordered and op.weights_positive
    assert np.max(np.abs(op.nodes - np.arange(5) / 4)) > 1e-2
    assert max(fixed_point_residuals(op)) <= 1e-10


def test_invariants_endpoints_and_alpha0():
    op = build_operator(canonicalize([-0.5, 0.8, 2j, -2j, 0.1]), 1.0, 2.2, (-0.5, 0.8))
    assert abs(op.nodes[0] - 1.0) <= 1e-10 and abs(op.nodes[-1] - 2.2) <= 1e-10
    assert op.weights[0] == 1.0
    assert op.is_real


def test_precondition_errors():
    with pytest.raises(ValueError):
        build_operator(COUNTER, 0, 3.5, (1j, 1))
    with pytest.raises(ValueError):
        build_operator(COUNTER, 0, 3.5, (-1, 2))
    with pytest.raises(ValueError):
        build_operator(COUNTER, 0, 3.5, (1, 1))


def test_window_guarantee(rng):
    for _ in range(15):
        lam, fix = random_window_spectrum(rng)
        op = build_operator(lam, 0, 0.9 * math.pi / lam.max_imag, fix)
        assert op.nodes_ordered and op.weights_positive
        assert max(fixed_point_residuals(op)) <= 1e-8


def test_node_consistency():
    for lam, a, b, fix in [(COUNTER, 0, 3.5, (-1, 1)), (canonicalize([0, 0.3, 1 + 1j, 1 - 1j]), 0, 2, (0, 0.3))]:
        op = build_operator(lam, a, b, fix)
        assert np.max(node_consistency(op)) < 1e-9


def test_uniqueness_of_nodes_and_weights():
    op = build_operator(canonicalize([-1, 1, 1j, -1j]), 0, 2, (-1, 1))
    x = np.linspace(0, 2, 201)
    l0, l1 = op.fixed_pair

    def residual(nodes, weights):
        P = op.basis.evaluate(x)
        out = []
        for lam in (l0, l1):
            approx = (weights * np.exp(lam.real * nodes)) @ P
            out.append(np.max(np.abs(approx - np.exp(lam.real * x))))
        return max(out)

    assert residual(op.nodes, op.weights) < 1e-10
    for k in range(1, op.n + 1):
        t = op.nodes.copy()
        t[k] += 1e-3
        assert residual(t, op.weights) > 1e-5
    for k in range(op.n + 1):
        w = op.weights.copy()
        w[k] += 1e-3
        assert residual(op.nodes, w) > 1e-5


def test_positivity_of_operator():
    op = build_operator(canonicalize([-1, 1, 1j, -1j]), 0, 2, (-1, 1))
    x = np.linspace(0, 2, 101)
    # f(a) = 0 makes the value at a pure rounding noise
    assert np.all(apply(op, lambda s: (s - 1.0) ** 2, x) >= -1e-14)
    assert np.all(apply(op, lambda s: abs(math.sin(3 * s)), x) >= -1e-14)


def test_confluent_classical():
    for method in ("direct", "extrapolate"):
        op = build_operator_confluent(canonicalize([0, 0, 0]), 0, 1, 0, method=method)
        assert np.allclose(op.nodes, [0, 0.5, 1], atol=1e-5)
        assert np.allclose(op.weights, [1, 2, 2], atol=1e-5)
        assert max(fixed_point_residuals(op)) <= 1e-6
        assert op.confluent


def test_confluent_degree_five():
    op = build_operator_confluent(canonicalize([0] * 6), 0, 1, 0)
    assert np.allclose(op.nodes, np.arange(6) / 5, atol=1e-5)
    assert max(fixed_point_residuals(op)) <= 1e-10


def test_confluent_degree_five_extrapolation_unresolved():
    # perturbing one copy of a five-fold eigenvalue is too ill-conditioned
    with pytest.raises(LimitUnresolvedError):
        build_operator_confluent(canonicalize([0] * 6), 0, 1, 0, method="extrapolate")


def test_confluent_exponential_with_trig():
    lam = canonicalize([1, 1, 1j, -1j])
    direct = build_operator_confluent(lam, 0, 1, 1)
    extra = build_operator_confluent(lam, 0, 1, 1, method="extrapolate")
    assert max(fixed_point_residuals(direct)) <= 1e-10
    assert max(fixed_point_residuals(extra)) <= 1e-5
    assert np.allclose(direct.nodes, extra.nodes, atol=1e-6)
    assert direct.nodes_ordered and direct.weights_positive


def test_confluent_preconditions():
    with pytest.raises(ValueError):
        build_operator_confluent(canonicalize([0, 1, 2]), 0, 1, 0)
    with pytest.raises(ValueError):
        build_operator_confluent(canonicalize([0, 0, 1]), 0, 1, 0, eps_schedule=(), method="extrapolate")
    with pytest.raises(ValueError):
        build_operator_confluent(canonicalize([0, 0, 1]), 0, 1, 0, method="other")


def test_equidistant_operator_examples():
    op = equidistant_operator(0, 1, 2, 0, 1)
    assert abs(op.weights[1] - 2 * math.exp(-1) / (1 - math.exp(-1))) < 1e-12
    assert abs(op.weights[1] - 1.1639534) < 1e-7
    assert np.allclose(np.diff(op.nodes), 0.5)
    assert max(fixed_point_residuals(op)) < 1e-12


def test_equidistant_operator_conjugate_endpoints_is_real():
    op = equidistant_operator(1j, -1j, 2, 0, 2)
    assert op.is_real
    x = np.linspace(0, 2, 101)
    val = apply(op, lambda s: abs(s - 1), x)
    assert np.isrealobj(val)
    full = (op.weights * np.array([abs(t - 1) for t in op.nodes])) @ op.basis.evaluate(x)
    assert np.max(np.abs(full.imag)) < 1e-9
    assert max(fixed_point_residuals(op)) < 1e-12


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("lam0,w,a,b", [(0.0, 1.0, 0.0, 1.0), (-1.0, 0.3, 0.5, 2.0), (0.5, -0.4, 0.0, 1.5)])
def test_equidistant_closed_forms_match_generic(n, lam0, w, a, b):
    closed = equidistant_operator(lam0, w, n, a, b)
    lam = closed.basis.lam
    generic = build_operator(lam, a, b, (lam0, lam0 + n * w))
    assert np.max(np.abs(closed.nodes - generic.nodes)) <= 1e-9
    assert np.max(np.abs(closed.nodes - (a + np.arange(n + 1) * (b - a) / n))) <= 1e-12
    assert np.allclose(closed.weights, equidistant_weights(lam0, w, n, a, b), rtol=1e-12)
    assert np.max(np.abs(closed.weights - generic.weights) / np.abs(closed.weights)) <= 1e-9
    dt = np.array(generic.d_tilde)
    dD = np.array(generic.d_big)
    for k in range(n):
        dk, Dk = equidistant_d(lam0, w, n, k, a, b)
        assert abs(dt[k] - dk) <= 1e-9 * abs(dk)
        assert abs(dD[k] - Dk) <= 1e-9 * abs(Dk)


def test_classical_operator():
    op = classical_operator(0.0, 2, 0, 1)
    assert abs(apply(op, lambda s: s * s, 0.5) - 3 / 8) < 1e-15
    op = classical_operator(0.0, 7, 0, 1)
    x = np.linspace(0, 1, 33)
    f = lambda s: np.cos(3 * s)
    assert np.allclose(apply(op, f, x), classical_bernstein(f, 7, x), atol=1e-13)


def test_apply_examples():
    op = build_operator(COUNTER, 0, 3.5, (-1, 1))
    x = np.linspace(0, 3.5, 50)
    assert np.allclose(apply(op, lambda s: math.exp(-s), x), np.exp(-x), atol=1e-9)
    assert np.all(apply(op, lambda s: 0.0, x) == 0)
    assert isinstance(apply(op, lambda s: 1.0, 0.3), float)


def test_apply_with_table():
    op = build_operator(canonicalize([0, 1, 2]), 0, 1, (0, 1))
    table = {float(t): math.exp(t) for t in op.nodes}
    assert abs(apply(op, table, 0.4) - math.exp(0.4)) < 1e-12
    partial = dict(list(table.items())[:2])
    with pytest.raises(MissingNodesError) as exc:
        apply(op, partial, 0.4)
    assert exc.value.missing == [float(op.nodes[2])]


def test_to_record():
    rec = build_operator(COUNTER, 0, 3.5, (-1, 1)).to_record()
    assert rec["nodes_ordered"] is False and rec["weights_positive"] is True
    assert len(rec["nodes"]) == 4 and abs(rec["node_ratios"][1] - 2.8454) < 1e-3


def test_muntz():
    lam, (a, b) = muntz_to_exponential([0, 1, 2], 1, E)
    assert lam == canonicalize([0, 1, 2]) and a == 0 and abs(b - 1) < 1e-15
    lam, (a, b) = muntz_to_exponential([0, 0.5], 1, E ** 2)
    assert lam == canonicalize([0, 0.5]) and abs(b - 2) < 1e-15
    with pytest.raises(ValueError):
        muntz_to_exponential([0, 1], 0, 1)
    with pytest.raises(ValueError):
        muntz_to_exponential([1, 0], 1, 2)


def test_non_real_ratio_is_rejected():
    # without conjugate closure the node ratios are complex
    with pytest.raises(ConstructionError):
        build_operator(canonicalize([0, 1, 1j]), 0, 1, (0, 1))


# long windows: small imaginary parts with widely spread real parts
LONG_WINDOW = [
    ([-0.9, -0.85, 1.4, 1.4320740780229748 + 0.2980297125786823j, 1.4320740780229748 - 0.2980297125786823j],
     (-0.9, 1.4)),
    ([-1.95, -0.3, -0.19929421904292344 + 0.2782233833812286j, -0.19929421904292344 - 0.2782233833812286j,
      -0.1, 0.5, 1.9], (-0.3, 0.5)),
    ([-1.75, -0.85, 0.3052272516190264 + 0.21489070880331337j, 0.3052272516190264 - 0.21489070880331337j],
     (-1.75, -0.85)),
]


@pytest.mark.parametrize("vals,fix", LONG_WINDOW)
def test_long_window_against_high_precision(vals, fix):
    lam = canonicalize(vals)
    b = 0.9 * math.pi / lam.max_imag
    op = build_operator(lam, 0, b, fix)
    t, w = hp_operator(vals, 0, b, *fix)
    assert np.max(np.abs(op.nodes - t)) <= 1e-8
    assert np.max(np.abs(op.weights - w) / w) <= 1e-8
    assert op.nodes_ordered and op.weights_positive
    assert max(fixed_point_residuals(op)) <= 1e-8
