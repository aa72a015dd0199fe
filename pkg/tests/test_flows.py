import math

import numpy as np
import pytest

from radnf.errors import InvalidFlowSpec, NonHyperbolic, NotAttracting
from radnf.flows import (FlowParams, FlowSpec, ProbeGrid, ScalarField, forward_limit, integrate_flow,
                         limit_map_probe, linearization_residual, nelson_1d, order10_2d, smooth_cutoff,
                         stable_splitting, transport_1d, transport_2d, transport_residual, transport_solve,
                         wminus_map)

P = FlowParams()


def fifth_power():
    return FlowSpec(np.array([[-1.0]]), ((0, -1.0, (5,)),), (), 5)


class TestCutoff:
    def test_values(self):
        assert smooth_cutoff(0.2, 1.0) == 1.0 and smooth_cutoff(1.0, 1.0) == 0.0
        assert smooth_cutoff(0.75, 1.0) == pytest.approx(0.5)
        xs = np.linspace(0.5, 1.0, 50)
        vals = [smooth_cutoff(r, 1.0) for r in xs]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


class TestFlowSpec:
    def test_validation(self):
        with pytest.raises(InvalidFlowSpec):
            FlowSpec(np.array([[1.0, 0.0]]))
        with pytest.raises(InvalidFlowSpec):
            FlowSpec(np.eye(2), (), (0,))
        with pytest.raises(InvalidFlowSpec):
            FlowSpec(np.diag([0.0, -1.0]), ((1, 1.0, (3, 1)),), (0,), 2)


class TestSplitting:
    def test_examples(self):
        s = stable_splitting(np.eye(2))
        assert s.E_minus.shape[1] == 0 and s.E_plus.shape[1] == 2
        s = stable_splitting(np.diag([-1.0, 1.0]))
        assert abs(abs(s.E_minus[0, 0]) - 1) < 1e-12 and abs(s.E_minus[1, 0]) < 1e-12
        assert abs(abs(s.E_plus[1, 0]) - 1) < 1e-12 and abs(s.E_plus[0, 0]) < 1e-12
        with pytest.raises(NonHyperbolic):
            stable_splitting(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_with_L(self):
        A = np.array([[0.0, 1.0, 2.0], [0.0, -1.0, 0.0], [0.0, 0.0, 3.0]])
        s = stable_splitting(A, (0,))
        assert s.residual < 1e-10
        for basis, sign in ((s.stable_basis, -1), (s.unstable_basis, 1)):
            v = basis[:, 0]
            Av = A @ v
            assert np.allclose(Av, sign * abs(Av @ v / (v @ v)) * v)
        total = sum(s.projectors.values())
        assert np.allclose(total, np.eye(3))


class TestIntegrateFlow:
    def test_scalar_exponential(self):
        spec = FlowSpec(np.array([[-1.0]]))
        assert integrate_flow(spec, [1.0], 1.0)[0] == pytest.approx(math.exp(-1), abs=1e-10)
        assert integrate_flow(spec, [0.7], 0.0)[0] == 0.7

    def test_exact_nonlinear(self):
        # x' = -x - x^5 integrates to x^-4 = (x0^-4 + 1) e^{4t} - 1
        x0, t = 0.6, 1.3
        exact = ((x0 ** -4 + 1) * math.exp(4 * t) - 1) ** -0.25
        assert integrate_flow(fifth_power(), [x0], t)[0] == pytest.approx(exact, rel=1e-9)

    def test_semigroup(self):
        rng = np.random.default_rng(0)
        spec = order10_2d()
        for _ in range(10):
            x = rng.uniform(-0.6, 0.6, 2)
            s, t = rng.uniform(-0.3, 2, 2)
            a = integrate_flow(spec, x, s + t)
            b = integrate_flow(spec, integrate_flow(spec, x, t), s)
            assert np.max(np.abs(a - b)) < 1e-8


class TestWminus:
    def test_linear_identity(self):
        spec = FlowSpec(-np.eye(2))
        x = np.array([0.3, -0.2])
        assert np.max(np.abs(wminus_map(spec, x).value - x)) < 1e-10

    def test_fixed_on_L(self):
        spec = order10_2d()
        x = np.array([0.4, 0.0])
        assert np.max(np.abs(wminus_map(spec, x).value - x)) < P.abs_tol

    def test_fifth_power_against_tightened(self):
        spec = fifth_power()
        a = wminus_map(spec, [0.3])
        b = wminus_map(spec, [0.3], FlowParams(1e-12, 1e-12, T_max=512))
        assert a.cauchy < 1e-10
        assert abs(a.value[0] - b.value[0]) < 1e-9
        # closed form: W(x) = x / (1 - x^4)^(1/4) for x' = -x - x^5
        assert b.value[0] == pytest.approx(0.3 / (1 - 0.3 ** 4) ** 0.25, abs=1e-10)

    def test_requires_attracting(self):
        with pytest.raises(NotAttracting):
            wminus_map(FlowSpec(np.eye(1), ((0, 1.0, (3,)),)), [0.1])


class TestLinearizationResidual:
    def test_linear(self):
        assert linearization_residual(FlowSpec(-np.eye(1)), [(-0.3, 0.3)], points=5) < 1e-8

    def test_fifth_power(self):
        assert linearization_residual(fifth_power(), [(-0.3, 0.3)], points=7) < 1e-5

    def test_shrinking_boxes(self):
        spec = order10_2d()
        vals = [linearization_residual(spec, [(-0.2, 0.2), (-r, r)], points=3) for r in (0.8, 0.6, 0.4)]
        assert vals[0] > vals[1] > vals[2]


class TestTransport:
    def test_zero_source(self):
        spec, _, c = transport_1d()
        assert transport_solve(spec, ScalarField(), c, [0.4]) == 0.0

    def test_on_L(self):
        spec, g, c = transport_2d()
        assert transport_solve(spec, g, c, [0.5, 0.0]) == 0.0

    def test_closed_form_1d(self):
        # inside the cutoff core: f(x) = -int e^t (x e^-t)^4 dt = -x^4 / 3
        spec, g, c = transport_1d()
        x = 0.3
        assert transport_solve(spec, g, c, [x]) == pytest.approx(-x ** 4 / 3, abs=1e-10)

    def test_residual(self):
        spec, g, c = transport_1d()
        for x in (-0.9, -0.55, 0.1, 0.62, 0.8):
            assert transport_residual(spec, g, c, [x]) < 1e-7


class TestProbe:
    def test_linear_projection(self):
        spec = FlowSpec(np.diag([0.0, -1.0]), (), (0,))
        grid = ProbeGrid(((0.0, 0.0), (0.3, 0.0)), (0.5, 1.0))
        rep = limit_map_probe(spec, grid)
        assert rep.stable
        for per_mesh in rep.derivatives:
            for central, right, left in per_mesh:
                for d in (central, right, left):
                    assert np.max(np.abs(d - np.array([0.5, 0.0]))) < 1e-8

    def test_forward_limit_projection(self):
        spec = FlowSpec(np.diag([0.0, -1.0]), (), (0,))
        assert np.allclose(forward_limit(spec, [0.2, 0.4]).value, [0.2, 0.0], atol=1e-10)
