import numpy as np
import pytest

from oampc.solver import EvalResult, solve_qp, solve_sqp


class TestQp:
    def test_unconstrained_minimum_inside_box(self):
        # min (y0-1)^2 + (y1+2)^2 inside a generous box.
        P = 2 * np.eye(2)
        q = np.array([-2.0, 4.0])
        G = np.vstack([np.eye(2), -np.eye(2)])
        h = np.array([10.0, 10.0, 10.0, 10.0])
        y, _ = solve_qp(P, q, G, h)
        assert y == pytest.approx([1.0, -2.0], abs=1e-7)

    def test_active_bound(self):
        P = 2 * np.eye(2)
        q = np.array([-2.0, 4.0])
        G = np.vstack([np.eye(2), -np.eye(2)])
        h = np.array([0.5, 10.0, 10.0, 10.0])  # y0 <= 0.5 active
        y, z = solve_qp(P, q, G, h)
        assert y == pytest.approx([0.5, -2.0], abs=1e-7)
        assert z[0] > 1e-8  # active multiplier

    def test_kkt_on_random_qps(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n, m = 6, 10
            A = rng.normal(size=(n, n))
            P = A @ A.T + 0.5 * np.eye(n)
            q = rng.normal(size=n)
            G = rng.normal(size=(m, n))
            h = rng.uniform(0.5, 2.0, size=m)
            y, z = solve_qp(P, q, G, h)
            slack = h - G @ y
            assert slack.min() >= -1e-7  # primal feasible
            assert z.min() >= -1e-9  # dual feasible
            grad = P @ y + q + G.T @ z
            assert np.abs(grad).max() <= 1e-6 * (1 + np.abs(q).max())
            assert np.abs(slack * z).max() <= 1e-6

    def test_no_constraints(self):
        P = np.array([[4.0]])
        q = np.array([-8.0])
        y, z = solve_qp(P, q, np.zeros((0, 1)), np.zeros(0))
        assert y == pytest.approx([2.0])
        assert len(z) == 0


def quadratic_problem(center, H=None):
    H = np.eye(len(center)) if H is None else H

    def evaluate(x):
        e = x - center
        return EvalResult(
            f=float(e @ H @ e),
            grad=2 * H @ e,
            hess=2 * H,
            c=np.zeros(0),
            jac=np.zeros((0, len(x))),
        )

    return evaluate


class TestSqp:
    def test_bound_constrained_quadratic(self):
        ev = quadratic_problem(np.array([2.0, -3.0]))
        res = solve_sqp(ev, np.zeros(2), lb=np.array([-1.0, -1.0]), ub=np.array([1.0, 1.0]))
        assert res.status == "optimal"
        assert res.x == pytest.approx([1.0, -1.0], abs=1e-6)

    def test_circle_keepout(self):
        # min ||x - (2,0)||^2 with a keep-out disk of radius 1 at the origin.
        target = np.array([2.0, 0.0])

        def evaluate(x):
            e = x - target
            d = np.hypot(*x)
            grad_c = x / d if d > 1e-12 else np.array([1.0, 0.0])
            return EvalResult(
                f=float(e @ e),
                grad=2 * e,
                hess=2 * np.eye(2),
                c=np.array([d - 1.0]),
                jac=grad_c[None, :],
            )

        res = solve_sqp(evaluate, np.array([1.5, 0.5]), lb=np.full(2, -10.0), ub=np.full(2, 10.0))
        assert res.status == "optimal"
        # Unconstrained optimum (2, 0) is outside the disk, so it is optimal.
        assert res.x == pytest.approx([2.0, 0.0], abs=1e-5)

    def test_active_circle_constraint(self):
        # Target inside the keep-out: solution lands on the circle.
        target = np.array([0.3, 0.0])

        def evaluate(x):
            e = x - target
            d = np.hypot(*x)
            grad_c = x / d if d > 1e-12 else np.array([1.0, 0.0])
            return EvalResult(
                f=float(e @ e),
                grad=2 * e,
                hess=2 * np.eye(2),
                c=np.array([d - 1.0]),
                jac=grad_c[None, :],
            )

        res = solve_sqp(evaluate, np.array([1.5, 0.8]), lb=np.full(2, -10.0), ub=np.full(2, 10.0))
        assert res.status == "optimal"
        assert np.hypot(*res.x) == pytest.approx(1.0, abs=1e-6)
        # Tangential accuracy is linear-rate with a Gauss-Newton model; a
        # sub-millimeter landing spot is the expected precision here.
        assert res.x == pytest.approx([1.0, 0.0], abs=1e-3)

    def test_infeasible_detected(self):
        # c1: x0 >= 1, c2: -x0 >= 1 cannot both hold.
        def evaluate(x):
            return EvalResult(
                f=float(x @ x),
                grad=2 * x,
                hess=2 * np.eye(1),
                c=np.array([x[0] - 1.0, -x[0] - 1.0]),
                jac=np.array([[1.0], [-1.0]]),
            )

        res = solve_sqp(evaluate, np.zeros(1), lb=np.array([-5.0]), ub=np.array([5.0]))
        assert res.status == "infeasible"
        assert res.max_violation > 1e-3

    def test_feasible_warm_start_never_degraded(self):
        # Start at a feasible point; the returned objective must not be worse.
        target = np.array([0.0, 0.0])

        def evaluate(x):
            e = x - target
            d = np.hypot(*x)
            grad_c = x / d if d > 1e-12 else np.array([1.0, 0.0])
            return EvalResult(
                f=float(e @ e),
                grad=2 * e,
                hess=2 * np.eye(2),
                c=np.array([d - 1.0]),  # stay outside unit disk
                jac=grad_c[None, :],
            )

        x0 = np.array([1.2, 0.0])
        f0 = float(x0 @ x0)
        res = solve_sqp(evaluate, x0, lb=np.full(2, -10.0), ub=np.full(2, 10.0))
        assert res.status == "optimal"
        assert res.objective <= f0 + 1e-9
        assert np.hypot(*res.x) >= 1.0 - 1e-6

    def test_deterministic(self):
        ev = quadratic_problem(np.array([0.7, -0.2, 1.4]), H=np.diag([1.0, 3.0, 0.5]))
        r1 = solve_sqp(ev, np.array([5.0, 5.0, 5.0]), lb=np.full(3, -8.0), ub=np.full(3, 8.0))
        r2 = solve_sqp(ev, np.array([5.0, 5.0, 5.0]), lb=np.full(3, -8.0), ub=np.full(3, 8.0))
        assert np.array_equal(r1.x, r2.x)
        assert r1.iterations == r2.iterations

    def test_rosenbrock_valley_with_bounds(self):
        # Nonquadratic objective with a Gauss-Newton model Hessian.
        def evaluate(x):
            a, b = 1.0, 10.0
            r = np.array([a - x[0], np.sqrt(b) * (x[1] - x[0] ** 2)])
            Jr = np.array([[-1.0, 0.0], [-2 * np.sqrt(b) * x[0], np.sqrt(b)]])
            return EvalResult(
                f=float(r @ r),
                grad=2 * Jr.T @ r,
                hess=2 * Jr.T @ Jr,
                c=np.zeros(0),
                jac=np.zeros((0, 2)),
            )

        res = solve_sqp(
            evaluate,
            np.array([-1.2, 1.0]),
            lb=np.full(2, -5.0),
            ub=np.full(2, 5.0),
            max_iter=200,
        )
        assert res.status == "optimal"
        assert res.x == pytest.approx([1.0, 1.0], abs=1e-4)
