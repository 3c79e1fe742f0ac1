import numpy as np
import pytest

from wavetex.lbfgs import lbfgs_minimize, strong_wolfe, two_loop


def test_quadratic_256():
    a = np.random.Generator(np.random.Philox(1)).standard_normal(256)
    res = lbfgs_minimize(lambda x: (np.sum((x - a) ** 2), 2 * (x - a)), np.zeros(256), 30)
    assert np.linalg.norm(res.x - a) < 1e-8
    assert res.n_iter <= 30


def _rosenbrock(v):
    x, y = v
    f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
    g = np.array([-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)])
    return f, g


def test_rosenbrock():
    res = lbfgs_minimize(_rosenbrock, np.array([-1.2, 1.0]), 200)
    assert res.f < 1e-10
    np.testing.assert_allclose(res.x, [1, 1], atol=1e-5)


def test_history_is_monotone():
    res = lbfgs_minimize(_rosenbrock, np.array([-1.2, 1.0]), 200)
    losses = [h[1] for h in res.history]
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    assert all(np.isfinite(losses))


def test_stationary_start():
    calls = []

    def f(x):
        calls.append(1)
        return 0.0, np.zeros_like(x)

    x0 = np.ones(5)
    res = lbfgs_minimize(f, x0, 10)
    assert len(calls) == 1 and res.n_evals == 1
    np.testing.assert_array_equal(res.x, x0)


def test_memory_validation_and_nonfinite_start():
    with pytest.raises(ValueError):
        lbfgs_minimize(_rosenbrock, np.zeros(2), 10, memory=0)
    with pytest.raises(FloatingPointError):
        lbfgs_minimize(lambda x: (np.nan, x), np.zeros(2), 10)


def test_preserves_shape():
    a = np.arange(12.0).reshape(3, 4)
    res = lbfgs_minimize(lambda x: (np.sum((x - a) ** 2), 2 * (x - a)), np.zeros((3, 4)), 20)
    assert res.x.shape == (3, 4)


def test_wolfe_conditions_hold():
    # phi(t) = (t - 2)^2, slope -4 at zero
    phi = lambda t: ((t - 2) ** 2, 2 * (t - 2), None)
    t, f, _, _ = strong_wolfe(phi, 4.0, -4.0, 1.0)
    assert f <= 4.0 + 1e-4 * t * -4.0
    assert abs(2 * (t - 2)) <= 0.9 * 4.0


def test_line_search_survives_nonfinite_trials():
    # overflow past t = 3 is treated as overshooting
    def phi(t):
        if t > 3:
            return np.inf, np.nan, None
        return (t - 2.5) ** 2, 2 * (t - 2.5), None

    t, f, _, _ = strong_wolfe(phi, 6.25, -5.0, 1.0)
    assert t is not None and t <= 3 and np.isfinite(f)


def test_two_loop_satisfies_latest_secant_condition():
    rng = np.random.Generator(np.random.Philox(0))
    m = rng.standard_normal((6, 6))
    h = m @ m.T + 6 * np.eye(6)
    pairs = []
    for _ in range(3):
        s = rng.standard_normal(6)
        y = h @ s
        pairs.append((s, y, 1 / (y @ s)))
    # the inverse-Hessian estimate maps the newest y back onto its s
    s, y, _ = pairs[-1]
    np.testing.assert_allclose(two_loop(y, pairs), -s, rtol=1e-10)
