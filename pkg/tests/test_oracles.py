import numpy as np
import pytest

from wavetex.oracles import (
    CHECKS,
    OracleReport,
    convolution_check,
    naive_convolution,
    prop1_check,
    prop1_sweep,
    prop2_check,
    rectifier_check,
    run_all,
)


def test_naive_convolution_delta_and_ones(rng):
    f = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    delta = np.zeros((8, 8))
    delta[0, 0] = 1
    np.testing.assert_allclose(naive_convolution(delta, f), f)
    x = rng.standard_normal((8, 8))
    np.testing.assert_allclose(naive_convolution(x, np.ones((8, 8))), np.full((8, 8), x.sum()))
    with pytest.raises(ValueError):
        naive_convolution(np.zeros((64, 64)), np.zeros((64, 64)))


def test_convolution_oracle_agrees():
    assert convolution_check(n=8, j_max=1).passed
    assert convolution_check(n=16).passed


def test_prop1_truncation_zero_fails():
    x = np.random.Generator(np.random.Philox(3)).standard_normal((16, 16))
    rep = prop1_check(x, 0, 0, 1, 1, (1, 0), 0.0, np.pi / 2, 0)
    assert not rep.passed


def test_prop1_variance_term_real_nonnegative():
    x = np.random.Generator(np.random.Philox(3)).standard_normal((16, 16))
    rep = prop1_check(x, 1, 1, 1, 1, (0, 0), 0.7, 0.7, 64)
    lhs, rhs = rep.values
    assert lhs >= 0 and rhs.real >= 0
    assert abs(rhs.imag) < 1e-12 * abs(rhs.real)
    assert rep.passed


def test_prop1_sweep_converges():
    x = np.random.Generator(np.random.Philox(4)).standard_normal((16, 16))
    errs = [prop1_sweep(x, k).max_rel_err for k in (4, 16, 64)]
    assert errs[0] > errs[1] > errs[2]


def test_prop2_single_image():
    assert prop2_check(n=16, j_max=2, l_count=2, seed=5).passed


def test_rectifier_identity():
    assert rectifier_check(count=1000).max_abs_err == 0.0


def test_report_semantics():
    rep = OracleReport("x", 1e-3, 1e-2, False, 1e-4)
    assert rep.to_dict()["name"] == "x"


def test_run_all_subset_and_unknown():
    reps = run_all(["prop2", "rectifier"])
    assert [r.name for r in reps] == ["prop2", "rectifier"]
    assert all(r.passed for r in reps)
    with pytest.raises(ValueError):
        run_all(["nope"])
    assert set(CHECKS) >= {"convolution", "covariance", "prop1", "prop2", "gradient"}
