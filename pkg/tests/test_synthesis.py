import json

import numpy as np
import pytest

from wavetex.config import ModelConfig
from wavetex.oracles import gradient_check
from wavetex.synthesis import DivergenceError, Objective, synthesize, write_history_jsonl

QUICK = dict(variant="I", n=32, j_max=2, l_count=2, alpha_count=4,
             iterations_per_restart=30, restarts=2)


@pytest.fixture(scope="module")
def obs():
    rng = np.random.Generator(np.random.Philox(11))
    k = np.fft.fftfreq(32)
    r = np.hypot(*np.meshgrid(k, k, indexing="ij"))
    field = np.fft.ifft2(np.fft.fft2(rng.standard_normal((32, 32))) * np.exp(-(r / 0.15) ** 2)).real
    return 0.5 + 0.1 * field / field.std()


def test_loss_zero_at_observation(obs):
    obj = Objective(obs, ModelConfig(**QUICK))
    loss, grad = obj.loss_and_gradient(obs)
    assert loss == 0.0
    assert np.linalg.norm(grad) == 0.0


def test_gradient_scales_with_objective(obs, rng):
    obj = Objective(obs, ModelConfig(**QUICK))
    x = rng.random((32, 32))
    l1, g1 = obj.loss_and_gradient(x)
    l2, g2 = obj.loss_and_gradient(x, scale=2.0)
    assert l2 == 2 * l1
    np.testing.assert_array_equal(g2, 2 * g1)


def test_gradient_matches_finite_differences():
    rep = gradient_check("I", n=16, j_max=2, l_count=2)
    assert rep.passed, rep


def test_gradient_windowed():
    rep = gradient_check("I", n=16, j_max=2, l_count=2, boundary="windowed")
    assert rep.passed, rep


def test_weights_scale_sections(obs, rng):
    x = rng.random((32, 32))
    base = Objective(obs, ModelConfig(**QUICK))
    w = Objective(obs, ModelConfig(**QUICK, weights=(0.0, 1.0, 0.0)))
    r = base.residual(x)
    n1, n2, _ = base.operator.sizes
    assert w.loss(x) == pytest.approx(np.sum(r[n1:n1 + n2] ** 2), rel=1e-12)


def test_divergence_is_reported(obs):
    obj = Objective(obs, ModelConfig(**QUICK))
    with np.errstate(all="ignore"):
        with pytest.raises(DivergenceError):
            obj.loss_and_gradient(np.full((32, 32), 1e200))


def test_config_mismatch(obs):
    with pytest.raises(ValueError):
        Objective(obs, ModelConfig(**{**QUICK, "variant": "C"}))


def test_stationary_at_observation(obs):
    out, run = synthesize(obs, ModelConfig(**QUICK), init=obs)
    np.testing.assert_array_equal(out, obs)
    assert run.final_loss == 0.0


def test_determinism_and_history(obs, tmp_path):
    cfg = ModelConfig(**QUICK, seed=3)
    a, run_a = synthesize(obs, cfg)
    b, _ = synthesize(obs, cfg)
    np.testing.assert_array_equal(a, b)
    c, _ = synthesize(obs, cfg.replace(seed=4))
    assert not np.array_equal(a, c)
    hist = run_a.loss_history
    assert {"restart", "iter", "loss", "grad_norm", "wall_ms"} <= set(hist[0])
    for r in range(cfg.restarts):
        losses = [h["loss"] for h in hist if h["restart"] == r]
        assert all(np.isfinite(losses))
        assert all(y <= x for x, y in zip(losses, losses[1:]))
    assert run_a.final_loss < run_a.initial_loss
    assert all(y <= x for x, y in zip(run_a.restart_distances, run_a.restart_distances[1:]))
    path = tmp_path / "h.jsonl"
    write_history_jsonl(path, run_a)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert rows == hist


def test_histogram_matching_applied(obs):
    cfg = ModelConfig(**QUICK)
    out, run = synthesize(obs, cfg)
    np.testing.assert_array_equal(np.sort(out, axis=None), np.sort(obs, axis=None))
    raw, _ = synthesize(obs, cfg.replace(histogram_match=False))
    np.testing.assert_array_equal(raw, run.current)


def test_histogram_matching_between_restarts(obs):
    cfg = ModelConfig(**QUICK, histogram_match_between_restarts=True, histogram_match=False)
    out, run = synthesize(obs, cfg)
    assert np.all(np.isfinite(out))
    assert len(run.restart_losses) == 2


def test_color_synthesis_runs(rng):
    obs = rng.random((3, 32, 32))
    cfg = ModelConfig(variant="C_reduced", n=32, j_max=2, l_count=2, iterations_per_restart=5,
                      restarts=1)
    out, run = synthesize(obs, cfg)
    assert out.shape == (3, 32, 32)
    assert run.final_loss < run.initial_loss


def test_resumes_after_divergence(obs, monkeypatch):
    # a first L-BFGS attempt that blows up is retried with a halved first step
    import wavetex.synthesis as synth

    real = synth.lbfgs_minimize
    steps = []

    def flaky(*args, **kwargs):
        steps.append(kwargs["initial_step"])
        if len(steps) == 1:
            raise FloatingPointError("boom")
        return real(*args, **kwargs)

    monkeypatch.setattr(synth, "lbfgs_minimize", flaky)
    _, run = synth.synthesize(obs, ModelConfig(**{**QUICK, "restarts": 1}))
    assert steps[:2] == [1.0, 0.5]
    assert run.final_loss < run.initial_loss


@pytest.mark.slow
def test_white_noise_observation_converges():
    rng = np.random.Generator(np.random.Philox(1))
    obs = 0.5 + 0.15 * rng.standard_normal((64, 64))
    cfg = ModelConfig(variant="I", n=64, j_max=4, l_count=4, iterations_per_restart=200,
                      restarts=3, boundary="periodic")
    _, run = synthesize(obs, cfg)
    assert run.final_loss < 1e-3 * run.initial_loss
