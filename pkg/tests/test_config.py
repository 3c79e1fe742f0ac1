import pytest

from wavetex.config import ModelConfig


def test_defaults():
    c = ModelConfig()
    assert (c.j_max, c.l_count, c.alpha_count) == (5, 4, 4)
    assert (c.iterations_per_restart, c.restarts, c.lbfgs_memory) == (500, 10, 20)
    assert c.histogram_match and not c.histogram_match_between_restarts


@pytest.mark.parametrize("kw", [
    {"variant": "Z"}, {"boundary": "mirror"}, {"n": 64, "j_max": 5}, {"lbfgs_memory": 0},
    {"weights": (1, 1)}, {"precision": "half"}, {"n": 16, "j_max": 2, "boundary": "windowed",
                                                 "variant": "I"} | {"n": 8}])
def test_invalid(kw):
    with pytest.raises(ValueError):
        ModelConfig(**kw)


def test_round_trip_and_hash():
    c = ModelConfig(variant="C", n=64, j_max=3, jobs=2)
    d = c.to_dict()
    assert "jobs" not in d
    back = ModelConfig.from_dict(d)
    assert back == c
    assert back.statistics_hash() == c.statistics_hash()
    assert c.replace(seed=9).statistics_hash() == c.statistics_hash()
    assert c.replace(boundary="windowed").statistics_hash() != c.statistics_hash()
    with pytest.raises(ValueError):
        ModelConfig.from_dict({"bogus": 1})
    assert c.color and c.channels == 3
