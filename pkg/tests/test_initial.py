import numpy as np
import pytest

from divsim.dynamics import trial_rng
from divsim.initial import InitSpecError, parse_init, read_opinion_file, write_opinion_file


def test_uniform_per_trial():
    spec = parse_init("uniform:5")
    assert spec.per_trial and spec.k == 5
    x = spec.draw(200, trial_rng(1, 0))
    assert x.min() >= 1 and x.max() <= 5
    assert not np.array_equal(x, spec.draw(200, trial_rng(1, 1)))


def test_uniform_fixed_seed():
    spec = parse_init("uniform:3:42", 21)
    assert not spec.per_trial
    assert np.array_equal(spec.draw(21), parse_init("uniform:3:42", 21).draw(21))
    with pytest.raises(InitSpecError):
        parse_init("uniform:3:42")


def test_blocks():
    spec = parse_init("blocks:3x1,4x2,3x3", 10)
    assert spec.draw(10).tolist() == [1, 1, 1, 2, 2, 2, 2, 3, 3, 3]
    assert parse_init("blocks:2×1,1*4").draw(3).tolist() == [1, 1, 4]


def test_values_and_file(tmp_path):
    assert parse_init("values:1,2,3").draw(3).tolist() == [1, 2, 3]
    p = tmp_path / "x.txt"
    write_opinion_file(p, [3, 1, 2])
    assert read_opinion_file(p).tolist() == [3, 1, 2]
    assert parse_init(f"file:{p}").draw(3).tolist() == [3, 1, 2]


@pytest.mark.parametrize("text", ["uniform", "uniform:0", "blocks:3", "values:1,0", "zeta:3", "values:"])
def test_bad_specs(text):
    with pytest.raises(InitSpecError):
        parse_init(text)


def test_length_mismatch():
    with pytest.raises(InitSpecError):
        parse_init("values:1,2", 3)
