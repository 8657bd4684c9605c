"""Parameters, level buckets and the cover validity predicate."""

import pytest

from dynsetcover.core_model import (EMPTY, FrequencyError, ParameterError, PowerTable,
                                    SetSystem, ceil_log, derive_params, floor_log,
                                    is_valid_cover)
from dynsetcover import DuplicateError, NotFoundError, UnknownSetError


def test_top_level_count_for_hundred_elements():
    assert derive_params(0.2, C=1, n_cap=100).L == 26 + 89


def test_top_level_count_for_one_element():
    assert derive_params(0.2, C=1, n_cap=1).L == 89


@pytest.mark.parametrize("eps", [0.3, 0.25, 0.0, -0.1])
def test_eps_outside_range_rejected(eps):
    with pytest.raises(ParameterError):
        derive_params(eps)


@pytest.mark.parametrize("kw", [{"C": 0.5}, {"n_cap": 0}, {"f_cap": 0}, {"n_cap": 1.5}])
def test_bad_caps_rejected(kw):
    with pytest.raises(ParameterError):
        derive_params(0.1, **kw)


def test_level_bucket_examples():
    t = PowerTable(1.2, 10)
    assert t.level_bucket(2, 1.0) == 3
    assert t.level_bucket(1, 1.0) == 0
    assert t.level_bucket(0, 1.0) == EMPTY


def test_level_bucket_exact_power_rounds_to_it():
    t = PowerTable(1.25, 10)
    # 1.25**2 = 1.5625 exactly in binary floating point
    assert t.level_bucket(25, 16.0) == 2


def test_logs_agree_with_powers():
    for beta in (1.05, 1.1, 1.2):
        for x in (1.0, 1.5, 2.0, 7.3, 100.0, 0.3):
            c, f = ceil_log(x, beta), floor_log(x, beta)
            assert beta ** (c - 1) < x * (1 + 1e-12) and beta ** c >= x * (1 - 1e-12)
            assert beta ** f <= x * (1 + 1e-12) and beta ** (f + 1) > x * (1 - 1e-12)


def test_cover_validity_examples():
    assert is_valid_cover({}, {})
    assert is_valid_cover({"e": (["s"], "s")}, {"s": 0})
    assert not is_valid_cover({"e": (["s"], "s")}, {"s": -1})
    assert not is_valid_cover({"e": (["s"], "t")}, {"s": 0, "t": 0})


def test_set_system_lifespans():
    sys = SetSystem(derive_params(0.1, C=2, n_cap=4, f_cap=2))
    sys.add_set("a", 1.0)
    sys.add_set("b", 0.5)
    with pytest.raises(DuplicateError):
        sys.add_set("a", 1.0)
    with pytest.raises(ParameterError):
        sys.add_set("c", 0.1)
    first = sys.open_life("x", ["a", "b", "a"])
    assert first.members == (0, 1)
    with pytest.raises(DuplicateError):
        sys.open_life("x", ["a"])
    with pytest.raises(UnknownSetError):
        sys.open_life("y", ["zzz"])
    with pytest.raises(FrequencyError):
        sys.open_life("y", [])
    sys.alive_life("x").alive = False
    with pytest.raises(NotFoundError):
        sys.alive_life("x")
    second = sys.open_life("x", ["b"])
    assert second.idx != first.idx
    assert sys.alive_elements() == {"x": (1,)}
