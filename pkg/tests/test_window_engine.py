"""Window arithmetic and routing of the windowed engine."""

import pytest

from dynsetcover import EngineAuditor, GreedyEngine, ParameterError, WindowedEngine


@pytest.fixture
def w100():
    return WindowedEngine.create(0.2, n_cap=100)


def test_top_levels(w100):
    assert w100.toplev(1.0) == 26
    assert w100.toplev(0.5) == 30
    assert WindowedEngine.create(0.2, n_cap=2).toplev(1.0) == 4


def test_window_pairs(w100):
    assert w100.K == 253
    assert w100.windows_of_set(0.5) == (-1, 0)
    K = w100.K
    # a cost whose top level is exactly K lies in windows 0 and 1
    cost = 100 / 1.2 ** K * 1.0000001
    assert w100.toplev(cost) == K
    assert w100.windows_of_set(cost) == (0, 1)


def test_single_element_cost_one():
    w = WindowedEngine.create(0.2, n_cap=2)
    assert w.toplev(1.0) == 4


def test_needs_two_elements():
    with pytest.raises(ParameterError):
        WindowedEngine.create(0.2, n_cap=1)


def test_updates_touch_two_windows():
    w = WindowedEngine.create(0.2, C=4, n_cap=10, f_cap=2)
    w.add_set("a", 1.0)
    w.add_set("b", 0.25)
    aud = EngineAuditor()
    for j in range(6):
        rep = w.insert(j, ["a", "b"] if j % 2 else ["a"])
        assert len(rep.touched) == 2
        assert aud.audit(w).ok
    rep = w.delete(3)
    assert len(rep.touched) == 2 and rep.touched[1] == rep.touched[0] + 1
    assert aud.audit(w).ok


def test_empty_and_parity():
    w = WindowedEngine.create(0.2, n_cap=4)
    assert w.cover() == [] and w.cover_cost() == 0
    w.add_set("a", 1.0)
    w.insert("x", ["a"])
    cover, parity = w.output_cover()
    assert [s for s, _l, _c in cover] == ["a"]
    assert parity == "even"
    assert w.union_valid(0) is None and w.union_valid(1) is None


def test_home_window_tie_uses_lowest_set_id():
    w = WindowedEngine.create(0.2, n_cap=4, f_cap=2)
    w.add_set("p", 1.0)
    w.add_set("q", 1.0)
    w.insert("x", ["q", "p"])
    assert w.route["x"] == w.windows_of_set(1.0)[0]


def test_inner_levels_translate_to_outer():
    w = WindowedEngine.create(0.2, C=1, n_cap=4)
    w.add_set("a", 1.0)
    w.insert("x", ["a"])
    inner = w.engines[w.route["x"]]
    assert isinstance(inner, GreedyEngine)
    (_s, lev, _c), = w.cover()
    assert lev == inner.cover()[0][1] + w.offset(w.route["x"])
