"""The greedy engine's foreground rules and update protocol."""

import pytest

from dynsetcover import (Auditor, DuplicateError, FrequencyError, GreedyEngine, NotFoundError,
                         UnknownSetError)


def _engine(**kw):
    eng = GreedyEngine.create(0.2, C=2, n_cap=20, f_cap=3, **kw)
    for s, c in (("a", 1.0), ("b", 0.5), ("c", 1.0)):
        eng.add_set(s, c)
    return eng


def test_empty_engine():
    eng = _engine()
    assert eng.cover() == []
    st = eng.stats()
    assert st["last_update_steps"] == 0 and st["max_update_steps"] == 0


def test_first_insert_opens_one_set():
    eng = _engine()
    eng.insert("x", ["c", "a"])
    cover = eng.cover()
    assert len(cover) == 1 and cover[0][1] >= 0


def test_insert_and_delete_errors():
    eng = _engine()
    eng.insert("x", ["a"])
    with pytest.raises(DuplicateError):
        eng.insert("x", ["b"])
    with pytest.raises(UnknownSetError):
        eng.insert("y", ["nope"])
    with pytest.raises(FrequencyError):
        eng.insert("y", [])
    with pytest.raises(NotFoundError):
        eng.delete("missing")


def test_delete_then_reinsert_opens_new_lifespan():
    eng = _engine()
    eng.insert("x", ["a"])
    first = eng.system.current["x"]
    eng.delete("x")
    eng.insert("x", ["b"])
    assert eng.system.current["x"] != first
    assert Auditor().audit(eng).ok


def test_last_steps_bounded_by_max():
    eng = _engine()
    for j in range(30):
        eng.insert(j, ["a", "b"] if j % 2 else ["c"])
        st = eng.stats()
        assert 0 < st["last_update_steps"] <= st["max_update_steps"]


def test_cover_matches_foreground_levels():
    eng = _engine()
    for j in range(10):
        eng.insert(j, ["a", "b", "c"][: 1 + j % 3])
    for set_id, lev, _c in eng.cover():
        assert eng.set_level(set_id) == lev


def test_short_reset_runs_inline():
    eng = _engine()
    eng.keep_history = True
    eng.insert("x", ["a"])
    rep = eng.history[-1]
    assert rep.short is not None
    assert not eng.instances or max(eng.instances) > rep.short


def test_background_instances_get_started():
    # f small and many elements push the short boundary down
    eng = GreedyEngine.create(0.2, C=1, n_cap=200, f_cap=1)
    eng.keep_history = True
    for s in range(4):
        eng.add_set(s, 1.0)
    for j in range(150):
        eng.insert(j, [j % 4])
    assert any(r.started for r in eng.history)
    assert eng.instances
    assert Auditor().audit(eng).ok
