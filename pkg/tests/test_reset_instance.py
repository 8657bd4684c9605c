"""reset(k) on hand-built foregrounds."""

import pytest

from dynsetcover import GreedyEngine
from dynsetcover.core_model import ProtocolError, StaleInstanceError
from dynsetcover.reset_instance import DONE, ResetInstance


def _foreground(sets, elems, eps=0.2, n_cap=10, f_cap=2):
    """Engine whose foreground holds ``elems`` placed by the insertion rule only."""
    eng = GreedyEngine.create(eps, C=1, n_cap=n_cap, f_cap=f_cap, unbounded=True)
    for s, c in sets:
        eng.add_set(s, c)
    for e, ms in elems:
        life = eng.system.open_life(e, ms)
        eng._fg_insert(life.idx, life.members)
    return eng


def _instance(eng, k):
    return ResetInstance(k, eng.params, eng.table, eng.system, eng.vt)


def test_two_elements_one_big_set():
    eng = _foreground([("s1", 1.0), ("s2", 1.0)], [("e1", ["s1", "s2"]), ("e2", ["s1"])])
    inst = _instance(eng, 3).start()
    inst.run_to_completion()
    sets, elems = inst.levels()
    assert sets.get(0) == 3
    assert sets.get(1, -1) == -1
    assert {e: v[0] for e, v in elems.items()} == {0: 3, 1: 3}


def test_single_element_lands_at_level_zero():
    eng = _foreground([("s", 1.0)], [("e", ["s"])])
    inst = _instance(eng, 0).start()
    inst.run_to_completion()
    sets, elems = inst.levels()
    assert sets == {0: 0}
    assert elems[0][0] == 0


def test_empty_prefix_completes_at_once():
    eng = _foreground([("s", 1.0)], [])
    inst = _instance(eng, 4).start()
    inst.run_to_completion()
    assert inst.phase == DONE
    assert inst.levels() == ({}, {})


def test_zero_budget_changes_nothing():
    eng = _foreground([("s", 1.0)], [("e", ["s"])])
    inst = _instance(eng, 2).start()
    before = (inst.phase, dict(inst.unc))
    prog = inst.step(0)
    assert prog.steps == 0
    assert (inst.phase, dict(inst.unc)) == before


def test_finalize_twice_is_an_error():
    eng = _foreground([("s", 1.0)], [("e", ["s"])])
    inst = _instance(eng, 0).start()
    inst.run_to_completion()
    inst.finalize()
    with pytest.raises(ProtocolError):
        inst.finalize()


def test_aborted_instance_is_stale():
    eng = _foreground([("s", 1.0)], [("e", ["s"])])
    inst = _instance(eng, 1).start()
    inst.abort()
    with pytest.raises(StaleInstanceError):
        inst.step(10)
    assert eng.set_level("s") == 0


def test_delete_before_rounds_removes_participant():
    eng = _foreground([("s", 1.0)], [("a", ["s"]), ("b", ["s"])])
    inst = _instance(eng, 3).start()
    life = eng.system.alive_life("b")
    eng._fg_delete(life.idx)
    inst.feed_delete(life.idx)
    inst.run_to_completion()
    _sets, elems = inst.levels()
    assert life.idx not in elems
