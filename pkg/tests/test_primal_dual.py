"""Foreground weights, tightness and audits of the primal-dual engine."""

import pytest

from dynsetcover import EngineAuditor, PDEngine
from dynsetcover.primal_dual import is_tight


def _engine(C=4, n_cap=10, f_cap=2):
    eng = PDEngine.create(0.2, C=C, n_cap=n_cap, f_cap=f_cap)
    eng.add_set("a", 1.0)
    eng.add_set("b", 0.3)
    return eng


def _fg(eng, eid, sets):
    """Apply only the foreground insertion rule; returns the element weight."""
    eng._begin()
    life = eng.system.open_life(eid, sets)
    eng._fg_insert(life.idx, life.members)
    return eng.element_state()[life.idx][2]


def test_slack_saturates_set():
    eng = _engine()
    assert _fg(eng, "x", ["b"]) == pytest.approx(0.3)
    assert eng.set_weight("b") == pytest.approx(0.3)
    assert is_tight(eng.set_weight("b"), 0.3, eng.params.beta)


def test_min_slack_over_members():
    eng = _engine()
    _fg(eng, "x", ["b"])
    # b is tight now, so the next element in b gets nothing
    assert _fg(eng, "y", ["a", "b"]) == 0.0
    assert eng.set_weight("a") == 0.0


def test_first_element_singleton():
    eng = _engine()
    assert _fg(eng, "x", ["a"]) == pytest.approx(1.0)
    assert [s for s, _l, _c in eng.cover()] == ["a"]


def test_protocol_keeps_every_element_in_a_tight_set():
    eng = _engine()
    aud = EngineAuditor()
    for j in range(12):
        eng.insert(j, ["a", "b"] if j % 3 else ["a"])
        assert aud.audit(eng).ok, aud.audit(eng).summary()
    for j in range(0, 12, 2):
        eng.delete(j)
        rep = aud.audit(eng)
        assert rep.ok, rep.summary()


def test_deleted_supporter_keeps_set_tight():
    eng = _engine()
    _fg(eng, "x", ["a"])
    eng._begin()
    eng._fg_delete(eng.system.current["x"])
    assert is_tight(eng.set_weight("a"), 1.0, eng.params.beta)


def test_weight_zero_deletion_changes_nothing():
    eng = _engine()
    _fg(eng, "x", ["b"])
    _fg(eng, "y", ["b"])
    before = eng.set_weight("b")
    eng._begin()
    eng._fg_delete(eng.system.current["y"])
    assert eng.set_weight("b") == before


def test_cover_cost_within_f_times_opt_on_small_case():
    eng = _engine()
    for j in range(6):
        eng.insert(j, ["a", "b"])
    # OPT is the cheaper set b
    assert eng.cover_cost() <= (1 + 10 * 0.2) * 2 * 0.3 + 1e-9


def _late_join(deletions):
    """reset(20) where ``y`` saturates set A at round 20, then ``deletions``
    of A's slack elements arrive before A is extracted.

    B holds enough slack elements to keep the instance out of its closing
    sprint.  Returns (A level, A weight, y level, y weight) once the
    rebuild has finished.
    """
    from dynsetcover.primal_dual import WaterFillInstance
    from dynsetcover.reset_instance import INIT

    eng = PDEngine.create(0.2, C=16, n_cap=20, f_cap=2)
    eng.add_set("A", 0.09)
    eng.add_set("B", 1.0)
    eng._begin()
    xs = []
    for j in range(13):
        life = eng.system.open_life(f"x{j}", ["A"] if j < 3 else ["B"])
        eng._fg_insert(life.idx, life.members)
        xs.append(life)
    inst = WaterFillInstance(20, eng.params, eng.table, eng.system, eng.vt,
                             lambda: eng.updates).start()
    while not (inst.phase == INIT and inst._late):
        inst.step(1)
    eng._begin()
    y = eng.system.open_life("y", ["A"])
    eng._fg_insert(y.idx, y.members)
    inst.feed_insert(y.idx)
    while y.idx in inst.deferred:
        inst.step(1)
    assert inst.round == 20 and inst.ecell[y.idx].lev == 20
    for life in xs[:deletions]:
        eng._begin()
        eng._fg_delete(life.idx)
        inst.feed_delete(life.idx)
    inst.run_to_completion()
    sets, elems = inst.levels()
    return sets[0][0], sets[0][1], elems[y.idx][0], elems[y.idx][1]


def test_joined_element_follows_its_set_down():
    # one deletion: A only goes tight at a lower round
    a_lev, a_w, y_lev, _ = _late_join(1)
    assert a_lev < 20
    assert is_tight(a_w, 0.09, 1.2)
    assert y_lev == a_lev


def test_joined_element_stays_covered():
    # all slack elements of A deleted: y alone must make A tight again
    a_lev, a_w, y_lev, y_w = _late_join(3)
    assert is_tight(a_w, 0.09, 1.2)
    assert y_lev == a_lev
    assert y_w == pytest.approx(0.09)
