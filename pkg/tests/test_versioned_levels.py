"""Slot writes, foreground reads and the switch of finished columns."""

import pytest

from dynsetcover.core_model import ProtocolError, StaleInstanceError
from dynsetcover.versioned_levels import ELEM, SET, VersionTable


def test_background_write_is_invisible_until_switch():
    vt = VersionTable(10)
    col = vt.open_column(3)
    cell = vt.write_background_level(SET, 1, col, 2)
    assert cell.lev == 2 and cell.head is col.heads[SET][2]
    assert vt.read_foreground_level(SET, 1) == -1
    col.finished = False
    vt.switch_to_foreground(col)
    assert vt.read_foreground_level(SET, 1) == 2


def test_last_write_wins():
    vt = VersionTable(10)
    col = vt.open_column(5)
    vt.write_background_level(ELEM, 4, col, 1)
    vt.write_background_level(ELEM, 4, col, 3)
    vt.switch_to_foreground(col)
    assert vt.read_foreground_level(ELEM, 4) == 3
    assert [e for e, _ in vt.foreground_members(ELEM, 1)] == []


def test_fresh_entity_reads_minus_one():
    assert VersionTable(4).read_foreground_level(SET, 0) == -1


def test_aborted_column_never_becomes_foreground():
    vt = VersionTable(10)
    vt.foreground_place(ELEM, 0, 2)
    good = vt.open_column(6)
    vt.write_background_level(ELEM, 0, good, 4)
    vt.switch_to_foreground(good)
    stale = vt.open_column(2)
    vt.write_background_level(ELEM, 0, stale, 1)
    vt.abort(stale)
    assert vt.read_foreground_level(ELEM, 0) == 4
    with pytest.raises(StaleInstanceError):
        vt.write_background_level(ELEM, 0, stale, 0)


def test_switch_leaves_higher_levels_alone():
    vt = VersionTable(10)
    vt.foreground_place(SET, 9, 5)
    vt.foreground_place(SET, 8, 1)
    col = vt.open_column(3)
    vt.switch_to_foreground(col)
    assert vt.read_foreground_level(SET, 9) == 5
    # the old level-1 list was replaced by the (empty) instance list
    assert vt.read_foreground_level(SET, 8) == -1


def test_column_bounds_and_double_open():
    vt = VersionTable(4)
    with pytest.raises(ProtocolError):
        vt.open_column(5)
    vt.open_column(2)
    with pytest.raises(ProtocolError):
        vt.open_column(2)
