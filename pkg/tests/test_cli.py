"""Stream grammar, generators and the run command."""

import io

import pytest

from dynsetcover.cli import StreamError, gen, main, parse_lines, run


def test_parse_basic_stream():
    s = parse_lines(["set s1 0.5", "ins e1 s1", "# comment", "", "del e1"])
    assert len(s.registrations) == 1
    assert [r.op for r in s.updates] == ["ins", "del"]


def test_parse_edge_record():
    s = parse_lines(["edge+ 3 7"])
    assert [(r.op, r.args) for r in s.updates] == [("edge+", ("3", "7"))]


def test_parse_errors_name_the_line():
    with pytest.raises(StreamError, match="line 2"):
        parse_lines(["set s1 1", "ins e1"])
    with pytest.raises(StreamError):
        parse_lines(["frobnicate"])


def test_gen_is_deterministic():
    for kind in ("random", "churn", "level_attack", "window_boundary", "ds_random"):
        assert gen(kind, 3, 200) == gen(kind, 3, 200)
    assert gen("random", 3, 200) != gen("random", 4, 200)
    with pytest.raises(ValueError):
        gen("nope", 0, 10)


def test_churn_alternates_hot_elements():
    ups = parse_lines(gen("churn", 1, 200).splitlines()).updates
    ops = [r.op for r in ups[-40:]]
    assert "ins" in ops and "del" in ops


def _write(tmp_path, text, name="s.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_tiny_stream_with_audit(tmp_path):
    path = _write(tmp_path, "set s1 0.5\nset s2 1\nins e1 s1\nins e2 s1 s2\ndel e1\n")
    out = io.StringIO()
    assert run("greedy", path, out, eps=0.1, audit=True) == 0
    lines = out.getvalue().splitlines()
    assert lines[0].startswith("update_idx,op,cover_cost,cover_size,max_steps_so_far")
    assert len(lines) == 4
    assert all(l.split(",")[6] == "1" for l in lines[1:])


def test_opt_refused_for_many_sets(tmp_path):
    text = "".join(f"set s{j} 1\n" for j in range(30)) + "ins e s0\n"
    path = _write(tmp_path, text)
    err = io.StringIO()
    assert run("greedy", path, io.StringIO(), eps=0.1, opt=True, err=err) == 2
    assert "at most 20 sets" in err.getvalue()


def test_max_steps_is_prefix_max(tmp_path):
    path = _write(tmp_path, gen("random", 2, 150, ncap=20, f=3, m=10))
    out = io.StringIO()
    assert run("greedy", path, out, eps=0.2) == 0
    rows = [l.split(",") for l in out.getvalue().splitlines()[1:]]
    best = 0
    for r in rows:
        best = max(best, int(r[5]))
        assert int(r[4]) == best


def test_engine_error_reports_update(tmp_path):
    path = _write(tmp_path, "set s1 1\nins e1 s1\ndel e2\n")
    err = io.StringIO()
    assert run("greedy", path, io.StringIO(), eps=0.1, err=err) == 1
    assert "update 2" in err.getvalue()


def test_main_gen_and_run(tmp_path, capsys):
    stream = tmp_path / "g.txt"
    assert main(["gen", "--kind", "ds_random", "--seed", "1", "--size", "30", "--ncap", "8",
                 "--f", "4", "--out", str(stream)]) == 0
    out = tmp_path / "o.csv"
    assert main(["run", "--mode", "ds", "--input", str(stream), "--out", str(out),
                 "--eps", "0.2", "--audit", "--opt"]) == 0
    rows = out.read_text().splitlines()
    assert rows[0].endswith("opt_cost,ratio") and len(rows) == 31


@pytest.mark.parametrize("mode", ["windowed", "pd", "pd-windowed"])
def test_other_modes_run(tmp_path, mode):
    path = _write(tmp_path, gen("random", 5, 80, ncap=12, f=3, m=8, C=4))
    assert run(mode, path, io.StringIO(), eps=0.2, audit=True) == 0


@pytest.mark.parametrize("kind", ["random", "churn", "level_attack"])
def test_gen_with_a_single_set(kind):
    ups = parse_lines(gen(kind, 0, 30, ncap=3, f=1, m=1, C=4).splitlines()).updates
    assert len(ups) == 30


def test_level_attack_terminates_when_only_hub_elements_fill_the_cap():
    # with n_cap 2 the cap is soon filled by hub elements alone
    for seed in range(20):
        ups = parse_lines(gen("level_attack", seed, 200, ncap=2, f=1, m=1, C=4).splitlines()).updates
        assert len(ups) == 200
