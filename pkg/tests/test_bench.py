import csv
import io
import re
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from heulearn.bench import (
    ERROR,
    NO_ANSWER,
    OPTIMUM,
    SATISFIABLE,
    BenchConfigError,
    Limits,
    RunResult,
    SolverConfig,
    improvement,
    load_config,
    parse_memory,
    parse_solver_output,
    read_runs,
    report,
    run_bench,
    run_config,
    runs_csv,
    solver_command,
    write_outputs,
)

from conftest import CORPUS, MOCK_SOLVER, TRANSCRIPTS

# --------------------------------------------------------------------------- transcripts


@pytest.mark.parametrize(
    "name, status, value",
    [
        ("interrupted.txt", SATISFIABLE, 586),
        ("time_limit.txt", SATISFIABLE, 587),
        ("optimum.txt", OPTIMUM, 2),
        ("unsat.txt", ERROR, None),
    ],
)
def test_transcripts(name, status, value):
    assert parse_solver_output((TRANSCRIPTS / name).read_text()) == (status, value)


def test_empty_output_means_no_answer():
    assert parse_solver_output("") == (NO_ANSWER, None)
    assert parse_solver_output("clingo version 5\nSolving...\nUNKNOWN\n") == (NO_ANSWER, None)


def test_last_progress_line_wins():
    text = "Optimization: 9\nOptimization: 7\nOptimization: -3\n"
    assert parse_solver_output(text) == (SATISFIABLE, -3)


def test_run_result_invariant():
    with pytest.raises(ValueError):
        RunResult("i", "plain", SATISFIABLE, None)
    with pytest.raises(ValueError):
        RunResult("i", "plain", ERROR, 5)


# --------------------------------------------------------------------------- improvement


def r(v, config="x", inst="i"):
    return RunResult(inst, config, NO_ANSWER if v is None else SATISFIABLE, v)


@pytest.mark.parametrize(
    "vp, vo, text",
    [
        (10, 12, "-20%"),
        (10, 5, "50%"),
        (None, 5, "100%"),
        (10, None, "-inf"),
        (0, 0, "0%"),
        (0, 3, "-inf"),
        (3, 3, "0%"),
        (3, 2, "33.33%"),
        (-10, -5, "-50%"),
        (-10, -20, "100%"),
        (None, None, ""),
    ],
)
def test_improvement_cells(vp, vo, text):
    assert str(improvement(r(vp), r(vo))) == text


def test_improvement_instance_mismatch():
    with pytest.raises(ValueError):
        improvement(r(1, inst="a"), r(1, inst="b"))


@given(st.integers(1, 10**6), st.integers(0, 10**6))
def test_improvement_sign_and_identity(vp, vo):
    cell = improvement(r(vp), r(vo))
    assert cell.improved == (vo < vp)
    assert cell.deteriorated == (vo > vp)
    assert str(improvement(r(vo), r(vo))) == "0%"


@given(st.integers(1, 10**6), st.integers(1, 10**6))
def test_improvement_antisymmetry_in_sign(a, b):
    ab, ba = improvement(r(a), r(b)), improvement(r(b), r(a))
    assert (ab.percentage > 0) == (ba.percentage < 0) or a == b


# --------------------------------------------------------------------------- mock solver runs


def scripted(tmp_path, body, name="inst"):
    p = tmp_path / f"{name}.lp"
    p.write_text(body + "\nitem(1).\n")
    return p


ENC = CORPUS / "encoding.lp"


@pytest.mark.parametrize(
    "script, status, value, code",
    [
        ("% mock plain: 9 7 optimum", OPTIMUM, 7, 30),
        ("% mock plain: 9 7 limit", SATISFIABLE, 7, 11),
        ("% mock plain: limit", NO_ANSWER, None, 1),
        ("% mock plain: none", NO_ANSWER, None, 0),
        ("% mock plain: unsat", ERROR, None, 20),
        ("% mock plain: memory", NO_ANSWER, None, 33),
    ],
)
def test_run_config_statuses(tmp_path, script, status, value, code):
    res = run_config(ENC, SolverConfig.plain(), scripted(tmp_path, script), Limits(time=10), MOCK_SOLVER)
    assert (res.status, res.value, res.exit_code) == (status, value, code)
    assert res.instance == "inst" and res.config == "plain"


def test_memory_exhaustion_is_diagnosed(tmp_path):
    res = run_config(ENC, SolverConfig.plain(), scripted(tmp_path, "% mock plain: memory"), Limits(time=10),
                     MOCK_SOLVER)
    assert "memory" in res.diagnostics


def test_timeout_interrupts_and_keeps_best_value(tmp_path):
    inst = scripted(tmp_path, "% mock plain: 50 40 timeout")
    res = run_config(ENC, SolverConfig.plain(), inst, Limits(time=1, grace=5), MOCK_SOLVER)
    assert (res.status, res.value) == (SATISFIABLE, 40)
    assert 1 <= res.wall_time < 5


def test_crash_is_error(tmp_path):
    res = run_config(ENC, SolverConfig.plain(), scripted(tmp_path, "% mock plain: 3 crash"), Limits(time=10),
                     MOCK_SOLVER)
    assert res.status == ERROR and res.value is None
    assert "segmentation" in res.diagnostics


def test_missing_instance_is_error_without_launch(tmp_path):
    res = run_config(ENC, SolverConfig.plain(), tmp_path / "nope.lp", Limits(time=10), ["/nonexistent/solver"])
    assert res.status == ERROR and "missing" in res.diagnostics


def test_unlaunchable_solver_is_error(tmp_path):
    res = run_config(ENC, SolverConfig.plain(), scripted(tmp_path, ""), Limits(time=10), ["/nonexistent/solver"])
    assert res.status == ERROR and "cannot launch" in res.diagnostics


def test_configurations_are_told_apart(tmp_path):
    inst = scripted(tmp_path, "\n".join(
        f"% mock {c}: {v} optimum"
        for c, v in [("plain", 1), ("learned-hard", 2), ("learned-soft", 3), ("built-in", 4), ("human-made", 5)]
    ))
    configs = [
        SolverConfig.plain(),
        SolverConfig.learned("hard", CORPUS / "hard.heu"),
        SolverConfig.learned("soft", CORPUS / "soft.heu"),
        SolverConfig.builtin(),
        SolverConfig.human(CORPUS / "human.heu"),
    ]
    got = [run_config(ENC, c, inst, Limits(time=10), MOCK_SOLVER).value for c in configs]
    assert got == [1, 2, 3, 4, 5]
    assert "--heuristic=Domain" in SolverConfig.learned("soft", "x").flags
    assert "--dom-mod=false,opt" in SolverConfig.builtin().flags


# --------------------------------------------------------------------------- report against an oracle built from the scripts


def _oracle_percent(vp: int, vo: int) -> str:
    q = Decimal(Fraction(100 * (vp - vo), abs(vp)).numerator) / Decimal(Fraction(100 * (vp - vo), abs(vp)).denominator)
    s = str(q.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)).rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def oracle_cell(vp, vo):
    if vp is None and vo is None:
        return ""
    if vp is None:
        return "100%"
    if vo is None:
        return "-inf"
    if vp == 0:
        return "0%" if vo == 0 else ("-inf" if vo > 0 else "100%")
    return _oracle_percent(vp, vo) + "%"


def oracle_report_csv() -> str:
    """Expected results derived from the mock script lines alone."""
    cols = ["plain", "learned-hard", "learned-soft", "built-in", "human-made"]
    rows, counts = [], {c: [0, 0] for c in cols[1:]}
    for inst in sorted((CORPUS / "instances").glob("*.lp")):
        vals = {}
        for m in re.finditer(r"^% mock ([\w-]+):\s*(.*)$", inst.read_text(), re.M):
            words = m[2].split()
            vals[m[1]] = int(words[-2]) if len(words) > 1 else None
        if all(vals[c] is None for c in cols):
            continue
        vp = vals["plain"]
        row = [inst.stem, "inf" if vp is None else str(vp)]
        for c in cols[1:]:
            vo = vals[c]
            cell = oracle_cell(vp, vo)
            row.append(("inf" if vo is None else str(vo)) + (f" ({cell})" if cell else ""))
            counts[c][0] += cell == "100%" or (cell not in ("", "-inf") and not cell.startswith("-") and cell != "0%")
            counts[c][1] += cell.startswith("-")
        rows.append(row)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Instance", "plain", "learned (hard)", "learned (soft)", "built-in", "human-made"])
    w.writerows(rows)
    w.writerow(["summary", ""] + [f"improved: {i}, deteriorated: {d}" for i, d in counts.values()])
    return buf.getvalue()


def test_frozen_golden_matches_script_oracle():
    assert (CORPUS / "expected_results.csv").read_text() == oracle_report_csv()


@pytest.fixture(scope="module")
def corpus_runs():
    cfg = load_config(CORPUS / "bench.toml")
    cfg.solver[:1] = [sys.executable]
    return run_bench(cfg)


@pytest.mark.slow
def test_mock_harness_report_is_byte_exact(corpus_runs, tmp_path):
    rep = write_outputs(corpus_runs, tmp_path, Limits(time=20))
    assert (tmp_path / "results.csv").read_text() == (CORPUS / "expected_results.csv").read_text()
    assert rep.footer[3] == "improved: 20, deteriorated: 6"
    assert len(rep.rows) == 30
    assert (tmp_path / "results.txt").read_text().startswith("Instance")


@pytest.mark.slow
def test_runs_csv_round_trip(corpus_runs):
    text = runs_csv(corpus_runs, Limits(time=20))
    again = read_runs(text)
    assert [(x.instance, x.config, x.status, x.value) for x in again] == [
        (x.instance, x.config, x.status, x.value) for x in corpus_runs
    ]
    assert report(again).csv() == report(corpus_runs).csv()
    assert next(csv.DictReader(io.StringIO(text)))["time_limit"] == "20"


def test_single_instance_plain_only():
    rep = report([RunResult("a", "plain", OPTIMUM, 4)])
    assert rep.csv() == "Instance,plain\na,4\nsummary,\n"


def test_rows_without_plain_are_skipped(caplog):
    rep = report([RunResult("a", "learned-soft", OPTIMUM, 4), RunResult("b", "plain", OPTIMUM, 2)])
    assert [row[0] for row in rep.rows] == ["b"]
    assert "no plain run" in caplog.text


def test_custom_labels_follow_standard_ones():
    rep = report([
        RunResult("a", "zeta", OPTIMUM, 1), RunResult("a", "plain", OPTIMUM, 2),
        RunResult("a", "learned-soft", OPTIMUM, 2),
    ])
    assert rep.header == ["Instance", "plain", "learned (soft)", "zeta"]
    assert rep.rows == [["a", "2", "2 (0%)", "1 (50%)"]]


# --------------------------------------------------------------------------- configuration


def test_load_config_resolves_paths():
    cfg = load_config(CORPUS / "bench.toml")
    assert cfg.encoding == CORPUS / "encoding.lp"
    assert len(cfg.instances) == 32 and cfg.instances[0].name == "i01.lp"
    assert [c.label for c in cfg.configs] == ["plain", "learned-hard", "learned-soft", "built-in", "human-made"]
    assert cfg.limits.time == 20 and cfg.limits.memory == 2 * 2**30
    assert cfg.workers == 8
    assert cfg.solver[1] == str(CORPUS.parent / "bin" / "mock_solver.py")


def test_load_config_custom_tables(tmp_path):
    (tmp_path / "e.lp").write_text("")
    (tmp_path / "x.lp").write_text("")
    (tmp_path / "c.toml").write_text(
        'encoding = "e.lp"\ninstances = ["x.lp"]\nbuiltin = true\n'
        '[configs.mine]\nfiles = ["e.lp"]\nflags = ["--foo"]\n'
    )
    cfg = load_config(tmp_path / "c.toml")
    assert [c.label for c in cfg.configs] == ["plain", "built-in", "mine"]
    assert cfg.configs[-1].flags == ("--foo",)
    assert cfg.limits.time == 600


@pytest.mark.parametrize("text", ['encoding = "missing.lp"\ninstances = []\n', "not toml = = 1", "time_limit = 5\n"])
def test_bad_configs(tmp_path, text):
    (tmp_path / "c.toml").write_text(text)
    with pytest.raises(BenchConfigError):
        load_config(tmp_path / "c.toml")


def test_memory_parsing():
    assert parse_memory("20GiB") == 20 * 2**30
    assert parse_memory("512 MB") == 512 * 10**6
    assert parse_memory(1024) == 1024
    assert parse_memory(None) is None
    assert parse_memory("512M") == 512 * 2**20
    with pytest.raises(BenchConfigError):
        parse_memory("lots")


def test_solver_env_override(monkeypatch):
    assert solver_command(None) == ["clingo"]
    monkeypatch.setenv("HEULEARN_SOLVER", "python3 -m clingo")
    assert solver_command(["whatever"]) == ["python3", "-m", "clingo"]
