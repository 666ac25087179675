"""Benchmark harness: solver runs under resource limits and the improvement report."""

from __future__ import annotations

import csv
import io
import logging
import os
import re
import resource
import shlex
import signal
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

GiB = 1 << 30

PLAIN, HARD, SOFT, BUILTIN, HUMAN = "plain", "learned-hard", "learned-soft", "built-in", "human-made"
STANDARD_LABELS = (PLAIN, HARD, SOFT, BUILTIN, HUMAN)
COLUMN_TITLES = {
    PLAIN: "plain",
    HARD: "learned (hard)",
    SOFT: "learned (soft)",
    BUILTIN: "built-in",
    HUMAN: "human-made",
}
DOMAIN_FLAG = "--heuristic=Domain"
BUILTIN_FLAGS = (DOMAIN_FLAG, "--dom-mod=false,opt")

OPTIMUM, SATISFIABLE, NO_ANSWER, ERROR = "optimum-found", "satisfiable", "no-answer-within-limit", "error"

# clingo exit codes: 10 sat, 20 unsat, 30 exhausted, +1 interrupted; 33 memory
_CLEAN_EXITS = {0, 1, 10, 11, 20, 21, 30, 31}
_MEMORY_EXIT = 33


class BenchError(RuntimeError):
    pass


class BenchConfigError(BenchError):
    pass


# --------------------------------------------------------------------------- configuration


@dataclass(frozen=True)
class SolverConfig:
    label: str
    files: tuple[Path, ...] = ()
    flags: tuple[str, ...] = ()

    @classmethod
    def plain(cls) -> "SolverConfig":
        return cls(PLAIN)

    @classmethod
    def learned(cls, mode: str, heuristics: str | Path) -> "SolverConfig":
        if mode not in ("hard", "soft"):
            raise ValueError(f"learned configurations are hard or soft, not {mode!r}")
        return cls(HARD if mode == "hard" else SOFT, (Path(heuristics),), (DOMAIN_FLAG,))

    @classmethod
    def builtin(cls) -> "SolverConfig":
        return cls(BUILTIN, (), BUILTIN_FLAGS)

    @classmethod
    def human(cls, heuristics: str | Path) -> "SolverConfig":
        return cls(HUMAN, (Path(heuristics),), (DOMAIN_FLAG,))


@dataclass(frozen=True)
class Limits:
    time: float = 600.0
    memory: int | None = 20 * GiB
    grace: float = 5.0


@dataclass
class BenchConfig:
    solver: list[str]
    encoding: Path
    instances: list[Path]
    configs: list[SolverConfig]
    limits: Limits = field(default_factory=Limits)
    workers: int = 1


def parse_memory(value) -> int | None:
    """Bytes from an int or a string such as "20GiB", "512M" or "4GB".

    Bare and ``iB`` suffixes are binary; ``B`` suffixes without ``i`` are decimal.
    """
    if value is None or isinstance(value, int):
        return value
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*(?:([KMGT])(i?)(B?)|B)?\s*", str(value), flags=re.I)
    if not m:
        raise BenchConfigError(f"cannot read memory limit {value!r}")
    if not m[2]:
        return int(float(m[1]))
    k = "KMGT".index(m[2].upper()) + 1
    base = 1000 if m[4] and not m[3] else 1024
    return int(float(m[1]) * base**k)


def solver_command(value: str | Sequence[str] | None) -> list[str]:
    env = os.environ.get("HEULEARN_SOLVER")
    if env:
        value = env
    if not value:
        value = "clingo"
    return shlex.split(value) if isinstance(value, str) else list(value)


def load_config(path: str | Path) -> BenchConfig:
    """Read a TOML benchmark configuration; relative paths resolve against its directory.

    Keys: ``solver``, ``encoding``, ``corpus`` (directory) or ``instances``
    (list), ``pattern``, ``time_limit``, ``memory_limit``, ``grace``,
    ``workers``; table ``[heuristics]`` with ``hard``/``soft``/``human`` files
    selects the standard configurations, and ``[configs.<label>]`` tables with
    ``files``/``flags`` add or replace configurations.
    """
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise BenchConfigError(f"cannot read {path}: {exc}") from exc
    base = path.parent

    def p(x) -> Path:
        q = Path(x)
        return q if q.is_absolute() else Path(os.path.normpath(base / q))

    if "encoding" not in data:
        raise BenchConfigError(f"{path}: missing 'encoding'")
    if "instances" in data:
        instances = [p(x) for x in data["instances"]]
    elif "corpus" in data:
        instances = sorted(p(data["corpus"]).glob(data.get("pattern", "*.lp")))
    else:
        raise BenchConfigError(f"{path}: missing 'corpus' or 'instances'")

    configs = {PLAIN: SolverConfig.plain()}
    heur = data.get("heuristics", {})
    if "hard" in heur:
        configs[HARD] = SolverConfig.learned("hard", p(heur["hard"]))
    if "soft" in heur:
        configs[SOFT] = SolverConfig.learned("soft", p(heur["soft"]))
    if data.get("builtin", True):
        configs[BUILTIN] = SolverConfig.builtin()
    if "human" in heur:
        configs[HUMAN] = SolverConfig.human(p(heur["human"]))
    for label, table in data.get("configs", {}).items():
        configs[label] = SolverConfig(label, tuple(p(f) for f in table.get("files", [])), tuple(table.get("flags", [])))

    for f in [p(data["encoding"]), *(c for cfg in configs.values() for c in cfg.files)]:
        if not f.exists():
            raise BenchConfigError(f"{path}: file not found: {f}")

    limits = Limits(
        float(data.get("time_limit", Limits.time)),
        parse_memory(data.get("memory_limit", Limits.memory)),
        float(data.get("grace", Limits.grace)),
    )
    # solver arguments naming files next to the config (scripts, wrappers) resolve like other paths
    solver = [str(p(a)) if "/" in a and p(a).exists() else a for a in solver_command(data.get("solver"))]
    return BenchConfig(solver, p(data["encoding"]), instances,
                       list(configs.values()), limits, int(data.get("workers", 1)))


# --------------------------------------------------------------------------- runs


@dataclass(frozen=True)
class RunResult:
    instance: str
    config: str
    status: str
    value: int | None = None
    wall_time: float = 0.0
    exit_code: int | None = None
    diagnostics: str = ""

    def __post_init__(self):
        if (self.value is not None) != (self.status in (OPTIMUM, SATISFIABLE)):
            raise ValueError(f"value {self.value!r} inconsistent with status {self.status!r}")

    @property
    def solved(self) -> bool:
        return self.value is not None


_PROGRESS = re.compile(r"^Optimization\s*:\s*(-?\d+)", re.M)


def parse_solver_output(text: str) -> tuple[str, int | None]:
    """Status and best optimisation value from a clingo-style transcript."""
    values = _PROGRESS.findall(text)
    value = int(values[-1]) if values else None
    lines = {line.strip() for line in text.splitlines()}
    if "UNSATISFIABLE" in lines:
        return ERROR, None
    if value is None:
        return NO_ANSWER, None
    if "OPTIMUM FOUND" in lines:
        return OPTIMUM, value
    return SATISFIABLE, value


def _limit_memory(pid: int, nbytes: int | None) -> None:
    # applied from outside: preexec_fn is unsafe when runs share a thread pool
    if nbytes is None:
        return
    try:
        resource.prlimit(pid, resource.RLIMIT_AS, (nbytes, nbytes))
    except (OSError, ValueError) as exc:
        log.warning("could not set memory limit on solver process %d: %s", pid, exc)


def run_config(
    encoding: str | Path,
    config: SolverConfig,
    instance: str | Path,
    limits: Limits = Limits(),
    solver: Sequence[str] | None = None,
) -> RunResult:
    """Run one solver configuration on one instance.

    On reaching the time limit the solver is interrupted (SIGINT) so it can
    report its best answer, then killed after the grace period.
    """
    instance = Path(instance)
    iid = instance.stem
    for f in (Path(encoding), instance, *config.files):
        if not f.exists():
            return RunResult(iid, config.label, ERROR, diagnostics=f"missing input file {f}")
    argv = [*solver_command(solver), str(encoding), str(instance), *map(str, config.files), *config.flags]
    start = time.monotonic()
    try:
        proc = subprocess.Popen(argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    except OSError as exc:
        return RunResult(iid, config.label, ERROR, diagnostics=f"cannot launch {argv[0]}: {exc}")
    _limit_memory(proc.pid, limits.memory)
    timed_out = False
    try:
        out, err = proc.communicate(timeout=limits.time)
    except subprocess.TimeoutExpired:
        timed_out = True
        proc.send_signal(signal.SIGINT)
        try:
            out, err = proc.communicate(timeout=limits.grace)
        except subprocess.TimeoutExpired:
            proc.kill()
            out, err = proc.communicate()
    wall = time.monotonic() - start
    code = proc.returncode
    status, value = parse_solver_output(out)
    diag = err.strip()[-2000:]

    if code == _MEMORY_EXIT:
        status = SATISFIABLE if value is not None else NO_ANSWER
        diag = (diag + "\nmemory limit reached").strip()
    elif code not in _CLEAN_EXITS and not timed_out:
        status, value = ERROR, None
        diag = (diag + f"\nsolver exited with status {code}").strip()
    if status == ERROR:
        value = None
    return RunResult(iid, config.label, status, value, round(wall, 3), code, diag)


def run_bench(cfg: BenchConfig) -> list[RunResult]:
    """All (instance, configuration) runs; results ordered by instance then configuration."""
    jobs = [(i, c) for i in cfg.instances for c in cfg.configs]
    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        futures = [pool.submit(run_config, cfg.encoding, c, i, cfg.limits, cfg.solver) for i, c in jobs]
        results = [f.result() for f in futures]
    for r in results:
        if r.status == ERROR:
            log.warning("%s/%s: %s", r.instance, r.config, r.diagnostics or "error")
    return results


# --------------------------------------------------------------------------- report


@dataclass(frozen=True)
class ImprovementCell:
    kind: str  # "percentage" | "only-with-heuristic" | "only-without-heuristic" | "both-unsolved"
    percentage: float | None = None

    def __str__(self) -> str:
        if self.kind == "percentage":
            return f"{_fmt(self.percentage)}%"
        return {"only-with-heuristic": "100%", "only-without-heuristic": "-inf", "both-unsolved": ""}[self.kind]

    @property
    def improved(self) -> bool:
        return self.kind == "only-with-heuristic" or (self.kind == "percentage" and self.percentage > 0)

    @property
    def deteriorated(self) -> bool:
        return self.kind == "only-without-heuristic" or (self.kind == "percentage" and self.percentage < 0)


def _fmt(x: float) -> str:
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def improvement(plain: RunResult, other: RunResult) -> ImprovementCell:
    """Relative cost reduction of ``other`` against ``plain``, in percent."""
    if plain.instance != other.instance:
        raise ValueError(f"instance mismatch: {plain.instance} vs {other.instance}")
    vp, vo = plain.value, other.value
    if vp is None and vo is None:
        return ImprovementCell("both-unsolved")
    if vp is None:
        return ImprovementCell("only-with-heuristic")
    if vo is None:
        return ImprovementCell("only-without-heuristic")
    if vp == 0:
        if vo == 0:
            return ImprovementCell("percentage", 0.0)
        return ImprovementCell("only-without-heuristic") if vo > 0 else ImprovementCell("only-with-heuristic")
    return ImprovementCell("percentage", 100.0 * (vp - vo) / abs(vp))


@dataclass
class Report:
    header: list[str]
    rows: list[list[str]]
    footer: list[str]

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        w.writerow(self.footer)
        return buf.getvalue()

    def table(self) -> str:
        return render_table([self.header, *self.rows, self.footer])


def _labels(records: Iterable[RunResult]) -> list[str]:
    seen = {r.config for r in records}
    return [x for x in STANDARD_LABELS if x in seen or x == PLAIN] + sorted(seen - set(STANDARD_LABELS))


def report(records: Sequence[RunResult]) -> Report:
    """Table of values and improvements, one row per instance solved somewhere."""
    labels = _labels(records)
    by_instance: dict[str, dict[str, RunResult]] = {}
    for r in records:
        by_instance.setdefault(r.instance, {})[r.config] = r
    counts = {label: [0, 0] for label in labels[1:]}
    rows = []
    for iid in sorted(by_instance):
        runs = by_instance[iid]
        if PLAIN not in runs:
            log.warning("instance %s has no plain run; row skipped", iid)
            continue
        if not any(r.solved for r in runs.values()):
            continue
        plain = runs[PLAIN]
        row = [iid, str(plain.value) if plain.solved else "inf"]
        for label in labels[1:]:
            if label not in runs:
                row.append("")
                continue
            other = runs[label]
            cell = improvement(plain, other)
            text = str(other.value) if other.solved else "inf"
            if str(cell):
                text += f" ({cell})"
            row.append(text)
            counts[label][0] += cell.improved
            counts[label][1] += cell.deteriorated
        rows.append(row)
    header = ["Instance"] + [COLUMN_TITLES.get(x, x) for x in labels]
    footer = ["summary", ""] + [f"improved: {i}, deteriorated: {d}" for i, d in counts.values()]
    return Report(header, rows, footer)


def render_table(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) if i < len(r) else 0 for r in rows) for i in range(max(map(len, rows)))]
    lines = []
    for k, r in enumerate(rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def table_from_csv(text: str) -> str:
    return render_table(list(csv.reader(io.StringIO(text))))


RUN_FIELDS = ["instance", "config", "status", "value", "wall_time", "exit_code", "time_limit"]


def runs_csv(records: Sequence[RunResult], limits: Limits | None = None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, RUN_FIELDS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in records:
        row = asdict(r)
        row["value"] = "" if r.value is None else r.value
        row["exit_code"] = "" if r.exit_code is None else r.exit_code
        row["time_limit"] = "" if limits is None else _fmt(limits.time)
        w.writerow(row)
    return buf.getvalue()


def read_runs(text: str) -> list[RunResult]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(RunResult(
            row["instance"], row["config"], row["status"],
            int(row["value"]) if row["value"] else None,
            float(row["wall_time"] or 0),
            int(row["exit_code"]) if row.get("exit_code") else None,
        ))
    return out


def write_outputs(records: Sequence[RunResult], outdir: str | Path, limits: Limits | None = None) -> Report:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rep = report(records)
    (outdir / "results.csv").write_text(rep.csv())
    (outdir / "results.txt").write_text(rep.table())
    (outdir / "runs.csv").write_text(runs_csv(records, limits))
    return rep


__all__ = [
    "BenchConfig", "BenchConfigError", "BenchError", "ImprovementCell", "Limits", "Report", "RunResult",
    "SolverConfig", "improvement", "load_config", "parse_solver_output", "render_table", "report", "run_bench",
    "run_config",
]
