"""``heulearn`` command line: gen-task, learn, emit, bench, report, pipeline."""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .asp import ParseError, UnsafeRuleError, parse_program
from .bench import (
    BenchError,
    Limits,
    SolverConfig,
    load_config,
    parse_memory,
    read_runs,
    report,
    run_bench,
    table_from_csv,
    write_outputs,
)
from .heuremit import AnnotationMode, emit_heuristics, postprocess
from .learner import (
    ExternalLearnerConfig,
    Hypothesis,
    LearnerError,
    parse_hypothesis,
    run_external_learner,
    search_hypothesis,
)
from .taskgen import LearningTask, TaskError, generate_task, parse_answer_set, parse_task, serialize_task

log = logging.getLogger("heulearn")

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


# --------------------------------------------------------------------------- stages


def gen_task(encoding: Path, instances: Sequence[Path], models: Sequence[Path], out: Path) -> LearningTask:
    if len(instances) != len(models):
        raise TaskError(f"{len(instances)} instance files but {len(models)} answer-set files")
    for i, m in zip(instances, models):
        if i.stem != m.stem:
            raise TaskError(f"instance {i.name} is paired with answer set {m.name}; stems must match")
    task = generate_task(
        parse_program(encoding.read_text()),
        [(i.stem, parse_program(i.read_text())) for i in instances],
        [(m.stem, parse_answer_set(m.read_text())) for m in models],
    )
    _write(out, serialize_task(task))
    return task


def learn(task_file: Path, out: Path, max_body: int | None = None, external: str | None = None,
          learner_flags: Sequence[str] | None = None) -> Hypothesis:
    if external is not None:
        cmd = shlex.split(os.environ.get("HEULEARN_LEARNER") or external)
        flags = list(learner_flags) if learner_flags is not None else ["--force-safety"]
        hyp = run_external_learner(task_file, ExternalLearnerConfig(cmd[0], cmd[1:] + flags))
    else:
        hyp, cov = search_hypothesis(parse_task(task_file.read_text()), max_body)
        for eid in cov.uncovered:
            log.warning("example %s is not covered", eid)
    _write(out, "".join(f"{r}\n" for r in hyp))
    return hyp


def emit(hyp_file: Path, mode: AnnotationMode, out: Path, task_file: Path | None = None) -> str:
    hyp = parse_hypothesis(hyp_file.read_text(), "file")
    if task_file is not None:
        hyp = postprocess(hyp, parse_task(task_file.read_text()).strict_types)
    else:
        log.info("no task given; strict-type atoms are kept")
    text = emit_heuristics(hyp, mode)
    _write(out, text)
    return text


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


@dataclass
class PipelineManifest:
    encoding: Path
    instances: list[Path]
    answer_sets: list[Path]
    output_dir: Path
    learner: str = "embedded"
    learner_command: str | None = None
    mode: str = "soft"
    bench_config: Path | None = None
    artifacts: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.instances) != len(self.answer_sets):
            raise TaskError("instance and answer-set lists differ in length")
        for i, m in zip(self.instances, self.answer_sets):
            if Path(i).stem != Path(m).stem:
                raise TaskError(f"instance {Path(i).name} is paired with answer set {Path(m).name}")

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, indent=2, default=str, sort_keys=True) + "\n"


def run_pipeline(m: PipelineManifest, max_body: int | None = None, human: Path | None = None) -> PipelineManifest:
    out = m.output_dir
    task_file, hyp_file = out / "task.las", out / "hypothesis.lp"
    gen_task(m.encoding, m.instances, m.answer_sets, task_file)
    learn(task_file, hyp_file, max_body, m.learner_command if m.learner == "external" else None)
    art = {"task": str(task_file), "hypothesis": str(hyp_file)}
    heu = {}
    for name in ("hard", "soft"):
        heu[name] = out / f"heuristics-{name}.heu"
        emit(hyp_file, AnnotationMode.named(name), heu[name], task_file)
        art[f"heuristics-{name}"] = str(heu[name])
    if m.bench_config is not None:
        cfg = load_config(m.bench_config)
        cfg.configs = [c for c in cfg.configs if c.label not in ("learned-hard", "learned-soft")]
        cfg.configs[1:1] = [SolverConfig.learned("hard", heu["hard"]), SolverConfig.learned("soft", heu["soft"])]
        if human is not None:
            cfg.configs = [c for c in cfg.configs if c.label != "human-made"] + [SolverConfig.human(human)]
        write_outputs(run_bench(cfg), out, cfg.limits)
        art["results"] = str(out / "results.csv")
        art["runs"] = str(out / "runs.csv")
    m.artifacts = art
    _write(out / "manifest.json", m.to_json())
    return m


# --------------------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="heulearn", description="Learn domain-specific heuristics for ASP optimisation problems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    g = sub.add_parser("gen-task", help="synthesize a learning task (.las)")
    g.add_argument("-e", "--encoding", type=Path, required=True)
    g.add_argument("-i", "--instances", type=Path, nargs="+", required=True)
    g.add_argument("-m", "--models", type=Path, nargs="+", required=True, help="answer sets, one per instance")
    g.add_argument("-o", "--output", type=Path, required=True)

    lr = sub.add_parser("learn", help="learn a hypothesis from a task")
    lr.add_argument("task", type=Path)
    lr.add_argument("-o", "--output", type=Path, required=True)
    lr.add_argument("--max-body", type=int, default=None)
    lr.add_argument("--external", metavar="CMD", default=None,
                    help="run an external learner command instead of the embedded one")
    lr.add_argument("--learner-flags", default=None, help="flags for the external learner (default --force-safety)")

    e = sub.add_parser("emit", help="turn a hypothesis into #heuristic directives")
    e.add_argument("-H", "--hypothesis", type=Path, required=True)
    e.add_argument("--mode", default="hard", choices=["hard", "soft", "custom"])
    e.add_argument("--weight", default=None)
    e.add_argument("--priority", default=None)
    e.add_argument("--modifier", default=None)
    e.add_argument("--task", type=Path, default=None, help="task file whose strict types are stripped")
    e.add_argument("-o", "--output", type=Path, required=True)

    b = sub.add_parser("bench", help="run the solver configurations over a corpus")
    b.add_argument("-c", "--config", type=Path, required=True)
    b.add_argument("-o", "--output-dir", type=Path, required=True)
    b.add_argument("--time-limit", type=float, default=None)
    b.add_argument("--memory-limit", default=None)
    b.add_argument("--workers", type=int, default=None)

    r = sub.add_parser("report", help="print the improvement table")
    r.add_argument("results", type=Path, help="results.csv or runs.csv")
    r.add_argument("-o", "--output", type=Path, default=None)

    pl = sub.add_parser("pipeline", help="all stages, materializing every intermediate file")
    pl.add_argument("-e", "--encoding", type=Path, required=True)
    pl.add_argument("-i", "--instances", type=Path, nargs="+", required=True)
    pl.add_argument("-m", "--models", type=Path, nargs="+", required=True)
    pl.add_argument("-o", "--output-dir", type=Path, required=True)
    pl.add_argument("--mode", default="soft", choices=["hard", "soft"])
    pl.add_argument("--external", metavar="CMD", default=None)
    pl.add_argument("--max-body", type=int, default=None)
    pl.add_argument("-c", "--bench-config", type=Path, default=None)
    pl.add_argument("--human", type=Path, default=None, help="hand-written heuristics file")
    return p


def _annotation(args) -> AnnotationMode:
    if args.mode == "custom":
        if args.weight is None or args.modifier is None:
            raise _UsageError("--mode custom needs --weight and --modifier")
        return AnnotationMode.custom(args.weight, args.modifier, args.priority)
    return AnnotationMode.named(args.mode)


def _dispatch(args) -> None:
    if args.command == "gen-task":
        gen_task(args.encoding, args.instances, args.models, args.output)
    elif args.command == "learn":
        flags = shlex.split(args.learner_flags) if args.learner_flags is not None else None
        learn(args.task, args.output, args.max_body, args.external, flags)
    elif args.command == "emit":
        emit(args.hypothesis, _annotation(args), args.output, args.task)
    elif args.command == "bench":
        cfg = load_config(args.config)
        cfg.limits = Limits(
            args.time_limit if args.time_limit is not None else cfg.limits.time,
            parse_memory(args.memory_limit) if args.memory_limit is not None else cfg.limits.memory,
            cfg.limits.grace,
        )
        if args.workers is not None:
            cfg.workers = args.workers
        rep = write_outputs(run_bench(cfg), args.output_dir, cfg.limits)
        sys.stdout.write(rep.table())
    elif args.command == "report":
        text = args.results.read_text()
        if text.startswith("instance,config,"):
            table = report(read_runs(text)).table()
        else:
            table = table_from_csv(text)
        if args.output:
            _write(args.output, table)
        sys.stdout.write(table)
    elif args.command == "pipeline":
        m = PipelineManifest(args.encoding, list(args.instances), list(args.models), args.output_dir,
                             "external" if args.external else "embedded", args.external, args.mode,
                             args.bench_config)
        run_pipeline(m, args.max_body, args.human)


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except _UsageError as exc:
        print(f"heulearn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TaskError, ParseError, UnsafeRuleError, LearnerError, BenchError, OSError, ValueError) as exc:
        print(f"heulearn {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())
