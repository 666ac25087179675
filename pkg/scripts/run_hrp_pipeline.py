"""Run the whole pipeline on the HRP fixture and benchmark the learned heuristics.

Uses the embedded learner unless ``--external`` names a learner command, and
the real solver (``clingo`` or ``python3 -m clingo``) unless ``--solver`` says
otherwise.  Everything lands in ``--out``.

    python3 scripts/run_hrp_pipeline.py [--out runs/hrp] [--time-limit 60]
"""

import argparse
import json
import shlex
import shutil
import sys
from pathlib import Path

from heulearn.cli import PipelineManifest, run_pipeline

ROOT = Path(__file__).resolve().parent.parent
HRP = ROOT / "tests" / "fixtures" / "hrp"


def default_solver() -> list[str]:
    if shutil.which("clingo"):
        return ["clingo"]
    return [sys.executable, "-m", "clingo"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT / "runs" / "hrp")
    ap.add_argument("--external", default=None, help="external learner command")
    ap.add_argument("--solver", default=None, help="solver command (default: clingo)")
    ap.add_argument("--time-limit", type=float, default=60)
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()

    ids = sorted(p.stem for p in (HRP / "instances").glob("*.lp"))
    inst = [HRP / "instances" / f"{i}.lp" for i in ids]
    models = [HRP / "instances" / f"{i}.model" for i in ids]
    solver = shlex.split(args.solver) if args.solver else default_solver()

    args.out.mkdir(parents=True, exist_ok=True)
    cfg = args.out / "bench.toml"
    cfg.write_text(
        # JSON strings and arrays are valid TOML
        f"solver = {json.dumps(solver)}\n"
        f"encoding = {json.dumps(str(HRP / 'encoding.lp'))}\n"
        f"instances = {json.dumps([str(p) for p in inst])}\n"
        f"time_limit = {args.time_limit}\nworkers = {args.workers}\n"
    )
    m = PipelineManifest(HRP / "encoding.lp", inst, models, args.out,
                         "external" if args.external else "embedded", args.external, "soft", cfg)
    run_pipeline(m)
    print((args.out / "hypothesis.lp").read_text())
    print((args.out / "results.txt").read_text(), end="")


if __name__ == "__main__":
    main()
