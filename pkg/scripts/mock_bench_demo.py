"""Benchmark the scripted mock corpus and compare against the frozen report.

    python3 scripts/mock_bench_demo.py [--out runs/mock]
"""

import argparse
import sys
from pathlib import Path

from heulearn.bench import load_config, run_bench, write_outputs

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "corpus"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs") / "mock")
    args = ap.parse_args()
    cfg = load_config(CORPUS / "bench.toml")
    cfg.solver[0] = sys.executable
    rep = write_outputs(run_bench(cfg), args.out, cfg.limits)
    print(rep.table(), end="")
    same = (args.out / "results.csv").read_text() == (CORPUS / "expected_results.csv").read_text()
    print(f"\nmatches expected_results.csv: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
