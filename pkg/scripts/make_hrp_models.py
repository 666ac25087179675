"""Solve the HRP fixture instances to optimality and write their answer sets.

Needs the ``clingo`` Python package.  Each ``<id>.lp`` under the instance
directory gets an ``<id>.model`` file next to it: one fact per line, sorted.

    python3 scripts/make_hrp_models.py [--fixture tests/fixtures/hrp]
"""

import argparse
from pathlib import Path

import clingo


def optimal_model(encoding: Path, instance: Path) -> tuple[list[str], list[int]]:
    ctl = clingo.Control(["--opt-mode=opt", "--parallel-mode=1", "--warn=none"])
    ctl.load(str(encoding))
    ctl.load(str(instance))
    ctl.ground([("base", [])])
    best: dict = {}

    def on_model(m: clingo.Model) -> None:
        best["atoms"] = sorted(str(s) for s in m.symbols(atoms=True))
        best["cost"] = list(m.cost)

    result = ctl.solve(on_model=on_model)
    if not result.satisfiable or not result.exhausted:
        raise SystemExit(f"{instance.name}: no proven optimum ({result})")
    return best["atoms"], best["cost"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixture", type=Path, default=Path(__file__).resolve().parent.parent / "tests/fixtures/hrp")
    args = ap.parse_args()
    encoding = args.fixture / "encoding.lp"
    for inst in sorted((args.fixture / "instances").glob("*.lp")):
        atoms, cost = optimal_model(encoding, inst)
        inst.with_suffix(".model").write_text("".join(f"{a}.\n" for a in atoms))
        changes = [a for a in atoms if a.startswith(("reuse_", "delete_"))]
        print(f"{inst.stem}: cost {cost}, {len(atoms)} atoms; " + " ".join(a for a in changes if a.startswith("delete_")))


if __name__ == "__main__":
    main()
