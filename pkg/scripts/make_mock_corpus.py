"""Write the scripted mock-solver corpus used by the harness tests.

Thirty-two instances: thirty are solved by at least one configuration and two
by none.  Against plain, the learned (soft) column improves twenty instances
(three of them only solvable with the heuristic) and deteriorates six (two
only solvable without it); four are ties.

    python3 scripts/make_mock_corpus.py [--out tests/fixtures/corpus]
"""

import argparse
import random
from pathlib import Path

# (plain, soft) per instance; None = no answer within the limit
SOFT_PLAN = (
    [(200, 150), (310, 254), (1000, 900), (48, 47), (75, 60), (120, 100), (90, 45), (66, 55),
     (500, 499), (1234, 1000), (10, 9), (400, 250), (88, 80), (64, 32), (150, 149), (303, 300), (77, 70)]
    + [(None, 500), (None, 42), (None, 1300)]
    + [(100, 120), (50, 51), (999, 1001), (30, 45)]
    + [(700, None), (33, None)]
    + [(80, 80), (140, 140), (5, 5), (0, 0)]
    + [(None, None), (None, None)]
)
OTHERS = ("learned-hard", "built-in", "human-made")


def behaviour(rng: random.Random, value):
    if value is None:
        return rng.choice(["none", "limit", "memory"])
    return rng.choice(["optimum", "limit"])


def trajectory(rng: random.Random, value: int) -> list[int]:
    steps = [value + rng.randint(1, 40) for _ in range(rng.randint(0, 2))]
    return sorted(steps, reverse=True) + [value]


def line(rng, config, value):
    vals = trajectory(rng, value) if value is not None else []
    return f"% mock {config}: {' '.join(map(str, vals + [behaviour(rng, value)]))}"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests/fixtures/corpus")
    args = ap.parse_args()
    rng = random.Random(20240501)
    inst = args.out / "instances"
    inst.mkdir(parents=True, exist_ok=True)
    for k, (plain, soft) in enumerate(SOFT_PLAN, 1):
        lines = [f"% scripted instance {k}", line(rng, "plain", plain), line(rng, "learned-soft", soft)]
        for config in OTHERS:
            both_none = plain is None and soft is None
            v = None if both_none or rng.random() < 0.15 else max(0, (plain or soft) + rng.randint(-30, 30))
            lines.append(line(rng, config, v))
        lines.append(f"item({k}).")
        (inst / f"i{k:02d}.lp").write_text("\n".join(lines) + "\n")
    (args.out / "encoding.lp").write_text("{ pick(X) } :- item(X).\n")
    (args.out / "hard.heu").write_text("#heuristic pick(X) : item(X). [1,true]\n")
    (args.out / "soft.heu").write_text("#heuristic pick(X) : item(X). [2,factor]\n")
    (args.out / "human.heu").write_text("#heuristic pick(X) : item(X). [3,level]\n")
    (args.out / "bench.toml").write_text(
        'solver = ["python3", "../bin/mock_solver.py"]\n'
        'encoding = "encoding.lp"\n'
        'corpus = "instances"\n'
        "time_limit = 20\n"
        'memory_limit = "2GiB"\n'
        "workers = 8\n\n"
        "[heuristics]\n"
        'hard = "hard.heu"\n'
        'soft = "soft.heu"\n'
        'human = "human.heu"\n'
    )
    print(f"wrote {len(SOFT_PLAN)} instances to {inst}")


if __name__ == "__main__":
    main()
