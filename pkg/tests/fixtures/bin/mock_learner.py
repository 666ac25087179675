#!/usr/bin/env python3
"""Stand-in for an external ILP learner.

Reads a .las task and prints one rule per head mode whose predicate occurs in
some example's inclusions.  Each head variable is typed by its strict type;
when all head types are projections of one predicate, that predicate is used
instead and the first projection atom is kept too, the way a real learner's
output still carries type atoms before post-processing.

Exits 3 unless called with --force-safety; exits 4 on a task containing
``% mock: fail``.
"""

import re
import sys


def main(argv):
    flags = [a for a in argv if a.startswith("--")]
    files = [a for a in argv if not a.startswith("--")]
    if "--force-safety" not in flags:
        print("unsafe rules would be allowed; refusing", file=sys.stderr)
        return 3
    text = open(files[-1]).read()
    if "% mock: fail" in text:
        print("learner failure requested by task", file=sys.stderr)
        return 4
    heads = re.findall(r"^#modeh\((\w+)\((.*)\)\)\.$", text, flags=re.M)
    included = set()
    for inc in re.findall(r"#pos\(\w+, \{([^}]*)\}", text):
        included |= set(re.findall(r"(\w+)\(", inc))
    print("% learned by mock_learner")
    for pred, args in heads:
        if pred not in included:
            continue
        types = re.findall(r"var\((\w+)\)", args)
        vs = [f"V{i}" for i in range(len(types))]
        bases = {re.sub(r"_arg\d+$", "", t) for t in types}
        projections = all(re.search(r"_arg\d+$", t) for t in types)
        if projections and len(bases) == 1 and len(types) > 1:
            base = bases.pop()
            body = [f"{base}({','.join(vs)})", f"{types[0]}(V0)"]
        else:
            body = [f"{t}({v})" for t, v in zip(types, vs)]
        print(f"{pred}({','.join(vs)}) :- {', '.join(body)}.")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
