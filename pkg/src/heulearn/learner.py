"""Hypothesis learning.

The embedded learner enumerates the rule space of a mode bias, decides
coverage through least models of definite programs, and picks a small
covering hypothesis by greedy set cover followed by pruning.  An adapter
runs an external ILP system on a serialized task instead.
"""

from __future__ import annotations

import itertools
import logging
import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .asp import (
    Atom,
    Directive,
    Literal,
    ParseError,
    PredicateSig,
    Program,
    Rule,
    Term,
    UnsafeRuleError,
    _index,
    join,
    parse_rule,
    unsafe_variables,
    var,
)
from .taskgen import Example, LearningTask, ModeDeclaration, StrictTypeRules

log = logging.getLogger(__name__)


class NegationError(ValueError):
    """Raised when a least model is requested for a program that is not definite."""


class LearnerError(RuntimeError):
    pass


class LearnerConfigError(LearnerError):
    pass


# --------------------------------------------------------------------------- hypothesis


def rule_cost(rule: Rule) -> int:
    return len(rule.head_atoms()) + len(rule.body)


@dataclass(frozen=True)
class Hypothesis:
    rules: tuple[Rule, ...] = ()
    provenance: str = "embedded"

    @property
    def cost(self) -> int:
        return sum(rule_cost(r) for r in self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __str__(self) -> str:
        return "\n".join(map(str, self.rules))


@dataclass(frozen=True)
class CoverageReport:
    covered: dict[str, bool] = field(default_factory=dict)

    @property
    def uncovered(self) -> list[str]:
        return [k for k, v in self.covered.items() if not v]

    @property
    def all_covered(self) -> bool:
        return all(self.covered.values())


# --------------------------------------------------------------------------- rule space


@dataclass(frozen=True)
class RuleSpace:
    rules: tuple[Rule, ...] = ()

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def texts(self) -> list[str]:
        return [str(r) for r in self.rules]


def _canonical(head: Atom, body: Iterable[Atom]) -> Rule:
    """Canonical form up to renaming of body-only variables.

    Body literals are ordered by the first head variable they mention
    (body-only variables sort after head ones), then by predicate and
    arguments; body-only variables are named by first occurrence.  The
    smallest rendering over all namings of body-only variables is kept.
    """
    body = list(body)
    head_vars = [t.name for t in head.args if t.is_variable]
    local = sorted({t.name for a in body for t in a.args if t.is_variable} - set(head_vars))
    k = len(head_vars)
    best = None
    for perm in itertools.permutations(range(k, k + len(local))):
        names = {v: i for i, v in enumerate(head_vars)}
        names.update({v: perm[j] for j, v in enumerate(local)})
        key_body = sorted(
            body,
            key=lambda a: (
                min((names[t.name] for t in a.args if t.is_variable), default=-1),
                a.predicate,
                tuple((names[t.name], "") if t.is_variable else (-1, t.name) for t in a.args),
            ),
        )
        # rename by first occurrence in the ordered rule
        order: dict[str, Term] = {}
        for a in [head] + key_body:
            for t in a.args:
                if t.is_variable and t.name not in order:
                    order[t.name] = var(f"V{len(order)}")
        r = Rule(head.substitute(order), tuple(Literal(a.substitute(order)) for a in key_body))
        text = str(r)
        if best is None or text < best[0]:
            best = (text, r)
    return best[1]


def _typing_predicates(strict_types: StrictTypeRules | Program | Iterable[Rule]) -> set[str]:
    return {r.head.predicate for r in strict_types if isinstance(r, Rule) and isinstance(r.head, Atom)
            and r.head.arity == 1}


def enumerate_rule_space(
    bias: Sequence[ModeDeclaration],
    strict_types: StrictTypeRules | Program | Iterable[Rule] = (),
    max_body: int | None = None,
) -> RuleSpace:
    """All safe, type-consistent, connected rules of the mode bias.

    Each rule has one ``#modeh`` head with distinct variables and at most
    ``max_body`` body literals (default: head arity + 1).  A body literal is an
    instance of a ``#modeb`` schema whose arguments are existing variables of
    the placeholder's type or fresh ones, or a strict-type atom ``t(V)`` for a
    head variable ``V`` of type ``t``.  Every body literal must be linked to
    the head through shared variables.  Rules are deduplicated up to variable
    renaming.
    """
    heads = sorted((m for m in bias if m.kind == "head"), key=ModeDeclaration.sort_key)
    bodies = sorted((m for m in bias if m.kind == "body"), key=ModeDeclaration.sort_key)
    for m in bodies:
        if any(p.kind != "var" for p in m.placeholders):
            log.warning("const placeholders are not supported; ignoring %s", m)
    bodies = [m for m in bodies if all(p.kind == "var" for p in m.placeholders)]
    typing = _typing_predicates(strict_types)
    body_types = {t for m in bodies for t in m.types}

    out: list[Rule] = []
    seen: set[str] = set()
    for h in heads:
        if any(p.kind != "var" for p in h.placeholders):
            log.warning("const placeholders are not supported; ignoring %s", h)
            continue
        untypeable = [t for t in h.types if t not in body_types and t not in typing]
        if untypeable:
            log.warning("head %s has untypeable variables (types %s); it contributes no rules", h,
                        ", ".join(untypeable))
            continue
        limit = max_body if max_body is not None else h.arity + 1
        head = Atom(h.predicate, tuple(var(f"V{i}") for i in range(h.arity)))
        head_types = {f"V{i}": t for i, t in enumerate(h.types)}
        for body in _bodies(head_types, bodies, typing, limit):
            if not {f"V{i}" for i in range(h.arity)} <= {t.name for a in body for t in a.args}:
                continue
            r = _canonical(head, body)
            text = str(r)
            if text not in seen:
                seen.add(text)
                out.append(r)
    return RuleSpace(tuple(out))


def _bodies(head_types: dict[str, str], bodies, typing, limit):
    """Connected literal sets (as frozensets of atoms) of size 1..limit."""
    results: set[frozenset[Atom]] = set()

    def candidates(types: dict[str, str], n_fresh: int):
        lits = []
        for v, t in head_types.items():
            if t in typing:
                lits.append((Atom(t, (var(v),)), {}))
        for m in bodies:
            options = []
            for t in m.types:
                existing = [v for v, vt in types.items() if vt == t]
                options.append(existing + [None])
            for choice in itertools.product(*options):
                fresh: dict[str, str] = {}
                args = []
                # None means a new variable; repeated None positions get distinct fresh variables
                for t, c in zip(m.types, choice):
                    if c is None:
                        name = f"F{n_fresh + len(fresh)}"
                        fresh[name] = t
                        args.append(var(name))
                    else:
                        args.append(var(c))
                if m.arity and {a.name for a in args} <= fresh.keys():
                    continue  # not linked to any existing variable
                lits.append((Atom(m.predicate, tuple(args)), fresh))
        return lits

    def rec(body: frozenset[Atom], types: dict[str, str], n_fresh: int):
        if len(body) >= limit:
            return
        for lit, fresh in candidates(types, n_fresh):
            if lit in body:
                continue
            nb = body | {lit}
            if nb in results:
                continue
            results.add(nb)
            nt = dict(types)
            nt.update(fresh)
            rec(nb, nt, n_fresh + len(fresh))

    rec(frozenset(), dict(head_types), 0)
    return sorted(results, key=lambda b: (len(b), sorted(map(str, b))))


# --------------------------------------------------------------------------- least model


def _definite_rules(program: Iterable) -> list[Rule]:
    rules = []
    for s in program:
        if isinstance(s, Directive):
            continue
        if not isinstance(s, Rule) or not isinstance(s.head, Atom) or s.weak is not None:
            kind = s.kind if isinstance(s, Rule) else type(s).__name__
            raise NegationError(f"least_model needs a definite program; got {kind} statement '{s}'")
        if any(isinstance(b, Literal) and b.negated for b in s.body):
            raise NegationError(f"default negation in '{s}'")
        if unsafe_variables(s):
            raise UnsafeRuleError(f"unsafe rule '{s}'")
        rules.append(s)
    return rules


def least_model(program: Iterable) -> frozenset[Atom]:
    """Least Herbrand model of a definite program by semi-naive forward chaining."""
    rules = _definite_rules(program)
    model: set[Atom] = set()
    delta: set[Atom] = set()
    recursive = []
    for r in rules:
        positives = [b for b in r.body if isinstance(b, Literal)]
        if positives:
            recursive.append((r, positives))
            continue
        for s in join(list(r.body), []):
            delta.add(r.head.substitute(s))

    idx_all: dict[PredicateSig, list[Atom]] = {}
    while delta:
        idx_old = {k: list(v) for k, v in idx_all.items()}
        model |= delta
        idx_delta = _index(delta)
        for a in sorted(delta):
            idx_all.setdefault(a.signature, []).append(a)
        new: set[Atom] = set()
        for r, positives in recursive:
            n = len(positives)
            for i in range(n):
                if positives[i].atom.signature not in idx_delta:
                    continue
                sources = [idx_old] * i + [idx_delta] + [idx_all] * (n - i - 1)
                for s in join(list(r.body), sources):
                    h = r.head.substitute(s)
                    if h not in model:
                        new.add(h)
        delta = new
    return frozenset(model)


def covers(background: Program | Iterable[Rule], h: Hypothesis | Iterable[Rule], e: Example) -> bool:
    """Does ``B ∪ H ∪ context`` have an answer set with all inclusions and no exclusions?

    For a definite program the unique answer set is the least model.
    """
    m = least_model(list(background) + list(h) + list(e.context))
    return e.inclusions <= m and not (e.exclusions & m)


# --------------------------------------------------------------------------- search


def _derived(rule: Rule, base: frozenset[Atom], background: list[Rule], base_program: list) -> frozenset[Atom]:
    """Atoms in least_model(B ∪ ctx ∪ {rule}) beyond the base model."""
    hp = rule.head.signature
    feeds_back = any(
        isinstance(b, Literal) and b.atom.signature == hp for r in background + [rule] for b in r.body
    )
    if feeds_back:
        return least_model(base_program + [rule]) - base
    idx = _index(base)
    positives = [b for b in rule.body if isinstance(b, Literal)]
    return frozenset(rule.head.substitute(s) for s in join(list(rule.body), [idx] * len(positives))) - base


def search_hypothesis(task: LearningTask, max_body: int | None = None) -> tuple[Hypothesis, CoverageReport]:
    """Greedy covering hypothesis for ``task``.

    Obligations are the (example, inclusion) pairs not already entailed by the
    background and context.  For each head predicate, rules are picked by
    newly covered obligations per unit cost (ties: lower cost, then rule
    text); rules that would derive an exclusion are never candidates.  Rules
    whose removal keeps every example covered are then pruned.
    """
    background = list(task.background)
    examples = list(task.examples)
    if not examples:
        return Hypothesis(()), CoverageReport({})
    space = enumerate_rule_space(task.mode_bias, task.strict_types, max_body)

    bases = {}
    obligations: dict[PredicateSig, set[tuple[str, Atom]]] = {}
    for e in examples:
        prog = background + list(e.context)
        base = least_model(prog)
        bases[e.id] = (base, prog)
        for a in e.inclusions - base:
            obligations.setdefault(a.signature, set()).add((e.id, a))

    gains: dict[str, tuple[Rule, set]] = {}
    for r in space:
        got = set()
        bad = False
        for e in examples:
            base, prog = bases[e.id]
            d = _derived(r, base, background, prog)
            if d & e.exclusions:
                bad = True
                break
            got |= {(e.id, a) for a in d & e.inclusions}
        if not bad:
            gains[str(r)] = (r, got)

    chosen: list[Rule] = []
    for p in sorted(obligations):
        todo = set(obligations[p])
        cands = sorted((t, r, g & todo) for t, (r, g) in gains.items() if r.head.signature == p)
        while todo:
            best = None
            for text, r, g in cands:
                new = len(g & todo)
                if not new:
                    continue
                key = (-new / rule_cost(r), rule_cost(r), text)
                if best is None or key < best[0]:
                    best = (key, r, g)
            if best is None:
                break
            chosen.append(best[1])
            todo -= best[2]

    def report(rules) -> CoverageReport:
        return CoverageReport({e.id: covers(background, rules, e) for e in examples})

    current = report(chosen)
    for r in sorted(chosen, key=lambda r: (-rule_cost(r), str(r)), reverse=False):
        trial = [x for x in chosen if x is not r]
        if report(trial).covered == current.covered:
            chosen = trial
    chosen.sort(key=lambda r: (r.head.predicate, str(r)))
    hyp = Hypothesis(tuple(chosen), "embedded")
    rep = report(chosen)
    if not rep.all_covered:
        log.warning("examples not coverable within the rule space: %s", ", ".join(rep.uncovered))
    return hyp, rep


# --------------------------------------------------------------------------- external learner


@dataclass
class ExternalLearnerConfig:
    executable: str = "FastLAS"
    flags: list[str] = field(default_factory=lambda: ["--force-safety"])
    timeout: float | None = None


def parse_hypothesis(text: str, provenance: str = "external") -> Hypothesis:
    """One rule per line; blank lines and ``%`` comments are skipped."""
    rules = []
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        try:
            r = parse_rule(s)
        except ParseError as exc:
            raise LearnerError(f"unparseable hypothesis line {n}: {s!r} ({exc})") from exc
        if not isinstance(r, Rule) or not isinstance(r.head, Atom):
            raise LearnerError(f"hypothesis line {n} is not a definite rule: {s!r}")
        rules.append(r)
    return Hypothesis(tuple(rules), provenance)


def run_external_learner(task_file: str | Path, config: ExternalLearnerConfig | None = None) -> Hypothesis:
    """Run an external learner on ``task_file`` and read the rules it prints."""
    config = config or ExternalLearnerConfig()
    exe = shutil.which(config.executable)
    if exe is None:
        raise LearnerConfigError(f"learner executable not found: {config.executable!r}")
    if not Path(task_file).exists():
        raise LearnerConfigError(f"task file not found: {task_file}")
    try:
        proc = subprocess.run(
            [exe, *config.flags, str(task_file)], capture_output=True, text=True, timeout=config.timeout
        )
    except subprocess.TimeoutExpired as exc:
        raise LearnerError(f"learner timed out after {config.timeout}s") from exc
    if proc.returncode != 0:
        raise LearnerError(
            f"learner exited with status {proc.returncode}\nstdout:\n{proc.stdout}\nstderr:\n{proc.stderr}"
        )
    if proc.stderr.strip():
        log.info("learner diagnostics:\n%s", proc.stderr.strip())
    return parse_hypothesis(proc.stdout, "external")
