"""Learning-task synthesis: mode bias, strict-type background knowledge and examples.

Also reads and writes the ``.las`` task format (``#modeh``/``#modeb``/``#pos``).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .analysis import Classification, classify, defining_rules, instance_predicates_of
from .asp import (
    Atom,
    ChoiceHead,
    Literal,
    ParseError,
    Parser,
    PredicateSig,
    Program,
    Rule,
    UnsupportedConstructError,
    parse_atom,
    parse_program,
    var,
)

log = logging.getLogger(__name__)


class TaskError(ValueError):
    pass


# --------------------------------------------------------------------------- data model


@dataclass(frozen=True, order=True)
class Placeholder:
    kind: str  # "var" | "const"
    type: str

    def __str__(self) -> str:
        return f"{self.kind}({self.type})"


@dataclass(frozen=True)
class ModeDeclaration:
    kind: str  # "head" | "body"
    predicate: str
    placeholders: tuple[Placeholder, ...] = ()
    recall: int | None = None

    @property
    def arity(self) -> int:
        return len(self.placeholders)

    @property
    def signature(self) -> PredicateSig:
        return PredicateSig(self.predicate, self.arity)

    @property
    def types(self) -> tuple[str, ...]:
        return tuple(p.type for p in self.placeholders)

    def sort_key(self):
        return (0 if self.kind == "head" else 1, self.predicate, self.arity)

    def __str__(self) -> str:
        name = "modeh" if self.kind == "head" else "modeb"
        schema = self.predicate
        if self.placeholders:
            schema += f"({', '.join(map(str, self.placeholders))})"
        if self.recall is not None:
            return f"#{name}({self.recall}, {schema})."
        return f"#{name}({schema})."


def mode(kind: str, predicate: str, *types: str) -> ModeDeclaration:
    return ModeDeclaration(kind, predicate, tuple(Placeholder("var", t) for t in types))


@dataclass(frozen=True)
class StrictTypeRules:
    rules: tuple[Rule, ...] = ()

    @property
    def predicates(self) -> set[str]:
        """Names of the unary predicates defined here (the strict types)."""
        return {r.head.predicate for r in self.rules if isinstance(r.head, Atom) and r.head.arity == 1}

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)


@dataclass(frozen=True)
class Example:
    id: str
    inclusions: frozenset[Atom] = frozenset()
    exclusions: frozenset[Atom] = frozenset()
    context: Program = field(default_factory=Program)

    def __str__(self) -> str:
        inc = ", ".join(map(str, sorted(self.inclusions)))
        exc = ", ".join(map(str, sorted(self.exclusions)))
        ctx = " ".join(map(str, self.context))
        return f"#pos({self.id}, {{{inc}}}, {{{exc}}}, {{{ctx}}})."


@dataclass(frozen=True)
class LearningTask:
    background: Program
    mode_bias: tuple[ModeDeclaration, ...]
    examples: tuple[Example, ...] = ()

    @property
    def head_modes(self) -> list[ModeDeclaration]:
        return [m for m in self.mode_bias if m.kind == "head"]

    @property
    def body_modes(self) -> list[ModeDeclaration]:
        return [m for m in self.mode_bias if m.kind == "body"]

    @property
    def strict_types(self) -> StrictTypeRules:
        return StrictTypeRules(tuple(self.background.rules))

    def __str__(self) -> str:
        return serialize_task(self)


# --------------------------------------------------------------------------- mode bias

_ARG_SUFFIX = re.compile(r"^(?P<pred>.+)_arg(?P<i>[1-9][0-9]*)$")


def arg_type(predicate: str, i: int) -> str:
    """Type name of the i-th (1-based) argument of a non-unary predicate."""
    return f"{predicate}_arg{i}"


def _body_types(sig: PredicateSig) -> tuple[str, ...]:
    if sig.arity == 1:
        return (sig.name,)
    return tuple(arg_type(sig.name, i) for i in range(1, sig.arity + 1))


def _first_choice_context(encoding: Program, p: PredicateSig):
    for r in encoding.rules:
        if isinstance(r.head, ChoiceHead):
            for el in r.head.elements:
                if el.atom.signature == p:
                    return el.atom, list(r.body) + list(el.condition)
    return None


def derive_head_modes(encoding: Program, cls: Classification) -> tuple[list[ModeDeclaration], StrictTypeRules]:
    """One ``#modeh`` per choice-head predicate, plus the strict types it needs.

    Each head argument variable is typed from a positive context literal (rule
    body plus choice condition) binding it, preferring in this order:
    a unary instance-determined predicate (its name is the type); a unary
    choice-head predicate (reuse its type); a non-unary instance-determined
    predicate (``<pred>_argI`` projection type); a non-unary choice-head
    predicate (reuse the type of that argument).  Anything else falls back to
    projection types with a warning.
    """
    types: dict[PredicateSig, tuple[str, ...] | None] = {}
    in_progress: set[PredicateSig] = set()

    def resolve(p: PredicateSig) -> tuple[str, ...] | None:
        if p in types:
            return types[p]
        if p in in_progress:
            return None
        in_progress.add(p)
        found = _first_choice_context(encoding, p)
        if found is None:
            raise TaskError(f"{p} is not the head of a choice rule")
        result: list[str] | None = []
        head_atom, context = found
        positives = [b.atom for b in context if isinstance(b, Literal) and not b.negated]
        for pos, term in enumerate(head_atom.args, start=1):
            t = None
            if term.is_variable:
                t = _type_for_variable(term.name, positives, p, cls, resolve)
            if t is None:
                binder = next((a for a in positives if term in a.args), None)
                if binder is None:
                    log.warning("cannot type argument %d of choice head %s; predicate skipped", pos, p)
                    result = None
                    break
                t = arg_type(binder.predicate, binder.args.index(term) + 1)
                log.warning(
                    "context predicate %s of choice head %s is neither instance-determined nor a head-mode "
                    "predicate; using projection type %s",
                    binder.signature,
                    p,
                    t,
                )
            result.append(t)
        in_progress.discard(p)
        types[p] = tuple(result) if result is not None else None
        return types[p]

    modes = []
    for p in sorted(cls.choice_heads):
        ts = resolve(p)
        if ts is not None:
            modes.append(ModeDeclaration("head", p.name, tuple(Placeholder("var", t) for t in ts)))
    modes.sort(key=ModeDeclaration.sort_key)
    return modes, strict_type_rules(encoding, cls, modes)


def _type_for_variable(name, positives, head, cls, resolve) -> str | None:
    ranked: list[tuple[int, str]] = []
    for a in positives:
        if a.signature == head:
            continue
        for j, t in enumerate(a.args):
            if not (t.is_variable and t.name == name):
                continue
            sig = a.signature
            if sig in cls.instance_determined:
                ranked.append((0 if sig.arity == 1 else 2, sig.name if sig.arity == 1 else arg_type(sig.name, j + 1)))
            elif sig in cls.choice_heads:
                other = resolve(sig)
                if other is not None:
                    ranked.append((1 if sig.arity == 1 else 3, other[j]))
    if not ranked:
        return None
    return min(ranked, key=lambda x: x[0])[1]


def derive_body_modes(
    encoding: Program, cls: Classification, head_modes: Sequence[ModeDeclaration] = ()
) -> list[ModeDeclaration]:
    """One ``#modeb`` per encoding predicate that is not a choice head."""
    heads = {m.signature for m in head_modes} | set(cls.choice_heads)
    out = [
        ModeDeclaration("body", p.name, tuple(Placeholder("var", t) for t in _body_types(p)))
        for p in sorted(encoding.predicates())
        if p not in heads
    ]
    out.sort(key=ModeDeclaration.sort_key)
    return out


def strict_type_rules(
    encoding: Program, cls: Classification, modes: Iterable[ModeDeclaration]
) -> StrictTypeRules:
    """Background rules defining every type referenced by ``modes``.

    Instance-determined types get their defining encoding rules (transitively,
    in encoding order); ``<pred>_argI`` types get projection rules.  Types that
    are instance predicates or non-deterministic unary predicates typing only
    themselves need no rules.
    """
    known = set(encoding.predicates()) | set(cls.instance_predicates)
    unary = {p.name: p for p in known if p.arity == 1}
    by_name: dict[str, list[PredicateSig]] = {}
    for p in known:
        by_name.setdefault(p.name, []).append(p)

    needed: set[PredicateSig] = set()
    projections: dict[str, Rule] = {}
    for t in sorted({ph.type for m in modes for ph in m.placeholders}):
        if t in unary:
            if unary[t] in cls.instance_determined:
                needed.add(unary[t])
            continue
        m = _ARG_SUFFIX.match(t)
        if not m:
            continue
        i = int(m["i"])
        base = next((p for p in by_name.get(m["pred"], []) if p.arity >= i), None)
        if base is None:
            continue
        xs = tuple(var(f"X{k}") for k in range(1, base.arity + 1))
        projections[t] = Rule(Atom(t, (xs[i - 1],)), (Literal(Atom(base.name, xs)),))
        if base in cls.instance_determined:
            needed.add(base)

    # transitive closure over defining rules
    frontier = list(needed)
    while frontier:
        p = frontier.pop()
        for r in defining_rules(encoding, p):
            for b in r.body:
                if isinstance(b, Literal) and b.atom.signature not in needed:
                    if defining_rules(encoding, b.atom.signature):
                        needed.add(b.atom.signature)
                        frontier.append(b.atom.signature)

    copied = [
        r
        for r in encoding.rules
        if isinstance(r.head, ChoiceHead) is False
        and r.weak is None
        and isinstance(r.head, Atom)
        and r.head.signature in needed
    ]
    return StrictTypeRules(tuple(copied) + tuple(projections[t] for t in sorted(projections)))


# --------------------------------------------------------------------------- examples


def parse_answer_set(text: str) -> frozenset[Atom]:
    """Read an answer set: facts one per line, or a solver witness line.

    A solver transcript is accepted too; the witness following the last
    ``Answer:`` line is used.
    """
    lines = text.splitlines()
    answers = [i for i, line in enumerate(lines) if line.startswith("Answer:")]
    if answers:
        k = answers[-1] + 1
        witness = lines[k] if k < len(lines) else ""
        return frozenset(parse_atom(tok) for tok in witness.split())
    if re.search(r"\.\s*(%.*)?$", text.strip(), flags=re.M):
        prog = parse_program(text)
        return frozenset(r.head for r in prog.rules if r.kind == "fact")
    return frozenset(parse_atom(tok) for tok in text.split())


def build_examples(
    instances: Sequence[tuple[str, Program]],
    answer_sets: Sequence[tuple[str, Iterable[Atom]]],
    head_modes: Sequence[ModeDeclaration],
    known_predicates: Iterable[PredicateSig] | None = None,
) -> list[Example]:
    """One positive example per instance; inclusions are the answer set filtered to head-mode predicates."""
    if [i for i, _ in instances] != [i for i, _ in answer_sets]:
        raise TaskError(
            f"instance ids {[i for i, _ in instances]} do not match answer-set ids {[i for i, _ in answer_sets]}"
        )
    heads = {m.signature for m in head_modes if m.kind == "head"}
    known = set(known_predicates) if known_predicates is not None else None
    out = []
    for (iid, inst), (_, atoms) in zip(instances, answer_sets):
        atoms = frozenset(atoms)
        if known is not None:
            inst_preds = {a.signature for a in inst.facts()}
            strange = sorted({a.signature for a in atoms} - known - inst_preds)
            if strange:
                log.warning("answer set of %s contains predicates absent from the encoding: %s", iid,
                            ", ".join(map(str, strange)))
        context = Program(tuple(r for r in inst.rules if r.kind == "fact"))
        out.append(Example(iid, frozenset(a for a in atoms if a.signature in heads), frozenset(), context))
    return out


# --------------------------------------------------------------------------- assembly / IO


def _self_typed(t: str, modes: Sequence[ModeDeclaration]) -> bool:
    users = [m for m in modes if t in m.types]
    return bool(users) and all(m.predicate == t and m.types == (t,) for m in users)


def check_types(
    background: Program, modes: Sequence[ModeDeclaration], instance_predicates: Iterable[PredicateSig] = ()
) -> list[str]:
    """Type names referenced by ``modes`` that nothing defines."""
    defined = {r.head.predicate for r in background.rules if isinstance(r.head, Atom) and r.head.arity == 1}
    defined |= {p.name for p in instance_predicates if p.arity == 1}
    return sorted(
        {t for m in modes for t in m.types if t not in defined and not _self_typed(t, modes)}
    )


def assemble_task(
    background: Program | StrictTypeRules,
    modes: Sequence[ModeDeclaration],
    examples: Sequence[Example] = (),
    instance_predicates: Iterable[PredicateSig] | None = None,
) -> LearningTask:
    """Bundle the components into a task, checking that every type resolves.

    Instance predicates default to the fact predicates of the example contexts.
    """
    if isinstance(background, StrictTypeRules):
        background = Program(background.rules)
    if instance_predicates is None:
        instance_predicates = instance_predicates_of(e.context for e in examples)
    modes = sorted(modes, key=ModeDeclaration.sort_key)
    missing = check_types(background, modes, instance_predicates)
    if missing:
        raise TaskError(f"types referenced but undefined in background: {', '.join(missing)}")
    return LearningTask(background, tuple(modes), tuple(examples))


def serialize_task(task: LearningTask) -> str:
    parts = []
    if len(task.background):
        parts.append("\n".join(map(str, task.background)))
    modes = "\n".join(str(m) for m in sorted(task.mode_bias, key=ModeDeclaration.sort_key))
    if modes:
        parts.append(modes)
    if task.examples:
        parts.append("\n".join(map(str, task.examples)))
    return "\n\n".join(parts) + "\n"


def generate_task(
    encoding: Program,
    instances: Sequence[tuple[str, Program]],
    answer_sets: Sequence[tuple[str, Iterable[Atom]]],
) -> LearningTask:
    """Full synthesis from an encoding and solved instances."""
    inst_preds = instance_predicates_of(p for _, p in instances)
    cls = classify(encoding, inst_preds)
    head_modes, _ = derive_head_modes(encoding, cls)
    body_modes = derive_body_modes(encoding, cls, head_modes)
    modes = head_modes + body_modes
    background = strict_type_rules(encoding, cls, modes)
    examples = build_examples(instances, answer_sets, head_modes, known_predicates=encoding.predicates())
    return assemble_task(background, modes, examples, inst_preds | set(cls.instance_predicates))


class _TaskParser(Parser):
    def parse_directive(self):
        t = self.tok
        if t.text in ("#modeh", "#modeb"):
            self.advance()
            return self._mode("head" if t.text == "#modeh" else "body")
        if t.text == "#pos":
            self.advance()
            return self._example()
        if t.text == "#neg":
            raise UnsupportedConstructError("negative examples are not supported", t.span)
        return super().parse_directive()

    def _mode(self, kind: str) -> ModeDeclaration:
        self.expect("(")
        recall = None
        if self.tok.kind == "number":
            recall = int(self.advance().text)
            self.expect(",")
        if self.tok.kind != "ident":
            self.fail("predicate name")
        name = self.advance().text
        phs = []
        if self.at("("):
            self.advance()
            while True:
                k = self.advance()
                if k.text not in ("var", "const"):
                    raise ParseError(f"unexpected {k.text!r}", k.span, "var(...) or const(...)")
                self.expect("(")
                phs.append(Placeholder(k.text, self.advance().text))
                self.expect(")")
                if self.at(","):
                    self.advance()
                    continue
                break
            self.expect(")")
        if self.at(","):
            # mode options such as (positive) are accepted and dropped
            self._collect_until(")")
        self.expect(")")
        self.expect(".")
        return ModeDeclaration(kind, name, tuple(phs), recall)

    def _atom_set(self) -> frozenset[Atom]:
        self.expect("{")
        atoms = []
        while not self.at("}"):
            atoms.append(self.parse_atom())
            if self.at(","):
                self.advance()
        self.expect("}")
        return frozenset(atoms)

    def _example(self) -> Example:
        self.expect("(")
        eid = self.advance().text
        self.expect(",")
        inc = self._atom_set()
        self.expect(",")
        exc = self._atom_set()
        ctx: list = []
        if self.at(","):
            self.advance()
            self.expect("{")
            while not self.at("}"):
                ctx.append(self.parse_statement())
            self.expect("}")
        self.expect(")")
        self.expect(".")
        return Example(eid, inc, exc, Program(tuple(ctx)))


def parse_task(text: str) -> LearningTask:
    """Read a ``.las`` task file."""
    p = _TaskParser(text)
    background, modes, examples = [], [], []
    while p.tok.kind != "eof":
        s = p.parse_statement()
        if isinstance(s, ModeDeclaration):
            modes.append(s)
        elif isinstance(s, Example):
            examples.append(s)
        else:
            background.append(s)
    return LearningTask(Program(tuple(background)), tuple(modes), tuple(examples))
