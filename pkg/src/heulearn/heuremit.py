"""From learned rules to ``#heuristic`` directives."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from .asp import MODIFIERS, Atom, HeuristicDirective, Literal, Rule, UnsafeRuleError, unsafe_variables
from .learner import Hypothesis
from .taskgen import StrictTypeRules

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnotationMode:
    name: str
    weight: str
    priority: str | None
    modifier: str

    def __post_init__(self):
        if self.modifier not in MODIFIERS:
            raise ValueError(f"unknown heuristic modifier {self.modifier!r}")

    @classmethod
    def custom(cls, weight: int | str, modifier: str, priority: int | str | None = None) -> "AnnotationMode":
        return cls("custom", str(weight), None if priority is None else str(priority), modifier)

    @classmethod
    def named(cls, name: str) -> "AnnotationMode":
        try:
            return BUILTIN_MODES[name]
        except KeyError:
            raise ValueError(f"unknown annotation mode {name!r}; expected one of {sorted(BUILTIN_MODES)}") from None


HARD = AnnotationMode("hard", "1", None, "true")
SOFT = AnnotationMode("soft", "2", None, "factor")
BUILTIN_MODES = {"hard": HARD, "soft": SOFT}


def _strip_order(lits: list[Literal]) -> list[Literal]:
    # projection types are the most redundant; try them first, right to left
    return sorted(reversed(lits), key=lambda b: "_arg" not in b.atom.predicate)


def postprocess(h: Hypothesis | Iterable[Rule], strict_types: StrictTypeRules | Iterable[str]) -> Hypothesis:
    """Drop strict-type atoms that other body literals already make redundant.

    A body atom over a strict-type predicate is removed when each of its
    variables also occurs in another remaining positive body literal, so the
    rule stays safe.  Heads and other body literals are never touched.
    """
    if isinstance(strict_types, StrictTypeRules):
        typing = strict_types.predicates
    else:
        typing = set(strict_types)
    provenance = h.provenance if isinstance(h, Hypothesis) else "embedded"
    out = []
    for r in h:
        if unsafe_variables(r):
            raise UnsafeRuleError(f"learned rule is unsafe: '{r}'")
        body = list(r.body)
        candidates = [b for b in body if isinstance(b, Literal) and not b.negated and b.atom.predicate in typing]
        for lit in _strip_order(candidates):
            a = lit.atom
            i = body.index(lit)
            others = body[:i] + body[i + 1:]
            bound = {v for b in others if isinstance(b, Literal) and not b.negated for v in b.atom.variables()}
            if a.variables() <= bound:
                trial = Rule(r.head, tuple(others))
                if not unsafe_variables(trial):
                    body = others
        if len(body) != len(r.body):
            log.debug("stripped %d strict-type atom(s) from '%s'", len(r.body) - len(body), r)
        out.append(Rule(r.head, tuple(body)))
    return Hypothesis(tuple(out), provenance)


def rule_to_directive(r: Rule, mode: AnnotationMode = HARD) -> HeuristicDirective:
    if not isinstance(r.head, Atom) or r.weak is not None:
        raise ValueError(f"only rules with a single head atom can become heuristics: '{r}'")
    return HeuristicDirective(r.head, tuple(r.body), mode.weight, mode.priority, mode.modifier)


def emit_heuristics(h: Hypothesis | Iterable[Rule], mode: AnnotationMode = HARD) -> str:
    """One directive per rule, in rule order, newline-terminated."""
    lines = [str(rule_to_directive(r, mode)) for r in h]
    if not lines:
        log.warning("empty hypothesis; no heuristic directives emitted")
        return ""
    return "\n".join(lines) + "\n"
