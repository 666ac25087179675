"""Predicate dependency graph and instance-determinedness classification."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

from .asp import ChoiceHead, Literal, PredicateSig, Program, Rule

log = logging.getLogger(__name__)

__all__ = [
    "PredicateSig",
    "Edge",
    "DependencyGraph",
    "Classification",
    "build_dependency_graph",
    "classify",
    "defining_rules",
    "instance_predicates_of",
]


@dataclass(frozen=True, order=True)
class Edge:
    head: PredicateSig
    body: PredicateSig
    via_choice: bool = False


@dataclass(frozen=True)
class DependencyGraph:
    nodes: frozenset[PredicateSig] = frozenset()
    edges: frozenset[Edge] = frozenset()

    def successors(self, p: PredicateSig) -> set[PredicateSig]:
        return {e.body for e in self.edges if e.head == p}

    def pairs(self) -> set[tuple[PredicateSig, PredicateSig]]:
        return {(e.head, e.body) for e in self.edges}


def _literal_sigs(elems) -> list[PredicateSig]:
    return [b.atom.signature for b in elems if isinstance(b, Literal)]


def build_dependency_graph(encoding: Program) -> DependencyGraph:
    """One edge per occurrence of a body (or choice-condition) predicate under a head predicate."""
    nodes = set(encoding.predicates())
    edges = set()
    for r in encoding.rules:
        if isinstance(r.head, ChoiceHead):
            body = _literal_sigs(r.body)
            for el in r.head.elements:
                for b in body + _literal_sigs(el.condition):
                    edges.add(Edge(el.atom.signature, b, True))
        elif r.head is not None:
            for b in _literal_sigs(r.body):
                edges.add(Edge(r.head.signature, b, False))
    return DependencyGraph(frozenset(nodes), frozenset(edges))


def defining_rules(encoding: Program, p: PredicateSig) -> list[Rule]:
    """Rules whose head (or one of whose choice elements) is an atom of ``p``, in encoding order."""
    return [r for r in encoding.rules if any(a.signature == p for a in r.head_atoms())]


@dataclass(frozen=True)
class Classification:
    choice_heads: frozenset[PredicateSig]
    instance_determined: frozenset[PredicateSig]
    instance_predicates: frozenset[PredicateSig]
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def is_determined(self, p: PredicateSig) -> bool:
        return p in self.instance_determined


def classify(encoding: Program, instance_predicates: Iterable[PredicateSig] = ()) -> Classification:
    """Split the predicates of ``encoding`` into choice heads and instance-determined ones.

    A predicate is instance-determined when every rule defining it is a
    non-choice rule whose body predicates (positive or default-negated) are
    instance-determined; a predicate without defining rules qualifies
    vacuously, so instance facts form the base case.  Computed as a least
    fixpoint, so recursive definitions are never determined.
    """
    inst = frozenset(instance_predicates)
    diags = []
    choice_heads = set()
    definitions: dict[PredicateSig, list[Rule]] = {}
    for r in encoding.rules:
        if isinstance(r.head, ChoiceHead):
            choice_heads |= {e.atom.signature for e in r.head.elements}
        for a in r.head_atoms():
            definitions.setdefault(a.signature, []).append(r)

    nodes = set(encoding.predicates()) | inst
    for p in sorted(choice_heads & inst):
        msg = f"{p} is defined both by a choice rule and by instance facts; treated as a choice head"
        log.warning(msg)
        diags.append(msg)

    determined: set[PredicateSig] = set()
    changed = True
    while changed:
        changed = False
        for p in sorted(nodes - determined - choice_heads):
            rules = definitions.get(p, [])
            if all(set(_literal_sigs(r.body)) <= determined for r in rules):
                determined.add(p)
                changed = True

    kept = inst & determined
    for p in sorted(inst - kept - choice_heads):
        msg = f"instance predicate {p} also has non-deterministic definitions in the encoding"
        log.warning(msg)
        diags.append(msg)
    return Classification(frozenset(choice_heads), frozenset(determined), frozenset(kept), tuple(diags))


def instance_predicates_of(instances: Iterable[Program]) -> set[PredicateSig]:
    """Predicates occurring as facts in instance files."""
    out = set()
    for prog in instances:
        out |= {a.signature for a in prog.facts()}
    return out
