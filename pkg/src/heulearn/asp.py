"""AST, parser, printer and grounder for the ASP-Core-2 subset used by the pipeline.

Supported statements: facts, normal rules, integrity constraints, choice rules
(``{a : c}`` elements, optional numeric/variable bounds), weak constraints
(body parsed, ``[w@p,t...]`` payload kept opaque), ``#heuristic`` directives and
``#show``/``#const`` directives (kept opaque).  Aggregates, disjunction,
classical negation, intervals and function terms are rejected.
"""

from __future__ import annotations

import ast
import itertools
import operator
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

MODIFIERS = ("sign", "level", "true", "false", "init", "factor")
COMPARISON_OPS = ("=", "==", "!=", "<>", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*", "/", "\\")


# --------------------------------------------------------------------------- errors


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class ParseError(ValueError):
    """Syntax error; carries the position and what the parser expected."""

    def __init__(self, message: str, span: Span | None = None, expected: str | None = None):
        self.span = span
        self.expected = expected
        where = f"{span}: " if span else ""
        tail = f" (expected {expected})" if expected else ""
        super().__init__(f"{where}{message}{tail}")


class UnsupportedConstructError(ParseError):
    pass


class UnsafeRuleError(ValueError):
    pass


# --------------------------------------------------------------------------- terms


@dataclass(frozen=True, order=True)
class PredicateSig:
    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True, order=True)
class Term:
    kind: str  # "variable" | "constant"
    name: str

    @property
    def is_variable(self) -> bool:
        return self.kind == "variable"

    def __str__(self) -> str:
        return self.name


def var(name: str) -> Term:
    return Term("variable", name)


def const(name: str | int) -> Term:
    return Term("constant", str(name))


def make_term(text: str) -> Term:
    if text[0].isupper() or text[0] == "_":
        return var(text)
    return const(text)


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()

    @property
    def signature(self) -> PredicateSig:
        return PredicateSig(self.predicate, len(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> set[str]:
        return {t.name for t in self.args if t.is_variable}

    def is_ground(self) -> bool:
        return not any(t.is_variable for t in self.args)

    def substitute(self, subst: dict[str, Term]) -> Atom:
        return Atom(self.predicate, tuple(subst.get(t.name, t) if t.is_variable else t for t in self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(t.name for t in self.args)})"


def atom(predicate: str, *args: str | int) -> Atom:
    """Shorthand: ``atom("p", "X", 1)`` -> ``p(X,1)``."""
    return Atom(predicate, tuple(make_term(str(a)) for a in args))


@dataclass(frozen=True, order=True)
class Literal:
    atom: Atom
    negated: bool = False

    @property
    def positive(self) -> bool:
        return not self.negated

    def variables(self) -> set[str]:
        return self.atom.variables()

    def substitute(self, subst: dict[str, Term]) -> Literal:
        return Literal(self.atom.substitute(subst), self.negated)

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negated else str(self.atom)


_VAR_TOKEN = re.compile(r"_*[A-Z][A-Za-z0-9_']*$")


def _is_var_token(tok: str) -> bool:
    return bool(_VAR_TOKEN.match(tok)) or tok == "_"


@dataclass(frozen=True, order=True)
class Comparison:
    """Built-in comparison ``left op right``; sides are kept as token tuples."""

    op: str
    left: tuple[str, ...]
    right: tuple[str, ...]

    def variables(self) -> set[str]:
        return {t for t in self.left + self.right if _is_var_token(t)}

    def substitute(self, subst: dict[str, Term]) -> Comparison:
        def sub(side):
            return tuple(subst[t].name if t in subst else t for t in side)

        return Comparison(self.op, sub(self.left), sub(self.right))

    def evaluate(self) -> bool:
        """Truth value of a ground comparison."""
        if self.variables():
            raise ValueError(f"comparison {self} is not ground")
        a, b = _symbol_key(_eval_side(self.left)), _symbol_key(_eval_side(self.right))
        return _CMP[self.op](a, b)

    def __str__(self) -> str:
        return f"{''.join(self.left)} {self.op} {''.join(self.right)}"


BodyElement = Union[Literal, Comparison]

_CMP = {
    "=": operator.eq,
    "==": operator.eq,
    "!=": operator.ne,
    "<>": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def _eval_side(tokens: tuple[str, ...]):
    if len(tokens) == 1:
        tok = tokens[0]
        if tok.lstrip("-").isdigit():
            return int(tok)
        return tok
    text = "".join(tokens).replace("\\", "%")
    tree = ast.parse(text, mode="eval")
    allowed = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Add, ast.Sub, ast.Mult,
               ast.Div, ast.Mod, ast.USub, ast.UAdd)
    for node in ast.walk(tree):
        if not isinstance(node, allowed) or (isinstance(node, ast.Constant) and type(node.value) is not int):
            raise ValueError(f"cannot evaluate arithmetic {''.join(tokens)!r}")
    return _eval_int(tree.body)


def _eval_int(node) -> int:
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.UnaryOp):
        v = _eval_int(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    a, b = _eval_int(node.left), _eval_int(node.right)
    if isinstance(node.op, ast.Add):
        return a + b
    if isinstance(node.op, ast.Sub):
        return a - b
    if isinstance(node.op, ast.Mult):
        return a * b
    q = abs(a) // abs(b)  # truncating integer division, as in clingo
    q = q if (a >= 0) == (b >= 0) else -q
    return q if isinstance(node.op, ast.Div) else a - b * q


def _symbol_key(value):
    # integers < symbolic constants < strings
    if isinstance(value, int):
        return (0, value, "")
    if value.startswith('"'):
        return (2, 0, value)
    return (1, 0, value)


# --------------------------------------------------------------------------- statements


@dataclass(frozen=True)
class ChoiceElement:
    atom: Atom
    condition: tuple[BodyElement, ...] = ()

    def __str__(self) -> str:
        if not self.condition:
            return str(self.atom)
        return f"{self.atom} : {', '.join(map(str, self.condition))}"


@dataclass(frozen=True)
class ChoiceHead:
    elements: tuple[ChoiceElement, ...]
    lower: str | None = None
    upper: str | None = None

    def __str__(self) -> str:
        inner = "; ".join(map(str, self.elements))
        text = f"{{ {inner} }}"
        if self.lower is not None:
            text = f"{self.lower} {text}"
        if self.upper is not None:
            text = f"{text} {self.upper}"
        return text


@dataclass(frozen=True)
class Rule:
    head: Atom | ChoiceHead | None
    body: tuple[BodyElement, ...] = ()
    weak: str | None = None  # opaque ``w@p,t1,...`` payload of a weak constraint
    span: Span | None = field(default=None, compare=False, repr=False)

    @property
    def kind(self) -> str:
        if self.weak is not None:
            return "weak-constraint"
        if isinstance(self.head, ChoiceHead):
            return "choice"
        if self.head is None:
            return "constraint"
        if not self.body and self.head.is_ground():
            return "fact"
        return "normal"

    @property
    def positive_body(self) -> list[Atom]:
        return [b.atom for b in self.body if isinstance(b, Literal) and not b.negated]

    def head_atoms(self) -> list[Atom]:
        if isinstance(self.head, Atom):
            return [self.head]
        if isinstance(self.head, ChoiceHead):
            return [e.atom for e in self.head.elements]
        return []

    def is_definite(self) -> bool:
        return isinstance(self.head, Atom) and self.weak is None and all(
            not (isinstance(b, Literal) and b.negated) for b in self.body
        )

    def variables(self) -> set[str]:
        out: set[str] = set()
        for a in self.head_atoms():
            out |= a.variables()
        if isinstance(self.head, ChoiceHead):
            for e in self.head.elements:
                for c in e.condition:
                    out |= c.variables()
        for b in self.body:
            out |= b.variables()
        return out

    def substitute(self, subst: dict[str, Term]) -> Rule:
        if not isinstance(self.head, (Atom, type(None))):
            raise ValueError("substitution is only defined for normal rules")
        head = self.head.substitute(subst) if self.head is not None else None
        return Rule(head, tuple(b.substitute(subst) for b in self.body), self.weak, self.span)

    def __str__(self) -> str:
        body = ", ".join(map(str, self.body))
        if self.weak is not None:
            return f":~ {body}. [{self.weak}]"
        if self.head is None:
            return f":- {body}."
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {body}."


@dataclass(frozen=True)
class HeuristicDirective:
    """``#heuristic H : B. [w@p,m]``"""

    head: Atom
    body: tuple[BodyElement, ...] = ()
    weight: str = "1"
    priority: str | None = None
    modifier: str = "true"
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.modifier not in MODIFIERS:
            raise ValueError(f"unknown heuristic modifier {self.modifier!r}; expected one of {MODIFIERS}")

    @property
    def annotation(self) -> str:
        wp = self.weight if self.priority is None else f"{self.weight}@{self.priority}"
        return f"[{wp},{self.modifier}]"

    def __str__(self) -> str:
        if self.body:
            return f"#heuristic {self.head} : {', '.join(map(str, self.body))}. {self.annotation}"
        return f"#heuristic {self.head}. {self.annotation}"


@dataclass(frozen=True)
class Directive:
    """Opaque ``#show``/``#const`` statement."""

    name: str
    text: str
    span: Span | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"#{self.name} {self.text}." if self.text else f"#{self.name}."


Statement = Union[Rule, HeuristicDirective, Directive]


@dataclass(frozen=True)
class Diagnostic:
    span: Span | None
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.message}" if self.span else self.message


@dataclass(frozen=True)
class Program:
    statements: tuple[Statement, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False, repr=False)

    @property
    def rules(self) -> list[Rule]:
        return [s for s in self.statements if isinstance(s, Rule)]

    def facts(self) -> list[Atom]:
        return [r.head for r in self.rules if r.kind == "fact"]

    def predicates(self) -> set[PredicateSig]:
        out: set[PredicateSig] = set()
        for s in self.statements:
            if isinstance(s, Rule):
                out |= {a.signature for a in s.head_atoms()}
                if isinstance(s.head, ChoiceHead):
                    for e in s.head.elements:
                        out |= {c.atom.signature for c in e.condition if isinstance(c, Literal)}
                out |= {b.atom.signature for b in s.body if isinstance(b, Literal)}
            elif isinstance(s, HeuristicDirective):
                out.add(s.head.signature)
                out |= {b.atom.signature for b in s.body if isinstance(b, Literal)}
        return out

    def __add__(self, other: Program) -> Program:
        return Program(self.statements + other.statements, self.diagnostics + other.diagnostics)

    def __len__(self) -> int:
        return len(self.statements)

    def __iter__(self) -> Iterator[Statement]:
        return iter(self.statements)

    def __str__(self) -> str:
        return print_program(self)


AtomSet = frozenset  # frozenset[Atom]


# --------------------------------------------------------------------------- safety


def _bound_variables(body: Iterable[BodyElement]) -> set[str]:
    body = list(body)
    bound = set()
    for b in body:
        if isinstance(b, Literal) and not b.negated:
            bound |= b.variables()
    changed = True
    while changed:
        changed = False
        for b in body:
            if isinstance(b, Comparison) and b.op in ("=", "=="):
                for lhs, rhs in ((b.left, b.right), (b.right, b.left)):
                    if len(lhs) == 1 and _is_var_token(lhs[0]) and lhs[0] not in bound:
                        if {t for t in rhs if _is_var_token(t)} <= bound:
                            bound.add(lhs[0])
                            changed = True
    return bound


def unsafe_variables(stmt: Statement) -> set[str]:
    """Variables of ``stmt`` not bound by a positive body literal (empty if safe)."""
    if isinstance(stmt, Directive):
        return set()
    bound = _bound_variables(stmt.body)
    needed: set[str] = set()
    for b in stmt.body:
        if not (isinstance(b, Literal) and not b.negated):
            needed |= b.variables()
    if isinstance(stmt, HeuristicDirective):
        needed |= stmt.head.variables()
    elif isinstance(stmt.head, Atom):
        needed |= stmt.head.variables()
    elif isinstance(stmt.head, ChoiceHead):
        unsafe = set()
        for e in stmt.head.elements:
            local = bound | _bound_variables(list(stmt.body) + list(e.condition))
            want = e.atom.variables()
            for c in e.condition:
                want |= c.variables()
            unsafe |= want - local
        return unsafe | (needed - bound)
    elif stmt.weak is not None:
        needed |= {t for t in re.findall(r"[A-Za-z_][A-Za-z0-9_']*", stmt.weak) if _is_var_token(t)}
    return needed - bound


# --------------------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
   |(?P<blockcomment>%\*.*?\*%)
   |(?P<comment>%[^\n]*)
   |(?P<directive>\#[A-Za-z_]+)
   |(?P<if>:-)
   |(?P<wif>:~)
   |(?P<string>"(?:[^"\\\n]|\\.)*")
   |(?P<number>\d+)
   |(?P<var>_*[A-Z][A-Za-z0-9_']*|_(?![A-Za-z0-9_]))
   |(?P<ident>_*[a-z][A-Za-z0-9_']*)
   |(?P<op>!=|<>|<=|>=|==|\.\.|[<>=+\-*/\\|;:,.(){}\[\]@])
    """,
    re.S | re.X,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", Span(line, pos - line_start + 1))
        kind = m.lastgroup
        if kind not in ("ws", "comment", "blockcomment"):
            tokens.append(Token(kind, m.group(), Span(line, pos - line_start + 1)))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1)))
    return tokens


# --------------------------------------------------------------------------- parser


class Parser:
    """Recursive-descent parser over a token list; subclassed by the task-file reader."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.diagnostics: list[Diagnostic] = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        return self.tok.kind != "string" and self.tok.text in texts and self.tok.kind != "eof"

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(text)
        return self.advance()

    def fail(self, expected: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"unexpected {found}", t.span, expected)

    def unsupported(self, what: str, span: Span | None = None):
        raise UnsupportedConstructError(f"unsupported construct: {what}", span or self.tok.span)

    # program
    def parse_program(self) -> Program:
        stmts = []
        while self.tok.kind != "eof":
            stmts.append(self.parse_statement())
        return Program(tuple(stmts), tuple(self.diagnostics))

    def parse_statement(self) -> Statement:
        start = self.tok.span
        if self.at(":-"):
            self.advance()
            body = self.parse_body()
            self.expect(".")
            return self._checked(Rule(None, body, span=start))
        if self.at(":~"):
            self.advance()
            body = self.parse_body()
            self.expect(".")
            self.expect("[")
            payload = self._collect_until("]")
            self.expect("]")
            return self._checked(Rule(None, body, weak=payload, span=start))
        if self.tok.kind == "directive":
            return self.parse_directive()
        if self.at("-") and self.peek().kind == "ident":
            self.unsupported("classical negation")
        head: Atom | ChoiceHead
        if self.at("{") or (self.tok.kind in ("number", "var") and self.peek().text == "{"):
            head = self.parse_choice_head()
        elif self.tok.kind == "ident":
            head = self.parse_atom()
            if self.at("|", ";"):
                self.unsupported("disjunctive head")
            if self.at(":"):
                self.unsupported("conditional literal in rule head")
        else:
            self.fail("rule head, ':-' or directive")
        body: tuple[BodyElement, ...] = ()
        if self.at(":-"):
            self.advance()
            body = self.parse_body()
        self.expect(".")
        return self._checked(Rule(head, body, span=start))

    def _checked(self, stmt: Statement) -> Statement:
        bad = unsafe_variables(stmt)
        if bad:
            self.diagnostics.append(
                Diagnostic(getattr(stmt, "span", None), f"unsafe variables {', '.join(sorted(bad))} in '{stmt}'")
            )
        return stmt

    def parse_directive(self) -> Statement:
        t = self.advance()
        name = t.text[1:]
        if name == "heuristic":
            head = self.parse_atom()
            body: tuple[BodyElement, ...] = ()
            if self.at(":"):
                self.advance()
                body = self.parse_body()
            self.expect(".")
            self.expect("[")
            weight = self.parse_simple_term()
            priority = None
            if self.at("@"):
                self.advance()
                priority = self.parse_simple_term()
            self.expect(",")
            mod = self.advance()
            if mod.text not in MODIFIERS:
                raise ParseError(f"unknown heuristic modifier {mod.text!r}", mod.span, " | ".join(MODIFIERS))
            self.expect("]")
            return self._checked(HeuristicDirective(head, body, weight, priority, mod.text, span=t.span))
        if name in ("show", "const"):
            text = self._collect_until(".", spaced=True)
            self.expect(".")
            return Directive(name, text, span=t.span)
        self.unsupported(f"directive #{name}", t.span)

    def _collect_until(self, stop: str, spaced: bool = False) -> str:
        parts = []
        depth = 0
        while not (depth == 0 and self.at(stop)):
            if self.tok.kind == "eof":
                self.fail(stop)
            if self.at("(", "[", "{"):
                depth += 1
            elif self.at(")", "]", "}"):
                depth -= 1
            parts.append(self.advance().text)
        if spaced:
            return " ".join(parts).replace(" / ", "/").replace(" = ", "=")
        return "".join(parts)

    def parse_simple_term(self) -> str:
        if self.at("-") and self.peek().kind == "number":
            self.advance()
            return "-" + self.advance().text
        if self.tok.kind in ("number", "var", "ident", "string"):
            return self.advance().text
        self.fail("term")

    def parse_choice_head(self) -> ChoiceHead:
        lower = None
        if not self.at("{"):
            lower = self.advance().text
        self.expect("{")
        elements = []
        while True:
            a = self.parse_atom()
            cond: tuple[BodyElement, ...] = ()
            if self.at(":"):
                self.advance()
                cond = self.parse_body()
            elements.append(ChoiceElement(a, cond))
            if self.at(";"):
                self.advance()
                continue
            break
        self.expect("}")
        upper = None
        if self.tok.kind in ("number", "var"):
            upper = self.advance().text
        elif self.at("="):
            self.unsupported("'=' bound on choice head (write 'l { ... } u')")
        return ChoiceHead(tuple(elements), lower, upper)

    def parse_atom(self) -> Atom:
        if self.tok.kind != "ident":
            self.fail("atom")
        name = self.advance().text
        if name == "not":
            self.fail("atom")
        args = []
        if self.at("("):
            self.advance()
            while True:
                args.append(self.parse_arg())
                if self.at(","):
                    self.advance()
                    continue
                break
            self.expect(")")
        return Atom(name, tuple(args))

    def parse_arg(self) -> Term:
        t = self.tok
        if t.kind == "ident" and self.peek().text == "(":
            self.unsupported("function term", t.span)
        if self.at("-") and self.peek().kind == "number":
            self.advance()
            term = const("-" + self.advance().text)
        elif t.kind in ("ident", "number", "string"):
            self.advance()
            term = const(t.text)
        elif t.kind == "var":
            self.advance()
            term = var(t.text)
        else:
            self.fail("term")
        if self.at(*ARITH_OPS):
            self.unsupported("arithmetic term in atom argument")
        if self.at(".."):
            self.unsupported("interval")
        return term

    def parse_body(self) -> tuple[BodyElement, ...]:
        elems = [self.parse_body_element()]
        while self.at(","):
            self.advance()
            elems.append(self.parse_body_element())
        return tuple(elems)

    def parse_body_element(self) -> BodyElement:
        t = self.tok
        if t.kind == "directive" or self.at("{"):
            self.unsupported("aggregate")
        if t.kind == "ident" and t.text == "not":
            self.advance()
            if self.at("not"):
                self.unsupported("double negation")
            if self.at("-"):
                self.unsupported("classical negation")
            return Literal(self.parse_atom(), negated=True)
        if self.at("-") and self.peek().kind == "ident":
            self.unsupported("classical negation")
        if t.kind == "ident" and self.peek().text not in COMPARISON_OPS + ARITH_OPS:
            a = self.parse_atom()
            if self.at(*COMPARISON_OPS):
                self.unsupported("function term in comparison", t.span)
            return Literal(a)
        left = self.parse_expression()
        if not self.at(*COMPARISON_OPS):
            self.fail("comparison operator")
        op = self.advance().text
        right = self.parse_expression()
        return Comparison(op, left, right)

    def parse_expression(self) -> tuple[str, ...]:
        out: list[str] = []
        depth = 0
        expect_operand = True
        while True:
            t = self.tok
            if t.kind == "directive":
                self.unsupported("aggregate")
            if self.at(".."):
                self.unsupported("interval")
            if expect_operand:
                if self.at("("):
                    depth += 1
                    out.append(self.advance().text)
                    continue
                if self.at("-"):
                    out.append(self.advance().text)
                    continue
                if t.kind in ("number", "var", "string", "ident"):
                    if t.kind == "ident" and self.peek().text == "(":
                        self.unsupported("function term", t.span)
                    out.append(self.advance().text)
                    expect_operand = False
                    continue
                self.fail("arithmetic term")
            if depth and self.at(")"):
                depth -= 1
                out.append(self.advance().text)
                continue
            if self.at(*ARITH_OPS):
                out.append(self.advance().text)
                expect_operand = True
                continue
            break
        if depth:
            self.fail("')'")
        return tuple(out)


def parse_program(text: str) -> Program:
    """Parse ASP source text into a :class:`Program`."""
    return Parser(text).parse_program()


def parse_rule(text: str) -> Statement:
    prog = parse_program(text)
    if len(prog) != 1:
        raise ParseError(f"expected exactly one statement, found {len(prog)}")
    return prog.statements[0]


def parse_atom(text: str) -> Atom:
    p = Parser(text)
    a = p.parse_atom()
    if p.tok.kind != "eof":
        p.fail("end of input")
    return a


def print_program(program: Program | Iterable[Statement]) -> str:
    """Canonical rendering, one statement per line (no trailing newline)."""
    return "\n".join(str(s) for s in program)


# --------------------------------------------------------------------------- grounding


def _index(domain: Iterable[Atom]) -> dict[PredicateSig, list[Atom]]:
    idx: dict[PredicateSig, list[Atom]] = {}
    for a in sorted(set(domain)):
        idx.setdefault(a.signature, []).append(a)
    return idx


def match(pattern: Atom, ground: Atom, subst: dict[str, Term]) -> dict[str, Term] | None:
    if pattern.signature != ground.signature:
        return None
    out = dict(subst)
    for p, g in zip(pattern.args, ground.args):
        if p.is_variable:
            if p.name == "_":
                continue
            bound = out.get(p.name)
            if bound is None:
                out[p.name] = g
            elif bound != g:
                return None
        elif p != g:
            return None
    return out


def join(
    body: list[BodyElement],
    sources: list[dict[PredicateSig, list[Atom]]],
    subst: dict[str, Term] | None = None,
) -> Iterator[dict[str, Term]]:
    """Enumerate substitutions matching the positive literals of ``body``.

    ``sources[i]`` is the atom index used for the i-th positive literal.
    Comparisons are checked as soon as their variables are bound; negative
    literals are ignored here.
    """
    positives = [b for b in body if isinstance(b, Literal) and not b.negated]
    comparisons = [b for b in body if isinstance(b, Comparison)]

    def rec(k: int, s: dict[str, Term], pending: list[Comparison]):
        still = []
        for c in pending:
            if c.variables() <= s.keys():
                if not c.substitute(s).evaluate():
                    return
            else:
                still.append(c)
        if k == len(positives):
            if still:
                # comparisons binding a variable via '=' are resolved here
                for c in still:
                    s = _assign(c, s)
                    if s is None:
                        return
                yield s
            else:
                yield s
            return
        lit = positives[k].atom.substitute(s)
        for cand in sources[k].get(lit.signature, ()):
            s2 = match(lit, cand, s)
            if s2 is not None:
                yield from rec(k + 1, s2, still)

    yield from rec(0, dict(subst or {}), comparisons)


def _assign(c: Comparison, s: dict[str, Term]) -> dict[str, Term] | None:
    c = c.substitute(s)
    free = c.variables()
    if not free:
        return s if c.evaluate() else None
    if c.op in ("=", "==") and len(free) == 1:
        for lhs, rhs in ((c.left, c.right), (c.right, c.left)):
            if len(lhs) == 1 and lhs[0] in free:
                value = _eval_side(rhs)
                out = dict(s)
                out[lhs[0]] = const(value)
                return out
    raise UnsafeRuleError(f"cannot bind variables {sorted(free)} in comparison {c}")


def ground_instantiations(rule: Rule, domain: Iterable[Atom]) -> list[Rule]:
    """All ground instances of ``rule`` whose positive body atoms occur in ``domain``."""
    if isinstance(rule.head, ChoiceHead) or rule.weak is not None:
        raise ValueError(f"ground_instantiations expects a normal rule or fact, got {rule.kind}")
    bad = unsafe_variables(rule)
    if bad:
        raise UnsafeRuleError(f"unsafe variables {', '.join(sorted(bad))} in '{rule}'")
    idx = _index(domain)
    positives = [b for b in rule.body if isinstance(b, Literal) and not b.negated]
    out = []
    seen = set()
    for s in join(list(rule.body), [idx] * len(positives)):
        g = rule.substitute(s)
        if g not in seen:
            seen.add(g)
            out.append(g)
    return out


def rename_variables(stmt: Rule, names: Iterator[str] | None = None) -> Rule:
    """Rename variables to V0, V1, ... in order of first occurrence (head first)."""
    names = names or (f"V{i}" for i in itertools.count())
    mapping: dict[str, Term] = {}
    for a in stmt.head_atoms() + [b for b in stmt.body]:
        vs = a.atom.args if isinstance(a, Literal) else a.args if isinstance(a, Atom) else ()
        for t in vs:
            if t.is_variable and t.name not in mapping:
                mapping[t.name] = var(next(names))
    return stmt.substitute(mapping)
