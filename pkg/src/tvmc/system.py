"""Finite-state-machine descriptions and their evaluation.

A system is a Moore-style machine over bit-vector variables: declared
inputs, declared state variables with initial values, one next-state
expression per state variable, and named single-bit label predicates
over the state variables.  The textual format (``.msys``) has one
declaration per line::

    system recoverable
    input n: bv[2]
    input z: bv[1]
    input r: bv[1]
    state v: bv[2] init 0
    state u: bv[1] init 0
    state c: bv[1] init 0
    next v = ite(eq(r, 1), 0, ite(ule(n, v), v, n))
    next u = z
    next c = add(c, 1)
    label v_zero = eq(v, 0)

``#`` starts a comment.  Expressions use function-call syntax with the
operators const/not/and/or/xor/add/sub/eq/ne/ult/ule/shl/lshr/slice/
concat/zext/ite; numeric literals are constants whose width is inferred
from context.  ``shl(a, k)``, ``lshr(a, k)``, ``slice(a, lo, hi)`` and
``zext(a, w)`` take literal integer parameters; ``concat(a, b)`` makes
``a`` the high bits.

State and input variables are flattened into single vectors in
declaration order, least significant bits first, which fixes the global
bit numbering used by precision masks and refinement.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .bitvec import TBit, TBitVec, ite
from .errors import ContractViolation, SourceError

UNARY_OPS = {"not"}
BINARY_OPS = {"and", "or", "xor", "add", "sub"}
COMPARE_OPS = {"eq", "ne", "ult", "ule"}
SHIFT_OPS = {"shl", "lshr"}


@dataclass(eq=False)
class Expr:
    """One node of an expression tree.

    kind is one of const, state, input, the operator names above;
    ``width`` is filled in during validation.
    """

    kind: str
    args: tuple["Expr", ...] = ()
    name: str | None = None      # state/input references
    value: int | None = None     # const payload
    params: tuple[int, ...] = () # shift amount, slice bounds, zext width
    line: int = 0
    column: int = 0
    width: int | None = None
    offset: int = 0              # flattened bit offset of a variable reference


@dataclass(frozen=True)
class Variable:
    name: str
    width: int
    offset: int
    init: int = 0


class SystemIR:
    """A validated system description."""

    def __init__(self, name, inputs, states, next_exprs, labels):
        self.name = name
        self.inputs: tuple[Variable, ...] = tuple(inputs)
        self.states: tuple[Variable, ...] = tuple(states)
        self.next_exprs: dict[str, Expr] = dict(next_exprs)
        self.labels: dict[str, Expr] = dict(labels)
        self.state_width = sum(v.width for v in self.states)
        self.input_width = sum(v.width for v in self.inputs)
        self._label_cones: dict[str, int] = {}

    def initial_state(self) -> TBitVec:
        ones = 0
        for var in self.states:
            ones |= var.init << var.offset
        return TBitVec(self.state_width, ones, 0)

    def state_var_of_bit(self, bit: int) -> tuple[int, int]:
        """(declaration index, bit position within the variable)."""
        return _var_of_bit(self.states, bit)

    def input_var_of_bit(self, bit: int) -> tuple[int, int]:
        return _var_of_bit(self.inputs, bit)

    # -- evaluation ----------------------------------------------------

    def step_concrete(self, state: int, inp: int) -> tuple[int, dict[str, bool]]:
        """Evaluate all next-state expressions and labels on concrete
        values; total and deterministic."""
        memo = {}
        new_state = 0
        for var in self.states:
            new_state |= _eval_concrete(self.next_exprs[var.name], state, inp, memo) << var.offset
        return new_state, self.labels_concrete(state)

    def labels_concrete(self, state: int) -> dict[str, bool]:
        memo = {}
        return {
            name: bool(_eval_concrete(expr, state, 0, memo))
            for name, expr in self.labels.items()
        }

    def step_abstract(self, state: TBitVec, inp: TBitVec) -> TBitVec:
        """The abstract image of the step function, computed by running
        the expression tree over three-valued vectors."""
        if state.width != self.state_width or inp.width != self.input_width:
            raise ContractViolation("state/input width does not match the system")
        memo = {}
        result = None
        for var in reversed(self.states):
            part = _eval_abstract(self.next_exprs[var.name], state, inp, memo)
            result = part if result is None else result.concat(part)
        return result

    def labels_abstract(self, state: TBitVec) -> dict[str, bool | None]:
        if state.width != self.state_width:
            raise ContractViolation("state width does not match the system")
        memo = {}
        out = {}
        for name, expr in self.labels.items():
            value = _eval_abstract(expr, state, None, memo)
            out[name] = value.bit(0).to_bool()
        return out

    # -- dependency cones ----------------------------------------------

    def backward_mark(
        self, state: TBitVec, inp: TBitVec, target_state_bits: int
    ) -> tuple[int, int]:
        """Which currently-unknown state/input bits lie in the
        dependency cone of the given next-state bits.

        Over-approximation is fine (a superfluous bit only costs an
        extra refinement attempt); missing a dependency is not.
        """
        state_mask = input_mask = 0
        for var in self.states:
            local = (target_state_bits >> var.offset) & ((1 << var.width) - 1)
            if local:
                s, i = _cone(self.next_exprs[var.name], local)
                state_mask |= s
                input_mask |= i
        return state_mask & state.unknowns, input_mask & inp.unknowns

    def label_cone(self, name: str) -> int:
        """State bits the label predicate structurally depends on."""
        if name not in self._label_cones:
            state_mask, _ = _cone(self.labels[name], 1)
            self._label_cones[name] = state_mask
        return self._label_cones[name]


def _var_of_bit(variables, bit):
    for idx, var in enumerate(variables):
        if var.offset <= bit < var.offset + var.width:
            return idx, bit - var.offset
    raise ContractViolation(f"bit {bit} out of range")


# ---------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------


def _eval_concrete(expr: Expr, state: int, inp: int, memo) -> int:
    key = id(expr)
    if key in memo:
        return memo[key]
    kind = expr.kind
    mask = (1 << expr.width) - 1
    if kind == "const":
        result = expr.value
    elif kind == "state":
        result = (state >> expr.offset) & mask
    elif kind == "input":
        result = (inp >> expr.offset) & mask
    elif kind == "not":
        result = ~_eval_concrete(expr.args[0], state, inp, memo) & mask
    elif kind in ("and", "or", "xor", "add", "sub"):
        a = _eval_concrete(expr.args[0], state, inp, memo)
        b = _eval_concrete(expr.args[1], state, inp, memo)
        if kind == "and":
            result = a & b
        elif kind == "or":
            result = a | b
        elif kind == "xor":
            result = a ^ b
        elif kind == "add":
            result = (a + b) & mask
        else:
            result = (a - b) & mask
    elif kind in COMPARE_OPS:
        a = _eval_concrete(expr.args[0], state, inp, memo)
        b = _eval_concrete(expr.args[1], state, inp, memo)
        result = int({"eq": a == b, "ne": a != b, "ult": a < b, "ule": a <= b}[kind])
    elif kind == "shl":
        result = (_eval_concrete(expr.args[0], state, inp, memo) << expr.params[0]) & mask
    elif kind == "lshr":
        result = _eval_concrete(expr.args[0], state, inp, memo) >> expr.params[0]
    elif kind == "slice":
        lo, hi = expr.params
        result = (_eval_concrete(expr.args[0], state, inp, memo) >> lo) & mask
    elif kind == "concat":
        high = _eval_concrete(expr.args[0], state, inp, memo)
        low = _eval_concrete(expr.args[1], state, inp, memo)
        result = high << expr.args[1].width | low
    elif kind == "zext":
        result = _eval_concrete(expr.args[0], state, inp, memo)
    elif kind == "ite":
        cond = _eval_concrete(expr.args[0], state, inp, memo)
        result = _eval_concrete(expr.args[1 if cond else 2], state, inp, memo)
    else:
        raise AssertionError(f"unhandled kind {kind}")
    memo[key] = result
    return result


def _eval_abstract(expr: Expr, state: TBitVec, inp: TBitVec | None, memo) -> TBitVec:
    key = id(expr)
    if key in memo:
        return memo[key]
    kind = expr.kind
    if kind == "const":
        result = TBitVec.from_int(expr.value, expr.width)
    elif kind == "state":
        result = state.slice(expr.offset, expr.offset + expr.width - 1)
    elif kind == "input":
        result = inp.slice(expr.offset, expr.offset + expr.width - 1)
    elif kind == "not":
        result = _eval_abstract(expr.args[0], state, inp, memo).invert()
    elif kind in ("and", "or", "xor", "add", "sub"):
        a = _eval_abstract(expr.args[0], state, inp, memo)
        b = _eval_abstract(expr.args[1], state, inp, memo)
        result = {
            "and": a.and_, "or": a.or_, "xor": a.xor, "add": a.add, "sub": a.sub,
        }[kind](b)
    elif kind in COMPARE_OPS:
        a = _eval_abstract(expr.args[0], state, inp, memo)
        b = _eval_abstract(expr.args[1], state, inp, memo)
        bit = {"eq": a.cmp_eq, "ne": a.cmp_ne, "ult": a.cmp_ult, "ule": a.cmp_ule}[kind](b)
        result = TBitVec(1, int(bit is TBit.ONE), int(bit is TBit.UNKNOWN))
    elif kind == "shl":
        result = _eval_abstract(expr.args[0], state, inp, memo).shl(expr.params[0])
    elif kind == "lshr":
        result = _eval_abstract(expr.args[0], state, inp, memo).lshr(expr.params[0])
    elif kind == "slice":
        result = _eval_abstract(expr.args[0], state, inp, memo).slice(*expr.params)
    elif kind == "concat":
        high = _eval_abstract(expr.args[0], state, inp, memo)
        result = high.concat(_eval_abstract(expr.args[1], state, inp, memo))
    elif kind == "zext":
        result = _eval_abstract(expr.args[0], state, inp, memo).zext(expr.params[0])
    elif kind == "ite":
        cond = _eval_abstract(expr.args[0], state, inp, memo).bit(0)
        result = ite(
            cond,
            _eval_abstract(expr.args[1], state, inp, memo),
            _eval_abstract(expr.args[2], state, inp, memo),
        )
    else:
        raise AssertionError(f"unhandled kind {kind}")
    memo[key] = result
    return result


def _cone(expr: Expr, out_mask: int) -> tuple[int, int]:
    """Structural dependency cone: which state/input bit positions can
    affect the given output bits of the expression."""
    if out_mask == 0:
        return 0, 0
    kind = expr.kind
    if kind == "const":
        return 0, 0
    if kind == "state":
        return out_mask << expr.offset, 0
    if kind == "input":
        return 0, out_mask << expr.offset
    if kind == "not":
        return _cone(expr.args[0], out_mask)
    if kind in ("and", "or", "xor"):
        s0, i0 = _cone(expr.args[0], out_mask)
        s1, i1 = _cone(expr.args[1], out_mask)
        return s0 | s1, i0 | i1
    if kind in ("add", "sub"):
        # carries propagate upward only: bit k depends on bits 0..k
        low = (1 << out_mask.bit_length()) - 1
        s0, i0 = _cone(expr.args[0], low)
        s1, i1 = _cone(expr.args[1], low)
        return s0 | s1, i0 | i1
    if kind in COMPARE_OPS:
        all_bits = (1 << expr.args[0].width) - 1
        s0, i0 = _cone(expr.args[0], all_bits)
        s1, i1 = _cone(expr.args[1], all_bits)
        return s0 | s1, i0 | i1
    if kind == "shl":
        return _cone(expr.args[0], out_mask >> expr.params[0])
    if kind == "lshr":
        child_mask = (out_mask << expr.params[0]) & ((1 << expr.args[0].width) - 1)
        return _cone(expr.args[0], child_mask)
    if kind == "slice":
        lo, hi = expr.params
        return _cone(expr.args[0], (out_mask << lo) & ((1 << (hi + 1)) - 1))
    if kind == "concat":
        low_width = expr.args[1].width
        s0, i0 = _cone(expr.args[0], out_mask >> low_width)
        s1, i1 = _cone(expr.args[1], out_mask & ((1 << low_width) - 1))
        return s0 | s1, i0 | i1
    if kind == "zext":
        return _cone(expr.args[0], out_mask & ((1 << expr.args[0].width) - 1))
    if kind == "ite":
        s0, i0 = _cone(expr.args[0], 1)
        s1, i1 = _cone(expr.args[1], out_mask)
        s2, i2 = _cone(expr.args[2], out_mask)
        return s0 | s1 | s2, i0 | i1 | i2
    raise AssertionError(f"unhandled kind {kind}")


# ---------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------

_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|0x[0-9a-fA-F]+|0b[01]+|\d+|[():,\[\]=]|\S")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_NUMBER = re.compile(r"(0x[0-9a-fA-F]+|0b[01]+|\d+)\Z")

_ALL_OPS = UNARY_OPS | BINARY_OPS | COMPARE_OPS | SHIFT_OPS | {"slice", "concat", "zext", "ite"}
_OP_ARITY = {"not": 1, "shl": 2, "lshr": 2, "slice": 3, "zext": 2, "ite": 3}
_PARAM_POSITIONS = {"shl": (1,), "lshr": (1,), "slice": (1, 2), "zext": (1,)}


class _Tokens:
    def __init__(self, text: str, line: int):
        self.line = line
        self.items = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(text)]
        self.pos = 0

    def peek(self):
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    def next(self):
        if self.pos >= len(self.items):
            raise SourceError("unexpected end of line", self.line, self.column())
        tok = self.items[self.pos]
        self.pos += 1
        return tok

    def column(self):
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.items[-1][1] + len(self.items[-1][0]) if self.items else 1

    def expect(self, want):
        tok, col = self.next()
        if tok != want:
            raise SourceError(f"expected {want!r}, got {tok!r}", self.line, col)
        return col

    def ident(self, what="identifier"):
        tok, col = self.next()
        if not _IDENT.match(tok):
            raise SourceError(f"expected {what}, got {tok!r}", self.line, col)
        return tok, col

    def number(self, what="number"):
        tok, col = self.next()
        if not _NUMBER.match(tok):
            raise SourceError(f"expected {what}, got {tok!r}", self.line, col)
        return int(tok, 0), col

    def done(self):
        if self.pos < len(self.items):
            tok, col = self.items[self.pos]
            raise SourceError(f"unexpected {tok!r}", self.line, col)


def _parse_expr(tokens: _Tokens) -> Expr:
    tok, col = tokens.next()
    line = tokens.line
    if _NUMBER.match(tok):
        return Expr("const", value=int(tok, 0), line=line, column=col)
    if not _IDENT.match(tok):
        raise SourceError(f"expected expression, got {tok!r}", line, col)
    if tokens.peek() != "(":
        return Expr("ref", name=tok, line=line, column=col)
    if tok not in _ALL_OPS:
        raise SourceError(f"unknown operator {tok!r}", line, col)
    tokens.expect("(")
    args = [_parse_expr(tokens)]
    while tokens.peek() == ",":
        tokens.next()
        args.append(_parse_expr(tokens))
    tokens.expect(")")
    arity = _OP_ARITY.get(tok, 2)
    if len(args) != arity:
        raise SourceError(f"{tok} takes {arity} arguments, got {len(args)}", line, col)
    params = []
    for pos in _PARAM_POSITIONS.get(tok, ()):
        arg = args[pos]
        if arg.kind != "const":
            raise SourceError(f"argument {pos + 1} of {tok} must be a literal", arg.line, arg.column)
        params.append(arg.value)
    kept = [a for idx, a in enumerate(args) if idx not in _PARAM_POSITIONS.get(tok, ())]
    return Expr(tok, tuple(kept), params=tuple(params), line=line, column=col)


def parse_system(text: str) -> SystemIR:
    """Parse and validate a system description.

    Raises :class:`SourceError` with a line/column position on any
    malformed input; never raises anything else.
    """
    name = None
    inputs: list[Variable] = []
    states: list[Variable] = []
    inits: dict[str, int] = {}
    next_sources: dict[str, tuple[Expr, int]] = {}
    label_sources: dict[str, tuple[Expr, int]] = {}
    declared: dict[str, tuple[str, int]] = {}

    input_offset = state_offset = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        tokens = _Tokens(stripped, lineno)
        keyword, col = tokens.next()
        if name is None and keyword != "system":
            raise SourceError("expected 'system'", lineno, col)
        if keyword == "system":
            if name is not None:
                raise SourceError("duplicate 'system' line", lineno, col)
            name, _ = tokens.ident("system name")
            tokens.done()
        elif keyword in ("input", "state"):
            var_name, vcol = tokens.ident("variable name")
            if var_name in declared:
                raise SourceError(f"duplicate declaration of '{var_name}'", lineno, vcol)
            tokens.expect(":")
            tokens.expect("bv")
            tokens.expect("[")
            width, wcol = tokens.number("width")
            tokens.expect("]")
            if width < 1:
                raise SourceError("width must be at least 1", lineno, wcol)
            if keyword == "input":
                declared[var_name] = ("input", width)
                inputs.append(Variable(var_name, width, input_offset))
                input_offset += width
            else:
                tokens.expect("init")
                init, icol = tokens.number("initial value")
                if init >= 1 << width:
                    raise SourceError(
                        f"initial value {init} does not fit in bv[{width}]", lineno, icol
                    )
                declared[var_name] = ("state", width)
                states.append(Variable(var_name, width, state_offset, init))
                state_offset += width
            tokens.done()
        elif keyword in ("next", "label"):
            target, tcol = tokens.ident("name")
            tokens.expect("=")
            expr = _parse_expr(tokens)
            tokens.done()
            if keyword == "next":
                if target not in declared or declared[target][0] != "state":
                    raise SourceError(f"'{target}' is not a declared state variable", lineno, tcol)
                if target in next_sources:
                    raise SourceError(f"duplicate next expression for '{target}'", lineno, tcol)
                next_sources[target] = (expr, tcol)
            else:
                if target in label_sources:
                    raise SourceError(f"duplicate label '{target}'", lineno, tcol)
                if target in declared:
                    raise SourceError(f"label '{target}' clashes with a variable", lineno, tcol)
                label_sources[target] = (expr, tcol)
        else:
            raise SourceError(f"unknown declaration '{keyword}'", lineno, col)

    if name is None:
        raise SourceError("expected 'system'", 1, 1)
    if not inputs:
        raise SourceError("at least one input variable is required", 1, 1)
    if not states:
        raise SourceError("at least one state variable is required", 1, 1)

    by_name = {v.name: ("state", v) for v in states}
    by_name.update({v.name: ("input", v) for v in inputs})

    for var in states:
        if var.name not in next_sources:
            raise SourceError(f"state variable '{var.name}' has no next expression", 1, 1)

    next_exprs = {}
    for var in states:
        expr, _ = next_sources[var.name]
        _resolve(expr, by_name, allow_inputs=True)
        _check_width(expr, var.width)
        next_exprs[var.name] = expr
    labels = {}
    for label_name, (expr, _) in label_sources.items():
        _resolve(expr, by_name, allow_inputs=False)
        _check_width(expr, 1)
        labels[label_name] = expr

    return SystemIR(name, inputs, states, next_exprs, labels)


def _resolve(expr: Expr, by_name, allow_inputs):
    if expr.kind == "ref":
        if expr.name not in by_name:
            raise SourceError(f"undeclared variable '{expr.name}'", expr.line, expr.column)
        role, var = by_name[expr.name]
        if role == "input" and not allow_inputs:
            raise SourceError(
                f"label expressions may only use state variables, not input '{expr.name}'",
                expr.line,
                expr.column,
            )
        expr.kind = role
        expr.width = var.width
        expr.offset = var.offset
        return
    for arg in expr.args:
        _resolve(arg, by_name, allow_inputs)


def _infer_width(expr: Expr) -> int | None:
    """Bottom-up width pass; None where only context can decide."""
    kind = expr.kind
    if kind == "const":
        return expr.width
    if kind in ("state", "input"):
        return expr.width
    if kind == "not":
        return _infer_width(expr.args[0])
    if kind in BINARY_OPS:
        return _merge_widths(expr, _infer_width(expr.args[0]), _infer_width(expr.args[1]))
    if kind in COMPARE_OPS:
        return 1
    if kind in SHIFT_OPS:
        return _infer_width(expr.args[0])
    if kind == "slice":
        lo, hi = expr.params
        if lo > hi:
            raise SourceError(f"empty slice {lo}..{hi}", expr.line, expr.column)
        return hi - lo + 1
    if kind == "concat":
        a = _infer_width(expr.args[0])
        b = _infer_width(expr.args[1])
        if a is None or b is None:
            raise SourceError("cannot infer widths of concat arguments", expr.line, expr.column)
        return a + b
    if kind == "zext":
        return expr.params[0]
    if kind == "ite":
        return _merge_widths(expr, _infer_width(expr.args[1]), _infer_width(expr.args[2]))
    raise AssertionError(f"unhandled kind {kind}")


def _merge_widths(expr: Expr, a: int | None, b: int | None) -> int | None:
    if a is not None and b is not None and a != b:
        raise SourceError(f"width mismatch: bv[{a}] vs bv[{b}]", expr.line, expr.column)
    return a if a is not None else b


def _check_width(expr: Expr, expected: int):
    """Top-down pass: push the context width into every node, filling in
    literal widths and rejecting mismatches."""
    kind = expr.kind
    actual = _infer_width(expr)
    if actual is not None and actual != expected:
        raise SourceError(
            f"width mismatch: expected bv[{expected}], got bv[{actual}]", expr.line, expr.column
        )
    expr.width = expected
    if kind == "const":
        if expr.value >= 1 << expected:
            raise SourceError(
                f"literal {expr.value} does not fit in bv[{expected}]", expr.line, expr.column
            )
        return
    if kind in ("state", "input"):
        return
    if kind == "not":
        _check_width(expr.args[0], expected)
    elif kind in BINARY_OPS:
        _check_width(expr.args[0], expected)
        _check_width(expr.args[1], expected)
    elif kind in COMPARE_OPS:
        child = _merge_widths(expr, _infer_width(expr.args[0]), _infer_width(expr.args[1]))
        if child is None:
            raise SourceError(
                "cannot infer comparison width from two literals", expr.line, expr.column
            )
        _check_width(expr.args[0], child)
        _check_width(expr.args[1], child)
    elif kind in SHIFT_OPS:
        if not 0 <= expr.params[0] < expected:
            raise SourceError(
                f"shift by {expr.params[0]} out of range for bv[{expected}]",
                expr.line,
                expr.column,
            )
        _check_width(expr.args[0], expected)
    elif kind == "slice":
        lo, hi = expr.params
        child = _infer_width(expr.args[0])
        if child is None:
            raise SourceError("cannot slice a literal", expr.line, expr.column)
        if not 0 <= lo <= hi < child:
            raise SourceError(
                f"slice {lo}..{hi} out of range for bv[{child}]", expr.line, expr.column
            )
        _check_width(expr.args[0], child)
    elif kind == "concat":
        _check_width(expr.args[0], _infer_width(expr.args[0]))
        _check_width(expr.args[1], _infer_width(expr.args[1]))
    elif kind == "zext":
        child = _infer_width(expr.args[0])
        if child is None:
            raise SourceError("cannot infer zext argument width", expr.line, expr.column)
        if child > expected:
            raise SourceError(
                f"zext target bv[{expected}] narrower than argument bv[{child}]",
                expr.line,
                expr.column,
            )
        _check_width(expr.args[0], child)
    elif kind == "ite":
        _check_width(expr.args[0], 1)
        _check_width(expr.args[1], expected)
        _check_width(expr.args[2], expected)
    else:
        raise AssertionError(f"unhandled kind {kind}")
