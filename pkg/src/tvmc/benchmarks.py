"""Built-in benchmark systems.

Two parametric families plus a small fixed machine:

* ``recoverable``/``nonrecoverable`` keep a running maximum ``v`` of a
  V-bit input ``n``, copy a U-bit input ``z`` into an otherwise unused
  register ``u``, and run a free C-bit counter ``c``.  The recoverable
  variant additionally resets ``v`` to zero whenever the reset input
  ``r`` is set, which is what makes ``AG(EF(v_zero))`` hold for it and
  fail for the non-recoverable variant.  ``u`` and ``c`` are deliberate
  noise: they blow up the concrete state space without ever influencing
  the ``v_zero`` label.

* ``landing-gear`` is a 3-bit gear controller driven by a 1-bit lever.
  Its ``msb`` label (gear retracted) can lock at 1: once the machine
  reaches state 101 it loops there forever, so ``EF(AG(msb))`` holds
  and the recovery property ``AG(EF(!msb))`` does not.
"""

from __future__ import annotations

from .errors import ContractViolation
from .system import SystemIR, parse_system

KINDS = ("recoverable", "nonrecoverable", "landing-gear")

_GEAR_BITS = {
    "s2": "slice(gear, 2, 2)",
    "s1": "slice(gear, 1, 1)",
    "s0": "slice(gear, 0, 0)",
}

# Next-state equations of the gear controller, one per bit.  Written so
# that ternary simulation loses exactly the information the concrete
# machine cannot determine: e.g. the low bit of the retracted-and-locked
# region stays unknown instead of collapsing to a constant.
_GEAR_NEXT2 = "or(and(s1, or(s0, lever)), and(s2, not(s1)))"
_GEAR_NEXT1 = (
    "or(or(and(not(s2), or(s1, s0)), and(s1, not(s0))),"
    " and(and(not(s2), not(s1)), and(not(s0), lever)))"
)
_GEAR_NEXT0 = (
    "or(or(and(and(not(s2), not(s1)), not(s0)), and(and(not(s2), s1), s0)),"
    " or(or(and(and(s2, not(s1)), not(s0)), and(and(s2, not(s1)), s0)),"
    " and(and(s2, s1), and(s0, lever))))"
)


def _expand(template: str) -> str:
    for short, long in _GEAR_BITS.items():
        template = template.replace(short, long)
    return template


def landing_gear_text() -> str:
    next2 = _expand(_GEAR_NEXT2)
    next1 = _expand(_GEAR_NEXT1)
    next0 = _expand(_GEAR_NEXT0)
    return (
        "system landing_gear\n"
        "# 3-bit gear controller; msb set means the gear is retracted\n"
        "input lever: bv[1]\n"
        "state gear: bv[3] init 0\n"
        f"next gear = concat({next2}, concat({next1}, {next0}))\n"
        "label msb = slice(gear, 2, 2)\n"
    )


def parametric_text(kind: str, v_bits: int, u_bits: int, c_bits: int) -> str:
    if kind not in ("recoverable", "nonrecoverable"):
        raise ContractViolation(f"unknown parametric benchmark {kind!r}")
    if min(v_bits, u_bits, c_bits) < 1:
        raise ContractViolation("benchmark parameters must be at least 1")
    running_max = "ite(ule(n, v), v, n)"
    next_v = f"ite(eq(r, 1), 0, {running_max})" if kind == "recoverable" else running_max
    return (
        f"system {kind}\n"
        f"input n: bv[{v_bits}]\n"
        f"input z: bv[{u_bits}]\n"
        "input r: bv[1]\n"
        f"state v: bv[{v_bits}] init 0\n"
        f"state u: bv[{u_bits}] init 0\n"
        f"state c: bv[{c_bits}] init 0\n"
        f"next v = {next_v}\n"
        "next u = z\n"
        "next c = add(c, 1)\n"
        "label v_zero = eq(v, 0)\n"
    )


def generate_benchmark(kind: str, v_bits: int = 1, u_bits: int = 1, c_bits: int = 1) -> SystemIR:
    """Build one of the named benchmark systems.

    ``landing-gear`` ignores the numeric parameters.
    """
    if kind == "landing-gear":
        return parse_system(landing_gear_text())
    return parse_system(parametric_text(kind, v_bits, u_bits, c_bits))
