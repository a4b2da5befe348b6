"""Text form of circuits.

Grammar (EBNF)::

    circuit    = [ gate { sep gate } ] ;
    sep        = ";" | newline ;
    gate       = control | rotation | unitary | kraus | simple ;
    control    = "C" "[" int { "," int } "]" "(" gate ")" ;
    rotation   = "R" "[" param "]" "(" axis int { "," axis int } ")" ;
    unitary    = "U" "[" complex { "," complex } "]" int { int } ;
    kraus      = "Kraus" "[" int "]" "(" matrix { "," matrix } ")" int { int } ;
    matrix     = "[" complex { "," complex } "]" ;
    simple     = name [ "[" param { "," param } "]" ] int { int } ;
    param      = real | ( "θ" | "theta" ) int ;
    axis       = "X" | "Y" | "Z" ;
    complex    = real | [ real ] ( "+" | "-" ) [ real ] "i" ;

Matrices are row-major. Newlines inside brackets are plain whitespace and
``#`` starts a comment running to the end of the line. Nested controls are
flattened, outermost first.

Examples::

    H 0; C[0] (X 1)
    R[0.3] (X 0, X 1)
    Depol[0.0001] 0 1
    U[0+0i,1+0i,1+0i,0+0i] 2
"""

from __future__ import annotations

import re

from qlink.circuit import _FIXED_TARGETS, _PARAM_COUNT, Circuit
from qlink.errors import ParseError
from qlink.gates import PAULI_AXES, Gate, Op, Param

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_REAL = re.compile(rf"[+-]?{_NUM}")
_INT = re.compile(r"\d+")
_IDENT = re.compile(r"[A-Za-zθ_][A-Za-z0-9_]*")
_SLOT = re.compile(r"(?:θ|theta)(\d+)")
_COMPLEX_FULL = re.compile(rf"(?P<re>[+-]?{_NUM})(?P<sign>[+-])(?P<im>{_NUM})?\*?i(?![A-Za-z0-9_])")
_COMPLEX_IMAG = re.compile(rf"(?P<sign>[+-]?)(?P<im>{_NUM})?\*?i(?![A-Za-z0-9_])")

_NAMES = {op.name: op for op in Op}


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.depth = 0

    # position helpers
    def location(self, pos: int | None = None) -> tuple[int, int]:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def error(self, message: str, pos: int | None = None) -> ParseError:
        return ParseError(message, *self.location(pos))

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def skip(self, newlines: bool | None = None) -> None:
        if newlines is None:
            newlines = self.depth > 0
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch == "#":
                end = text.find("\n", self.pos)
                self.pos = len(text) if end < 0 else end
            elif ch in " \t\r" or (newlines and ch == "\n"):
                self.pos += 1
            else:
                break

    def match(self, pattern: re.Pattern):
        self.skip()
        m = pattern.match(self.text, self.pos)
        if m:
            self.pos = m.end()
        return m

    def expect(self, char: str) -> None:
        self.skip()
        if self.peek() != char:
            found = self.peek() or "end of input"
            raise self.error(f"expected {char!r}, found {found!r}")
        self.pos += 1
        if char in "([":
            self.depth += 1
        elif char in ")]":
            self.depth -= 1

    def accept(self, char: str) -> bool:
        self.skip()
        if self.peek() == char:
            self.expect(char)
            return True
        return False


def parse_circuit(text: str) -> Circuit:
    """Parse circuit text into a :class:`Circuit`.

    Raises:
        ParseError: on malformed text, unknown gate names or arity mismatches.
    """
    sc = _Scanner(text)
    gates = []
    while True:
        sc.skip(newlines=True)
        while sc.peek() == ";":
            sc.pos += 1
            sc.skip(newlines=True)
        if sc.eof():
            break
        gates.append(_parse_gate(sc))
        sc.skip(newlines=False)
        if sc.eof():
            break
        if sc.peek() in ";\n":
            sc.pos += 1
            continue
        raise sc.error(f"expected ';' or newline after gate, found {sc.peek()!r}")
    return Circuit(gates)


def parse_gate(text: str) -> Gate:
    """Parse exactly one gate."""
    circuit = parse_circuit(text)
    if len(circuit) != 1:
        raise ParseError(f"expected one gate, found {len(circuit)}", 1, 1)
    return circuit[0]


def _parse_gate(sc: _Scanner) -> Gate:
    sc.skip()
    start = sc.pos
    m = sc.match(_IDENT)
    if not m:
        raise sc.error("expected a gate name")
    name = m.group()

    if name == "C":
        sc.expect("[")
        controls = _int_list(sc)
        sc.expect("]")
        sc.expect("(")
        inner = _parse_gate(sc)
        sc.expect(")")
        return inner.controlled(*controls)

    op = _NAMES.get(name)
    if op is None:
        raise sc.error(f"unknown gate {name!r}", start)

    if op is Op.R:
        sc.expect("[")
        theta = _param(sc)
        sc.expect("]")
        sc.expect("(")
        axes, qubits = [], []
        while True:
            sc.skip()
            at = sc.pos
            am = sc.match(_IDENT)
            if not am or am.group() not in PAULI_AXES:
                raise sc.error("expected a Pauli axis X, Y or Z", at)
            axes.append(am.group())
            qubits.append(_int(sc))
            if not sc.accept(","):
                break
        sc.expect(")")
        return Gate(Op.R, qubits, params=(theta,), paulis=axes)

    if op is Op.U:
        sc.expect("[")
        entries = _complex_list(sc)
        sc.expect("]")
        targets = _targets(sc)
        dim = 2 ** len(targets)
        if len(entries) != dim * dim:
            raise sc.error(
                f"U on {len(targets)} target(s) needs {dim * dim} entries, got {len(entries)}",
                start,
            )
        return Gate(Op.U, targets, matrix=_reshape(entries, dim))

    if op is Op.Kraus:
        sc.expect("[")
        count = _int(sc)
        sc.expect("]")
        sc.expect("(")
        mats = []
        while True:
            sc.expect("[")
            mats.append(_complex_list(sc))
            sc.expect("]")
            if not sc.accept(","):
                break
        sc.expect(")")
        targets = _targets(sc)
        if len(mats) != count:
            raise sc.error(f"Kraus[{count}] lists {len(mats)} operator(s)", start)
        dim = 2 ** len(targets)
        for entries in mats:
            if len(entries) != dim * dim:
                raise sc.error(
                    f"Kraus operators on {len(targets)} target(s) need {dim * dim} entries",
                    start,
                )
        return Gate(Op.Kraus, targets, kraus=tuple(_reshape(e, dim) for e in mats))

    params = []
    sc.skip(newlines=False)
    if sc.peek() == "[":
        sc.expect("[")
        params.append(_param(sc))
        while sc.accept(","):
            params.append(_param(sc))
        sc.expect("]")
    targets = _targets(sc)
    if len(params) != _PARAM_COUNT[op]:
        raise sc.error(f"{name} takes {_PARAM_COUNT[op]} parameter(s), got {len(params)}", start)
    want = _FIXED_TARGETS.get(op)
    if want is not None and len(targets) != want:
        raise sc.error(f"{name} takes {want} target(s), got {len(targets)}", start)
    if op in (Op.Depol, Op.Deph) and len(targets) > 2:
        raise sc.error(f"{name} takes 1 or 2 targets, got {len(targets)}", start)
    return Gate(op, targets, params=params)


def _int(sc: _Scanner) -> int:
    m = sc.match(_INT)
    if not m:
        raise sc.error("expected a non-negative integer")
    return int(m.group())


def _int_list(sc: _Scanner) -> list[int]:
    out = [_int(sc)]
    while sc.accept(","):
        out.append(_int(sc))
    return out


def _targets(sc: _Scanner) -> list[int]:
    out = []
    while True:
        sc.skip()
        if not sc.peek().isdigit():
            break
        out.append(_int(sc))
    if not out:
        raise sc.error("expected target qubit(s)")
    return out


def _param(sc: _Scanner):
    m = sc.match(_SLOT)
    if m:
        return Param(int(m.group(1)))
    m = sc.match(_REAL)
    if not m:
        raise sc.error("expected a real number or parameter slot")
    return float(m.group())


def _complex(sc: _Scanner) -> complex:
    sc.skip()
    for pattern in (_COMPLEX_FULL, _COMPLEX_IMAG):
        m = pattern.match(sc.text, sc.pos)
        if m:
            sc.pos = m.end()
            d = m.groupdict()
            im = float(d["im"]) if d["im"] else 1.0
            if d["sign"] == "-":
                im = -im
            re_ = float(d["re"]) if d.get("re") else 0.0
            return complex(re_, im)
    m = sc.match(_REAL)
    if not m:
        raise sc.error("expected a complex number")
    return complex(float(m.group()), 0.0)


def _complex_list(sc: _Scanner) -> list[complex]:
    out = [_complex(sc)]
    while sc.accept(","):
        out.append(_complex(sc))
    return out


def _reshape(entries: list[complex], dim: int):
    import numpy as np

    return np.array(entries, dtype=complex).reshape(dim, dim)


# -- printing -----------------------------------------------------------------


def _real(x) -> str:
    if isinstance(x, Param):
        return str(x)
    return repr(float(x))


def _cplx(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def _matrix(m) -> str:
    return ",".join(_cplx(z) for z in m.reshape(-1))


def format_gate(gate: Gate) -> str:
    """Canonical text of one gate."""
    inner = _format_uncontrolled(gate)
    if gate.controls:
        return f"C[{','.join(map(str, gate.controls))}] ({inner})"
    return inner


def _format_uncontrolled(gate: Gate) -> str:
    op = gate.op
    targets = " ".join(map(str, gate.targets))
    if op is Op.R:
        factors = ", ".join(f"{a} {q}" for a, q in zip(gate.paulis, gate.targets))
        return f"R[{_real(gate.params[0])}] ({factors})"
    if op is Op.U:
        return f"U[{_matrix(gate.matrix)}] {targets}"
    if op is Op.Kraus:
        mats = ", ".join(f"[{_matrix(k)}]" for k in gate.kraus)
        return f"Kraus[{len(gate.kraus)}] ({mats}) {targets}"
    if gate.params:
        return f"{op.name}[{','.join(_real(p) for p in gate.params)}] {targets}"
    return f"{op.name} {targets}"


def print_circuit(circuit) -> str:
    """Canonical text, one gate per line; ``parse_circuit`` inverts it exactly."""
    return "\n".join(format_gate(g) for g in circuit)
