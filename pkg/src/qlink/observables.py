"""Pauli-sum Hamiltonians and the quantities computed from them.

Text grammar, one term after another::

    sum   = term { ( "+" | "-" | newline ) term } ;
    term  = [ "+" | "-" ] ( real [ "*" pauli ] | pauli ) ;
    pauli = axis int { axis int } ;

e.g. ``"1.0 * Z 0 + 0.5 * X 0 X 1 - 0.25"``. A bare number is an identity
term; a term without a number has coefficient 1. ``#`` starts a comment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Iterator

import numpy as np

from qlink.circuit import MATRIX_QUBIT_CAP, PauliString
from qlink.errors import ErrorCode, ParseError, ValidationError
from qlink.gates import PAULI
from qlink.kernels import apply_pauli_string


@dataclass
class PauliSum:
    """Real-weighted sum of Pauli strings; ``None`` marks the identity."""

    terms: list[tuple[float, PauliString | None]] = field(default_factory=list)

    def __post_init__(self):
        terms = []
        for coeff, string in self.terms:
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise ValueError(f"non-finite coefficient {coeff}")
            if string is not None and not isinstance(string, PauliString):
                string = PauliString(tuple(string))
            terms.append((coeff, string))
        self.terms = terms

    def __len__(self):
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[float, PauliString | None]]:
        return iter(self.terms)

    def __add__(self, other: PauliSum) -> PauliSum:
        return PauliSum(self.terms + list(other.terms))

    def __mul__(self, scale: float) -> PauliSum:
        return PauliSum([(scale * c, s) for c, s in self.terms])

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        if len(self.terms) != len(other.terms):
            return False
        return all(
            a[1] == b[1] and a[0] == b[0] and math.copysign(1, a[0]) == math.copysign(1, b[0])
            for a, b in zip(self.terms, other.terms)
        )

    @property
    def num_qubits(self) -> int:
        """Smallest register the sum fits on."""
        return max((max(s.qubits) + 1 for _, s in self.terms if s is not None), default=0)

    @property
    def one_norm(self) -> float:
        return sum(abs(c) for c, s in self.terms if s is not None)

    @classmethod
    def parse(cls, text: str) -> PauliSum:
        return parse_pauli_sum(text)

    @classmethod
    def load(cls, path: str | Path) -> PauliSum:
        return parse_pauli_sum(Path(path).read_text(encoding="utf-8"))

    def __str__(self):
        return print_pauli_sum(self)


# -- text ---------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)"
    r"|(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<axis>[XYZ])(?![A-Za-z])|(?P<op>[-+*−])"
)


def _tokenize(text: str):
    pos = 0
    line, line_start = 1, 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            out.append(("nl", value, line, col))
            line, line_start = line + 1, m.end()
        elif kind == "op":
            out.append(("op", "-" if value == "−" else value, line, col))
        elif kind not in ("ws", "comment"):
            out.append((kind, value, line, col))
        pos = m.end()
    return out


def parse_pauli_sum(text: str) -> PauliSum:
    """Parse Pauli-sum text.

    Raises:
        ParseError: on malformed input or a qubit repeated within one term.
    """
    tokens = _tokenize(text)
    i = 0
    terms = []
    end_line = text.count("\n") + 1
    end_col = len(text) - (text.rfind("\n") + 1) + 1

    def peek(k=0):
        j = i + k
        return tokens[j] if j < len(tokens) else ("eof", "", end_line, end_col)

    def skip_newlines():
        nonlocal i
        while peek()[0] == "nl":
            i += 1

    skip_newlines()
    first = True
    while peek()[0] != "eof":
        sign = 1.0
        kind, value, line, col = peek()
        if kind == "op" and value in "+-":
            sign = -1.0 if value == "-" else 1.0
            i += 1
            skip_newlines()
        elif not first and tokens[i - 1][0] != "nl":
            raise ParseError(f"expected '+' or '-' between terms, found {value!r}", line, col)
        kind, value, line, col = peek()
        coeff = 1.0
        has_coeff = False
        if kind == "num":
            coeff = float(value)
            has_coeff = True
            i += 1
            if peek()[:2] == ("op", "*"):
                i += 1
            elif peek()[0] == "axis":
                raise ParseError("expected '*' between coefficient and Pauli factors", *peek()[2:])
            else:
                terms.append((sign * coeff, None))
                first = False
                skip_newlines()
                continue
        factors = []
        while peek()[0] == "axis":
            axis = peek()[1]
            i += 1
            k2, v2, l2, c2 = peek()
            if k2 != "num" or not v2.isdigit():
                raise ParseError("expected a qubit index after Pauli axis", l2, c2)
            factors.append((axis, int(v2)))
            i += 1
        if not factors:
            what = "Pauli factors" if has_coeff else "a coefficient or Pauli factor"
            raise ParseError(f"expected {what}, found {value!r}", *peek()[2:])
        qubits = [q for _, q in factors]
        if len(set(qubits)) != len(qubits):
            raise ParseError("a Pauli string repeats a qubit", line, col)
        terms.append((sign * coeff, PauliString(tuple(factors))))
        first = False
        skip_newlines()
    return PauliSum(terms)


def print_pauli_sum(h: PauliSum) -> str:
    """Canonical text; ``parse_pauli_sum`` reproduces ``h`` exactly."""
    parts = []
    for k, (coeff, string) in enumerate(h.terms):
        negative = math.copysign(1.0, coeff) < 0
        mag = format(-coeff if negative else coeff, ".17g")
        body = mag if string is None else f"{mag} * {string}"
        if k == 0:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f"{'-' if negative else '+'} {body}")
    return " ".join(parts)


# -- dense oracle ---------------------------------------------------------------


def pauli_string_matrix(string: PauliString | None, num_qubits: int) -> np.ndarray:
    axes = ["I"] * num_qubits
    if string is not None:
        for a, q in string.factors:
            axes[q] = a
    # qubit 0 is least significant, so it is the rightmost Kronecker factor
    return reduce(np.kron, [PAULI[a] for a in reversed(axes)], np.eye(1, dtype=complex))


def hamiltonian_matrix(h: PauliSum, num_qubits: int) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix of ``h``."""
    if num_qubits > MATRIX_QUBIT_CAP:
        raise ValidationError(
            ErrorCode.TOO_MANY_QUBITS, f"dense matrices are capped at {MATRIX_QUBIT_CAP} qubits"
        )
    _check_range(h, num_qubits)
    dim = 2**num_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, string in h.terms:
        out += coeff * pauli_string_matrix(string, num_qubits)
    return out


def _check_range(h: PauliSum, num_qubits: int) -> None:
    if h.num_qubits > num_qubits:
        raise ValidationError(
            ErrorCode.INVALID_QUBIT_INDEX,
            f"Hamiltonian acts on qubit {h.num_qubits - 1} of a {num_qubits}-qubit register",
        )


# -- register-level routines (called by Environment) ----------------------------


def expectation(
    amps: np.ndarray, work: np.ndarray, num_qubits: int, density: bool, h: PauliSum
) -> float:
    """``<psi|H|psi>`` or ``Tr(H rho)`` streamed term by term through ``work``."""
    _check_range(h, num_qubits)
    n = num_qubits
    dim = 2**n
    total = 0.0 + 0.0j
    if density:
        norm = np.trace(amps.reshape(dim, dim))
    else:
        norm = np.vdot(amps, amps)
    for coeff, string in h.terms:
        if string is None:
            total += coeff * norm
            continue
        np.copyto(work, amps)
        if density:
            # left-multiply: Pauli acts on the row bits
            apply_pauli_string(work, 2 * n, string.axes, [q + n for q in string.qubits])
            total += coeff * np.trace(work.reshape(dim, dim))
        else:
            apply_pauli_string(work, n, string.axes, string.qubits)
            total += coeff * np.vdot(amps, work)
    return float(total.real)


def apply_sum(amps_in: np.ndarray, num_qubits: int, h: PauliSum) -> np.ndarray:
    """Return ``H |psi>`` as a new array."""
    _check_range(h, num_qubits)
    out = np.zeros_like(amps_in)
    work = np.empty_like(amps_in)
    for coeff, string in h.terms:
        np.copyto(work, amps_in)
        if string is not None:
            apply_pauli_string(work, num_qubits, string.axes, string.qubits)
        out += coeff * work
    return out


def heisenberg_pair() -> PauliSum:
    """``X0 X1 + Y0 Y1 + Z0 Z1``, whose singlet ground energy is -3."""
    return parse_pauli_sum("X 0 X 1 + Y 0 Y 1 + Z 0 Z 1")


def transverse_pair() -> PauliSum:
    """``Z0 Z1 + 0.5 X0``: the small test Hamiltonian used by the demos."""
    return parse_pauli_sum("1.0 * Z 0 Z 1 + 0.5 * X 0")


def term_strings(h: PauliSum) -> list[PauliString]:
    return [s for _, s in h.terms if s is not None]
