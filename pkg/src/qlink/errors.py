"""Error types shared by the local simulator and the remote protocol.

Error codes travel over the wire, so their integer values are frozen.
"""

from __future__ import annotations

from enum import IntEnum


class ErrorCode(IntEnum):
    INVALID_QUBIT_INDEX = 1
    DUPLICATE_QUBIT = 2
    INVALID_ARITY = 3
    NON_UNITARY_MATRIX = 4
    NON_CPTP_KRAUS = 5
    PROBABILITY_OUT_OF_RANGE = 6
    DENSITY_ONLY_CHANNEL = 7
    DIMENSION_MISMATCH = 8
    UNKNOWN_QUREG = 9
    UNNORMALIZED_STATE = 10
    UNPHYSICAL_DENSITY = 11
    INVALID_NUM_QUBITS = 12
    INDEX_OUT_OF_RANGE = 13
    UNKNOWN_OPCODE = 14
    UNBOUND_PARAMETER = 15
    INVALID_PARAMETER = 16
    WRONG_REGISTER_KIND = 17
    UNSUPPORTED_OPERATION = 18
    TOO_MANY_QUBITS = 19
    RESOURCE_EXHAUSTED = 20
    MALFORMED_MESSAGE = 21
    PROTOCOL_VERSION_MISMATCH = 22
    INTERNAL = 99


class ValidationError(Exception):
    """A rejected user input.

    Attributes:
        code: stable :class:`ErrorCode`.
        message: human readable description.
        gate_index: position of the offending gate in a circuit, or ``None``
            when the error is not tied to a circuit.
    """

    def __init__(self, code: ErrorCode | int, message: str, gate_index: int | None = None):
        self.code = ErrorCode(code)
        self.message = message or self.code.name.lower().replace("_", " ")
        self.gate_index = gate_index
        super().__init__(self._render())

    def _render(self) -> str:
        if self.gate_index is None:
            return f"[{self.code.name}] {self.message}"
        return f"[{self.code.name}] gate {self.gate_index}: {self.message}"

    def at_gate(self, index: int) -> ValidationError:
        """Return a copy tagged with a circuit position."""
        return ValidationError(self.code, self.message, index)

    def __eq__(self, other):
        if not isinstance(other, ValidationError):
            return NotImplemented
        return (self.code, self.message, self.gate_index) == (
            other.code,
            other.message,
            other.gate_index,
        )

    def __hash__(self):
        return hash((self.code, self.message, self.gate_index))

    def __reduce__(self):
        return (ValidationError, (int(self.code), self.message, self.gate_index))


class ResourceError(ValidationError, MemoryError):
    """Register allocation exceeded the host's memory."""

    def __init__(self, message: str, gate_index: int | None = None):
        super().__init__(ErrorCode.RESOURCE_EXHAUSTED, message, gate_index)


class ParseError(ValueError):
    """Syntax error in circuit or Pauli-sum text, with a 1-based location."""

    def __init__(self, message: str, line: int, column: int):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class TransportError(ConnectionError):
    """The connection to a remote environment failed or was interrupted."""
