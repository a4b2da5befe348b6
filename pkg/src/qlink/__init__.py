"""Dense quantum register emulation with a circuit language and a remote protocol."""

from qlink.circuit import Circuit, PauliString, circuit_matrix, validate_circuit
from qlink.env import API, Environment, make_rng
from qlink.errors import (
    ErrorCode,
    ParseError,
    ResourceError,
    TransportError,
    ValidationError,
)
from qlink.gates import (
    SWAP,
    C,
    Damp,
    Deph,
    Depol,
    Gate,
    H,
    Kraus,
    M,
    Op,
    Param,
    Ph,
    R,
    Rx,
    Ry,
    Rz,
    S,
    T,
    U,
    X,
    Y,
    Z,
)
from qlink.language import parse_circuit, print_circuit
from qlink.observables import (
    PauliSum,
    hamiltonian_matrix,
    parse_pauli_sum,
    print_pauli_sum,
)
from qlink.remote import RemoteEnv, Server, connect_environment, serve_environment

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "PauliString",
    "circuit_matrix",
    "validate_circuit",
    "API",
    "Environment",
    "make_rng",
    "ErrorCode",
    "ParseError",
    "ResourceError",
    "TransportError",
    "ValidationError",
    "SWAP",
    "C",
    "Damp",
    "Deph",
    "Depol",
    "Gate",
    "H",
    "Kraus",
    "M",
    "Op",
    "Param",
    "Ph",
    "R",
    "Rx",
    "Ry",
    "Rz",
    "S",
    "T",
    "U",
    "X",
    "Y",
    "Z",
    "parse_circuit",
    "print_circuit",
    "PauliSum",
    "hamiltonian_matrix",
    "parse_pauli_sum",
    "print_pauli_sum",
    "RemoteEnv",
    "Server",
    "connect_environment",
    "serve_environment",
    "__version__",
]
