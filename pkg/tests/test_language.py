import numpy as np
import pytest
from helpers import gates, random_circuit, random_unitary
from hypothesis import given, settings
from hypothesis import strategies as st

from qlink.circuit import Circuit
from qlink.errors import ParseError
from qlink.gates import C, Depol, Gate, H, Op, Param, R, Rx, U, X
from qlink.language import format_gate, parse_circuit, parse_gate, print_circuit


def test_basic_examples():
    assert parse_circuit("H 0 ; C[0] (X 1)") == [H(0), C(0, X(1))]
    g = parse_gate("R[0.3] (X 0, X 1)")
    assert g == R(0.3, [("X", 0), ("X", 1)])
    d = parse_gate("Depol[0.0001] 0 1")
    assert d.op is Op.Depol and d.targets == (0, 1) and d.params == (1e-4,)


def test_separators_comments_and_whitespace():
    text = """
    # Bell pair
    H 0
    C[0](X 1) ; Rx[ -1.5e-1 ] 2   # trailing comment

    C[0,
      1] (Z 2)
    """
    c = parse_circuit(text)
    assert [g.op for g in c] == [Op.H, Op.X, Op.Rx, Op.Z]
    assert c[2].params == (-0.15,)
    assert c[3].controls == (0, 1)


def test_nested_controls_flatten_outermost_first():
    assert parse_gate("C[2] (C[0] (X 1))") == Gate(Op.X, (1,), (2, 0))


def test_matrices_and_slots():
    u = parse_gate("U[0+0i, 1, 1+0i, -0-0i] 2")
    np.testing.assert_array_equal(u.matrix, [[0, 1], [1, 0]])
    k = parse_gate("Kraus[2]([1,0,0,0.5], [0,0.8660254037844386,0,0]) 0")
    assert len(k.kraus) == 2 and k.kraus[1][0, 1] == 0.8660254037844386
    assert parse_gate("Rx[θ3] 0").params == (Param(3),)
    assert parse_gate("Rx[theta3] 0").params == (Param(3),)
    assert parse_gate("U[i, 0, 0, -2.5i] 0").matrix[1, 1] == -2.5j


def test_empty_circuit_prints_empty():
    assert print_circuit(Circuit([])) == ""
    assert parse_circuit("") == []


def test_u_prints_17_significant_digits():
    text = format_gate(U([[0, 1], [1, 0]], 0))
    assert text == "U[0+0i,1+0i,1+0i,0+0i] 0"
    m = random_unitary(np.random.default_rng(0), 2)
    assert parse_gate(format_gate(U(m, 0))) == U(m, 0)


@pytest.mark.parametrize(
    "text,line,column",
    [
        ("H 0\nFoo 1", 2, 1),
        ("H", 1, 2),
        ("Rx 0", 1, 1),
        ("X[0.1] 0", 1, 1),
        ("SWAP 0", 1, 1),
        ("R[0.1] (Q 0)", 1, 9),
        ("U[1,0,0] 0", 1, 1),
        ("Kraus[2]([1,0,0,1]) 0", 1, 1),
        ("C[0] (X 1", 1, 10),
        ("H 0 )", 1, 5),
        ("H 0 1", 1, 1),
    ],
)
def test_syntax_errors_have_locations(text, line, column):
    with pytest.raises(ParseError) as err:
        parse_circuit(text)
    assert (err.value.line, err.value.column) == (line, column)


def test_round_trip_random_circuit_of_fifty_gates():
    rng = np.random.default_rng(1)
    c = random_circuit(rng, 5, 50, measure=True)
    assert parse_circuit(print_circuit(c)) == c


@settings(max_examples=300, deadline=None)
@given(st.lists(gates(), max_size=12))
def test_print_parse_round_trip(circuit):
    text = print_circuit(circuit)
    assert parse_circuit(text) == circuit
    assert print_circuit(parse_circuit(text)) == text


def test_depol_constructor_matches_parse():
    assert parse_gate("Depol[0.25] 3") == Depol(0.25, 3)
    assert parse_gate("C[1](Rx[2] 0)") == C(1, Rx(2.0, 0))
