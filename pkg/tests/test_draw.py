import xml.etree.ElementTree as ET

import numpy as np
import pytest
from helpers import random_circuit

from qlink.bench import gen_benchmark_circuit
from qlink.draw import draw_circuit, layout, num_columns
from qlink.gates import SWAP, C, Depol, H, X, Z
from qlink.language import parse_circuit

SVG = "{http://www.w3.org/2000/svg}"


def test_bell_pair_text():
    text = draw_circuit([H(0), C(0, X(1))])
    assert text.splitlines() == [
        "q0: ──H──●──",
        "         │",
        "q1: ─────⊕──",
    ]


def test_mixed_circuit_text():
    c = parse_circuit("H 0; C[0](X 1); Depol[0.1] 0 1; R[0.2](X 0, Z 2); M 1; U[1,0,0,1] 2")
    assert draw_circuit(c) == "\n".join(
        [
            "q0: ──H──●──~Dep~──X─────",
            "         │    │    │",
            "q1: ─────⊕──~Dep~──┼──M──",
            "                   │",
            "q2: ───────────────Z──U──",
        ]
    )


def test_disjoint_gates_share_a_column():
    assert layout([H(0), X(2), SWAP(0, 1), Z(3)]) == [0, 0, 1, 0]
    # a gate spanning 0..2 blocks the middle wire too
    assert layout([C(0, X(2)), H(1)]) == [0, 1]


def test_benchmark_circuit_column_count():
    assert num_columns(gen_benchmark_circuit(5, 2, seed=0)) == 18
    assert num_columns([]) == 0


def test_no_two_gates_overlap_in_a_column():
    rng = np.random.default_rng(0)
    for _ in range(30):
        c = random_circuit(rng, 5, 25, measure=True)
        occupied = set()
        for gate, col in zip(c, layout(c)):
            span = range(min(gate.qubits), max(gate.qubits) + 1)
            for q in span:
                assert (col, q) not in occupied
                occupied.add((col, q))


def test_layout_respects_gate_order_on_shared_wires():
    rng = np.random.default_rng(1)
    c = random_circuit(rng, 4, 40)
    cols = layout(c)
    for i, a in enumerate(c):
        for j in range(i + 1, len(c)):
            b = c[j]
            if set(range(min(a.qubits), max(a.qubits) + 1)) & set(b.qubits):
                assert cols[j] > cols[i]


def test_register_size_can_exceed_span():
    lines = draw_circuit([H(0)], num_qubits=3).splitlines()
    assert len(lines) == 5 and lines[-1].startswith("q2:")
    assert draw_circuit([]) == "q0: ──"


def test_svg_is_well_formed():
    c = parse_circuit("H 0; C[0](X 1); Depol[0.1] 0 1; SWAP 1 2; Kraus[1]([1,0,0,1]) 2; M 0")
    root = ET.fromstring(draw_circuit(c, fmt="svg").encode())
    assert root.tag == SVG + "svg"
    texts = [t.text for t in root.iter(SVG + "text")]
    assert {"0", "1", "2", "H", "M"} <= set(texts)
    assert len(list(root.iter(SVG + "circle"))) == 1
    dashed = [r for r in root.iter(SVG + "rect") if r.get("stroke-dasharray")]
    assert len(dashed) == 3  # two Depol boxes and one Kraus box


def test_unknown_format_rejected():
    with pytest.raises(ValueError):
        draw_circuit([H(0)], fmt="png")


def test_depol_renders_on_both_wires():
    text = draw_circuit([Depol(0.1, 0, 2)])
    lines = text.splitlines()
    assert "~Dep~" in lines[0] and "~Dep~" in lines[4] and "┼" in lines[2]
