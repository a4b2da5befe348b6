"""Circuit diagrams as text or SVG.

Each gate occupies the inclusive qubit interval between its lowest and
highest qubit and is placed in the first column after every column already
used on that interval. Qubit 0 is the top wire.
"""

from __future__ import annotations

from html import escape
from typing import Sequence

from qlink.circuit import Circuit
from qlink.gates import Gate, Op

_CHANNEL_LABEL = {Op.Depol: "Dep", Op.Deph: "Dph", Op.Damp: "Amp", Op.Kraus: "K"}


def layout(circuit: Circuit | Sequence[Gate]) -> list[int]:
    """Column index (from 0) of every gate under greedy left packing."""
    last: dict[int, int] = {}
    columns = []
    for gate in circuit:
        lo, hi = min(gate.qubits), max(gate.qubits)
        col = 1 + max((last.get(q, -1) for q in range(lo, hi + 1)), default=-1)
        for q in range(lo, hi + 1):
            last[q] = col
        columns.append(col)
    return columns


def num_columns(circuit) -> int:
    return max(layout(circuit), default=-1) + 1


def _labels(gate: Gate) -> dict[int, str]:
    """Symbol drawn on each target wire."""
    op = gate.op
    if op is Op.R:
        return dict(zip(gate.targets, gate.paulis))
    if op is Op.SWAP:
        return {t: "×" for t in gate.targets}
    if op in _CHANNEL_LABEL:
        return {t: _CHANNEL_LABEL[op] for t in gate.targets}
    if op is Op.X and gate.controls:
        return {gate.targets[0]: "⊕"}
    return {t: op.name for t in gate.targets}


def draw_circuit(circuit: Circuit | Sequence[Gate], num_qubits: int | None = None, fmt: str = "text") -> str:
    """Render ``circuit`` as a text diagram (``fmt="text"``) or SVG 1.1 (``fmt="svg"``)."""
    circuit = circuit if isinstance(circuit, Circuit) else Circuit(list(circuit))
    n = max(circuit.span, num_qubits or 0, 1)
    if fmt == "text":
        return _draw_text(circuit, n)
    if fmt == "svg":
        return _draw_svg(circuit, n)
    raise ValueError(f"unknown diagram format {fmt!r}")


def _draw_text(circuit: Circuit, n: int) -> str:
    cols = layout(circuit)
    ncol = max(cols, default=-1) + 1
    by_col: list[list[Gate]] = [[] for _ in range(ncol)]
    for gate, c in zip(circuit, cols):
        by_col[c].append(gate)

    rows = [[] for _ in range(2 * n - 1)]  # wires on even rows, gaps on odd rows
    for gates in by_col:
        cells = {}
        for gate in gates:
            labels = _labels(gate)
            if gate.is_channel:
                labels = {q: f"~{s}~" for q, s in labels.items()}
            for q in gate.controls:
                labels[q] = "●"
            lo, hi = min(gate.qubits), max(gate.qubits)
            for q in range(lo, hi + 1):
                cells[2 * q] = labels.get(q, "┼")
                if q < hi:
                    cells[2 * q + 1] = "│"
        width = max((len(s) for s in cells.values()), default=1) + 2
        for r in range(2 * n - 1):
            fill = "─" if r % 2 == 0 else " "
            text = cells.get(r)
            if text is None:
                rows[r].append(fill * width)
                continue
            pad = width - len(text)
            left = pad // 2
            rows[r].append(fill * left + text + fill * (pad - left))

    prefix_width = len(f"q{n - 1}: ")
    lines = []
    for r, parts in enumerate(rows):
        head = f"q{r // 2}: ".ljust(prefix_width) if r % 2 == 0 else " " * prefix_width
        tail = "─" if r % 2 == 0 else " "
        lines.append((head + tail + "".join(parts) + tail).rstrip())
    return "\n".join(lines)


_CELL = 48
_PAD = 40


def _draw_svg(circuit: Circuit, n: int) -> str:
    cols = layout(circuit)
    ncol = max(cols, default=-1) + 1
    width = _PAD * 2 + _CELL * max(ncol, 1)
    height = _PAD * 2 + _CELL * (n - 1)

    def x(c):
        return _PAD + _CELL * c + _CELL / 2

    def y(q):
        return _PAD + _CELL * q

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        '<g stroke="black" stroke-width="1.5" font-family="monospace" font-size="14">',
    ]
    for q in range(n):
        out.append(f'<line x1="{_PAD / 2}" y1="{y(q)}" x2="{width - _PAD / 2}" y2="{y(q)}"/>')
        out.append(
            f'<text x="4" y="{y(q) + 5}" stroke="none" fill="black">{q}</text>'
        )
    half = _CELL * 0.35
    for gate, c in zip(circuit, cols):
        cx = x(c)
        lo, hi = min(gate.qubits), max(gate.qubits)
        if lo != hi:
            out.append(f'<line x1="{cx}" y1="{y(lo)}" x2="{cx}" y2="{y(hi)}"/>')
        for q in gate.controls:
            out.append(f'<circle cx="{cx}" cy="{y(q)}" r="5" fill="black"/>')
        style = (
            'fill="#dddddd" stroke-dasharray="4,2"' if gate.is_channel else 'fill="white"'
        )
        for q, label in _labels(gate).items():
            out.append(
                f'<rect x="{cx - half}" y="{y(q) - half}" width="{2 * half}" '
                f'height="{2 * half}" {style}/>'
            )
            out.append(
                f'<text x="{cx}" y="{y(q) + 5}" text-anchor="middle" stroke="none" '
                f'fill="black">{escape(label)}</text>'
            )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out)
