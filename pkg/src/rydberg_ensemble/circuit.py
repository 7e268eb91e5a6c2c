"""Line-oriented circuit language.

::

    qubits 2
    # comment
    ROT 1 3.14159265 0
    CZ 1 2
    measure

Grammar: a ``qubits INT`` header, then one gate per line
(``ROT i theta phi``, ``RZ i theta``, ``CZ i j``, ``CNOT i j``) and an optional
terminal ``measure``.  Indices are 1-based, angles in radians.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import CircuitError
from .protocols import GateOp

_ARITY = {"ROT": ("idx", "float", "float"), "RZ": ("idx", "float"), "CZ": ("idx", "idx"), "CNOT": ("idx", "idx")}


@dataclass(frozen=True)
class Circuit:
    qubit_count: int
    ops: tuple[GateOp, ...] = ()
    measure: bool = False


def _tokens(line: str):
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def parse_circuit(text: str) -> Circuit:
    """Parse circuit text; raises :class:`CircuitError` with line/column on failure."""
    qubits = None
    ops = []
    measure_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        word, col = toks[0]
        if qubits is None:
            if word != "qubits":
                raise CircuitError("missing-header", "circuit must start with 'qubits N'", lineno, col)
            if len(toks) != 2:
                raise CircuitError("syntax-error", "header takes exactly one integer", lineno, col)
            try:
                qubits = int(toks[1][0])
            except ValueError:
                raise CircuitError("syntax-error", f"bad qubit count {toks[1][0]!r}", lineno, toks[1][1]) from None
            if qubits < 1:
                raise CircuitError("syntax-error", "qubit count must be >= 1", lineno, toks[1][1])
            continue
        if measure_line is not None:
            raise CircuitError("syntax-error", f"'measure' on line {measure_line} must be the last directive", lineno, col)
        if word == "measure":
            if len(toks) != 1:
                raise CircuitError("syntax-error", "'measure' takes no arguments", lineno, toks[1][1])
            measure_line = lineno
            continue
        if word == "qubits":
            raise CircuitError("syntax-error", "duplicate header", lineno, col)
        if word not in _ARITY:
            raise CircuitError("syntax-error", f"unknown gate {word!r}", lineno, col)
        kinds = _ARITY[word]
        args = toks[1:]
        if len(args) != len(kinds):
            where = args[len(kinds)][1] if len(args) > len(kinds) else len(line.rstrip()) + 1
            raise CircuitError("syntax-error", f"{word} takes {len(kinds)} arguments, got {len(args)}", lineno, where)
        values = []
        for kind, (tok, tcol) in zip(kinds, args):
            try:
                if kind == "idx":
                    v = int(tok)
                else:
                    v = float(tok)
                    if not math.isfinite(v):
                        raise ValueError
            except ValueError:
                raise CircuitError("syntax-error", f"expected {'an index' if kind == 'idx' else 'a number'}, got {tok!r}", lineno, tcol) from None
            if kind == "idx" and not 1 <= v <= qubits:
                raise CircuitError("index-out-of-range", f"qubit {v} outside 1..{qubits}", lineno, tcol)
            values.append(v)
        idx = [v for k, v in zip(kinds, values) if k == "idx"]
        params = tuple(v for k, v in zip(kinds, values) if k == "float")
        if len(idx) == 2 and idx[0] == idx[1]:
            raise CircuitError("identical-indices", f"{word} needs two distinct qubits", lineno, args[1][1])
        ops.append(GateOp(word, tuple(idx), params))
    if qubits is None:
        raise CircuitError("missing-header", "empty circuit, expected 'qubits N'", 1, 1)
    return Circuit(qubits, tuple(ops), measure_line is not None)


def format_circuit(circuit: Circuit) -> str:
    lines = [f"qubits {circuit.qubit_count}"]
    for op in circuit.ops:
        parts = [op.kind, *(str(q) for q in op.qubits), *(repr(float(p)) for p in op.params)]
        lines.append(" ".join(parts))
    if circuit.measure:
        lines.append("measure")
    return "\n".join(lines) + "\n"
