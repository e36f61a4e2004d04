import json
import math

import pytest

from gqco.circuits import (
    Circuit,
    GateSpec,
    ROTATION_ANGLES,
    Vocabulary,
    build_vocabulary,
    circuit_metrics,
    decode_tokens,
    vocabulary_size_formula,
)


def test_vocabulary_size_paper_value():
    assert build_vocabulary(20).size == 1901


def test_vocabulary_size_small_cases():
    assert build_vocabulary(1).size == 20  # 1 + 1 + 18
    assert build_vocabulary(3).size == 82  # 1 + 3 + 54 + 6 + 18


@pytest.mark.parametrize("n", range(1, 11))
def test_vocabulary_formula_matches_enumeration(n):
    vocab = build_vocabulary(n)
    assert vocab.size == vocabulary_size_formula(n)
    # bijective over non-identity entries
    assert len(set(vocab.gates)) == vocab.size
    by_kind = {}
    for g in vocab.gates:
        by_kind[g.kind] = by_kind.get(g.kind, 0) + 1
    assert by_kind["I"] == 1
    assert by_kind["H"] == n
    for kind in ("RX", "RY", "RZ"):
        assert by_kind[kind] == 6 * n
    assert by_kind.get("CNOT", 0) == n * (n - 1)
    assert by_kind.get("RZZ", 0) == 3 * n * (n - 1)


def test_vocabulary_canonical_ordering():
    v = build_vocabulary(3)
    assert v.gates[0] == GateSpec("I", ())
    assert v.gates[1] == GateSpec("H", (0,))
    assert v.gates[3] == GateSpec("H", (2,))
    assert v.gates[4] == GateSpec("RX", (0,), math.pi / 3)
    assert v.gates[5] == GateSpec("RX", (0,), -math.pi / 3)
    assert v.gates[9] == GateSpec("RX", (0,), -math.pi / 5)
    assert v.gates[10] == GateSpec("RX", (1,), math.pi / 3)
    assert v.gates[22] == GateSpec("RY", (0,), math.pi / 3)
    assert v.gates[40] == GateSpec("RZ", (0,), math.pi / 3)
    assert v.gates[58] == GateSpec("CNOT", (0, 1))
    assert v.gates[59] == GateSpec("CNOT", (0, 2))
    assert v.gates[60] == GateSpec("CNOT", (1, 0))
    assert v.gates[63] == GateSpec("CNOT", (2, 1))
    assert v.gates[64] == GateSpec("RZZ", (0, 1), math.pi / 3)
    assert v.gates[76] == GateSpec("RZZ", (1, 2), math.pi / 3)
    assert v.gates[81] == GateSpec("RZZ", (1, 2), -math.pi / 5)


@pytest.mark.parametrize("n", range(1, 11))
def test_token_gate_round_trip(n):
    vocab = build_vocabulary(n)
    for token in range(vocab.size):
        assert vocab.gate_to_token(vocab.token_to_gate(token)) == token


def test_token_out_of_range():
    vocab = build_vocabulary(2)
    with pytest.raises(ValueError):
        vocab.token_to_gate(vocab.size)
    with pytest.raises(ValueError):
        vocab.gate_to_token(GateSpec("H", (5,)))


def test_gate_spec_validation():
    with pytest.raises(ValueError):
        GateSpec("H", (0, 1))
    with pytest.raises(ValueError):
        GateSpec("CNOT", (1, 1))
    with pytest.raises(ValueError):
        GateSpec("RX", (0,))  # missing angle
    with pytest.raises(ValueError):
        GateSpec("H", (0,), angle=0.5)
    with pytest.raises(ValueError):
        GateSpec("RZ", (0,), angle=float("nan"))
    # RZZ pair is stored ascending
    assert GateSpec("RZZ", (2, 0), angle=0.1).qubits == (0, 2)


def test_circuit_metrics_empty():
    c = Circuit(n=3, gates=())
    assert circuit_metrics(c) == {"depth": 0, "cnot_count": 0, "gate_count": 0}


def test_circuit_metrics_parallel_then_cnot():
    c = Circuit(
        n=2,
        gates=(GateSpec("H", (0,)), GateSpec("H", (1,)), GateSpec("CNOT", (0, 1))),
    )
    assert circuit_metrics(c) == {"depth": 2, "cnot_count": 1, "gate_count": 3}


def test_circuit_metrics_sequential_rotations():
    gates = tuple(GateSpec("RY", (2,), math.pi / 3) for _ in range(3))
    diag = (
        GateSpec("RZ", (0,), math.pi / 4),
        GateSpec("RZZ", (0, 1), math.pi / 5),
        GateSpec("RZZ", (1, 2), math.pi / 5),
    )
    c = Circuit(n=3, gates=diag + gates)
    m = circuit_metrics(c)
    assert m["gate_count"] == 6
    assert m["cnot_count"] == 0


def test_decode_tokens_contract():
    vocab = build_vocabulary(3)
    h0 = vocab.gate_to_token(GateSpec("H", (0,)))
    tokens = (0, h0, h0, h0, h0, 0)
    c = decode_tokens(vocab, tokens, n=3)
    assert c.gate_count == 4
    assert c.tokens == tokens
    with pytest.raises(ValueError):
        decode_tokens(vocab, (0, h0, 0), n=3)  # end before 4 gates
    with pytest.raises(ValueError):
        decode_tokens(vocab, (h0, h0), n=3)  # missing start token
    h2 = vocab.gate_to_token(GateSpec("H", (2,)))
    with pytest.raises(ValueError):
        decode_tokens(vocab, (0, h2, h0, h0, h0, 0), n=2)  # qubit out of range
    with pytest.raises(ValueError):
        decode_tokens(vocab, (0,) + (h0,) * 7, n=3)  # exceeds 2n gates


def test_circuit_token_consistency_validation():
    with pytest.raises(ValueError):
        Circuit(n=2, gates=(GateSpec("H", (0,)),), tokens=(0,))
    with pytest.raises(ValueError):
        Circuit(n=1, gates=(GateSpec("H", (1,)),))


def test_circuit_json_round_trip():
    c = Circuit(
        n=3,
        gates=(
            GateSpec("H", (1,)),
            GateSpec("RZZ", (0, 2), ROTATION_ANGLES[2]),
            GateSpec("CNOT", (2, 0)),
            GateSpec("RY", (0,), ROTATION_ANGLES[0]),
        ),
    )
    text = c.to_json()
    parsed = json.loads(text)
    assert parsed[0] == {"kind": "H", "qubits": [1]}
    assert "angle" in parsed[1]
    again = Circuit.from_json(text, n=3)
    assert again.gates == c.gates
