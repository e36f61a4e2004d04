"""Gate vocabulary, circuit containers, token decoding, and circuit metrics.

Token index 0 is the identity and doubles as the start/end token. The
remaining indices enumerate, in canonical order: H per qubit; RX, RY, RZ
blocks (qubit-major, angles +pi/3, -pi/3, +pi/4, -pi/4, +pi/5, -pi/5);
CNOT over all ordered pairs (control-major); RZZ over ascending pairs times
the six angles. The pool size is 4n^2 + 15n + 1.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .ising import N_MAX_SUPPORTED

GATE_KINDS = ("I", "H", "RX", "RY", "RZ", "CNOT", "RZZ")
ROTATION_KINDS = ("RX", "RY", "RZ", "RZZ")
ROTATION_ANGLES = (
    math.pi / 3,
    -math.pi / 3,
    math.pi / 4,
    -math.pi / 4,
    math.pi / 5,
    -math.pi / 5,
)


@dataclass(frozen=True)
class GateSpec:
    """One concrete gate: kind, target qubit(s), and angle for rotations.

    CNOT stores (control, target); RZZ stores its unordered pair ascending.
    Vocabulary tokens restrict rotation angles to ``ROTATION_ANGLES``;
    standalone gates (e.g. QAOA layers) may carry any finite angle.
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit indices in {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {qubits}")
        if self.kind == "I":
            if qubits:
                raise ValueError("identity takes no qubits")
        elif self.kind in ("H", "RX", "RY", "RZ"):
            if len(qubits) != 1:
                raise ValueError(f"{self.kind} takes exactly one qubit")
        elif self.kind == "CNOT":
            if len(qubits) != 2:
                raise ValueError("CNOT takes (control, target)")
        elif self.kind == "RZZ":
            if len(qubits) != 2:
                raise ValueError("RZZ takes two qubits")
            qubits = tuple(sorted(qubits))
        if self.kind in ROTATION_KINDS:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} requires a finite angle")
            object.__setattr__(self, "angle", float(self.angle))
        else:
            if self.angle is not None:
                raise ValueError(f"{self.kind} takes no angle")
        object.__setattr__(self, "kind", str(self.kind))
        object.__setattr__(self, "qubits", qubits)

    @property
    def max_qubit(self) -> int:
        return max(self.qubits) if self.qubits else -1

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "qubits": list(self.qubits)}
        if self.angle is not None:
            d["angle"] = self.angle
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "GateSpec":
        return cls(kind=data["kind"], qubits=tuple(data["qubits"]), angle=data.get("angle"))


IDENTITY_GATE = GateSpec(kind="I", qubits=())
END_TOKEN = 0
MIN_GATES_BEFORE_END = 4


@dataclass(frozen=True)
class Vocabulary:
    """Canonical token-index -> gate table for circuits on up to n qubits."""

    n: int
    gates: tuple[GateSpec, ...]
    _index: dict[GateSpec, int] = field(repr=False, default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.gates)

    def token_to_gate(self, token: int) -> GateSpec:
        if not 0 <= token < self.size:
            raise ValueError(f"token {token} out of range [0, {self.size})")
        return self.gates[token]

    def gate_to_token(self, gate: GateSpec) -> int:
        try:
            return self._index[gate]
        except KeyError:
            raise ValueError(f"gate {gate} is not in the vocabulary") from None

    def max_qubits(self) -> tuple[int, ...]:
        """Highest qubit touched by each token (-1 for the identity)."""
        return tuple(g.max_qubit for g in self.gates)


def vocabulary_size_formula(n: int) -> int:
    return 4 * n * n + 15 * n + 1


def build_vocabulary(n: int) -> Vocabulary:
    """Enumerate the gate pool for n qubits in canonical order."""
    if not 1 <= n <= N_MAX_SUPPORTED:
        raise ValueError(f"n must be in [1, {N_MAX_SUPPORTED}], got {n}")
    gates: list[GateSpec] = [IDENTITY_GATE]
    for q in range(n):
        gates.append(GateSpec(kind="H", qubits=(q,)))
    for kind in ("RX", "RY", "RZ"):
        for q in range(n):
            for angle in ROTATION_ANGLES:
                gates.append(GateSpec(kind=kind, qubits=(q,), angle=angle))
    for control in range(n):
        for target in range(n):
            if target != control:
                gates.append(GateSpec(kind="CNOT", qubits=(control, target)))
    for i in range(n):
        for j in range(i + 1, n):
            for angle in ROTATION_ANGLES:
                gates.append(GateSpec(kind="RZZ", qubits=(i, j), angle=angle))
    assert len(gates) == vocabulary_size_formula(n)
    index = {g: k for k, g in enumerate(gates)}
    return Vocabulary(n=n, gates=tuple(gates), _index=index)


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list on n qubits, optionally with its token sequence.

    ``tokens`` is present for generated circuits: it starts with the start
    token 0 and, when generation stopped via the end token, finishes with a
    trailing 0. Hand-built circuits (QAOA ansatz, test fixtures) carry
    ``tokens=None`` and may exceed the generation length bound.
    """

    n: int
    gates: tuple[GateSpec, ...]
    tokens: tuple[int, ...] | None = None

    def __post_init__(self):
        gates = tuple(self.gates)
        for g in gates:
            if g.max_qubit >= self.n:
                raise ValueError(f"gate {g} touches qubit >= n={self.n}")
        if self.tokens is not None:
            tokens = tuple(int(t) for t in self.tokens)
            if not tokens or tokens[0] != 0:
                raise ValueError("token sequence must begin with the start token 0")
            if sum(1 for t in tokens[1:] if t != END_TOKEN) != len(gates):
                raise ValueError("non-end token count does not match gate count")
            object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "gates", gates)

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    def to_dict(self) -> list[dict]:
        return [g.to_dict() for g in self.gates]

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str, n: int) -> "Circuit":
        gates = tuple(GateSpec.from_dict(d) for d in json.loads(text))
        return cls(n=n, gates=gates)


def decode_tokens(vocab: Vocabulary, tokens, n: int) -> Circuit:
    """Turn a generated token sequence (with start token) into a Circuit.

    Enforces the generation contract: every gate fits on the first n qubits,
    at most 2n gates, and an end token may only terminate the sequence after
    at least ``MIN_GATES_BEFORE_END`` gates.
    """
    tokens = tuple(int(t) for t in tokens)
    if not tokens or tokens[0] != 0:
        raise ValueError("token sequence must begin with the start token 0")
    gates: list[GateSpec] = []
    for pos, t in enumerate(tokens[1:], start=1):
        if t == END_TOKEN:
            if len(gates) < MIN_GATES_BEFORE_END:
                raise ValueError(f"end token at position {pos} before {MIN_GATES_BEFORE_END} gates")
            if pos != len(tokens) - 1:
                raise ValueError("end token must terminate the sequence")
            break
        gate = vocab.token_to_gate(t)
        if gate.max_qubit >= n:
            raise ValueError(f"token {t} touches qubit >= n={n}")
        gates.append(gate)
    if len(gates) > 2 * n:
        raise ValueError(f"{len(gates)} gates exceed the 2n={2 * n} bound")
    return Circuit(n=n, gates=tuple(gates), tokens=tokens)


def circuit_metrics(circuit: Circuit) -> dict[str, int]:
    """Depth (greedy as-soon-as-possible layering), CNOT count, gate count.

    Each gate lands on layer 1 + max(busy layer of its qubits); no gate
    cancellation or commutation is applied.
    """
    busy = [0] * circuit.n
    depth = 0
    cnot = 0
    for g in circuit.gates:
        if not g.qubits:
            continue
        layer = 1 + max(busy[q] for q in g.qubits)
        for q in g.qubits:
            busy[q] = layer
        depth = max(depth, layer)
        if g.kind == "CNOT":
            cnot += 1
    return {"depth": depth, "cnot_count": cnot, "gate_count": circuit.gate_count}
