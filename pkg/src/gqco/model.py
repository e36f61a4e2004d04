"""Encoder-decoder circuit generator with a qubit-gated mixture of experts.

The encoder stacks graph-transformer convolutions over the problem graph:

    v_i'  = LayerNorm(W1 v_i + sum_j alpha_ij (W2 v_j + W3 e_ij))
    alpha_ij = softmax_j((W4 v_i)^T (W5 v_j + W6 e_ij) / sqrt(d_head))
    v_i'' = LayerNorm(v_i' + W8 GELU(W7 v_i'))

computed per attention head and concatenated before the first LayerNorm.
The decoder is a pre-norm GPT-style stack with causal self-attention and
cross-attention over the encoder output. Its feed-forward blocks and the
final vocabulary projection are per-expert, selected deterministically by
the problem's qubit count; attention weights and the encoder are shared.

Generation contract: sequences start with token 0, every gate must fit on
the first n qubits, the end token (0) is only available once at least
``min_gates_before_end`` gates exist, and generation stops at 2n gates.
"""
from __future__ import annotations

import copy
import io
import json
import math
import struct
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import torch
from torch import nn

from .circuits import Circuit, MIN_GATES_BEFORE_END, Vocabulary, build_vocabulary, decode_tokens
from .exceptions import ConfigurationError
from .graph import EDGE_FEATURE_DIM, NODE_FEATURE_DIM, ProblemGraph, embed
from .ising import IsingProblem, N_MAX_SUPPORTED

VOCAB_ORDERING_VERSION = 1
CHECKPOINT_MAGIC = b"GQCO"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    """Architecture sizes. Defaults are the desk-scale preset."""

    d_model: int = 64
    d_ff: int = 256
    n_layers_enc: int = 4
    n_layers_dec: int = 4
    n_heads: int = 4
    n_max_supported: int = N_MAX_SUPPORTED
    layer_norm_eps: float = 1e-5
    dropout: float = 0.0

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ConfigurationError(
                f"d_model={self.d_model} not divisible by n_heads={self.n_heads}"
            )
        if not 1 <= self.n_max_supported <= N_MAX_SUPPORTED:
            raise ConfigurationError(f"n_max_supported must be in [1, {N_MAX_SUPPORTED}]")
        if self.dropout != 0.0:
            raise ConfigurationError("only dropout=0.0 is supported")

    @classmethod
    def paper_scale(cls) -> "ModelConfig":
        return cls(d_model=256, d_ff=1024, n_layers_enc=12, n_layers_dec=12, n_heads=8)

    @property
    def max_positions(self) -> int:
        # start token plus up to 2n gates
        return 1 + 2 * self.n_max_supported


@dataclass(frozen=True)
class SamplingConfig:
    """Decoding knobs: temperature, termination rule, optional greedy mode.

    ``restrict_tokens`` narrows the candidate pool to the given global token
    ids (the end token is always kept); it exists for enumeration tests and
    diagnostics, not for training.
    """

    temperature: float = 1.0
    min_gates_before_end: int = MIN_GATES_BEFORE_END
    end_token: int = 0
    greedy: bool = False
    restrict_tokens: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigurationError(f"temperature must be > 0, got {self.temperature}")
        if self.end_token != 0:
            raise ConfigurationError("only end_token=0 (identity) is supported")
        if self.min_gates_before_end < 0:
            raise ConfigurationError("min_gates_before_end must be >= 0")


@dataclass
class SampleBatch:
    """Result of sampling a batch of circuits for one problem."""

    problem: IsingProblem
    tokens: torch.Tensor  # (B, 1 + 2n) int64; [start, gates..., end, 0-padding]
    gate_counts: torch.Tensor  # (B,) int64
    ended_by_end: torch.Tensor  # (B,) bool
    log_probs: torch.Tensor  # (B,) float64, computed at sampling time

    def circuit_at(self, vocab: Vocabulary, index: int) -> Circuit:
        max_gates = self.tokens.shape[1] - 1
        row = self.tokens[index].tolist()
        g = int(self.gate_counts[index])
        seq = row[: 1 + g] + ([0] if g < max_gates else [])
        return decode_tokens(vocab, seq, self.problem.n)

    def circuits(self, vocab: Vocabulary) -> list[Circuit]:
        return [self.circuit_at(vocab, i) for i in range(self.tokens.shape[0])]


class GraphTransformerConv(nn.Module):
    """One multi-head graph-transformer convolution plus feed-forward block."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.d_model
        self.n_heads = cfg.n_heads
        self.d_head = d // cfg.n_heads
        self.w1 = nn.Linear(d, d, bias=False)
        self.w2 = nn.Linear(d, d, bias=False)
        self.w3 = nn.Linear(d, d, bias=False)
        self.w4 = nn.Linear(d, d, bias=False)
        self.w5 = nn.Linear(d, d, bias=False)
        self.w6 = nn.Linear(d, d, bias=False)
        self.norm1 = nn.LayerNorm(d, eps=cfg.layer_norm_eps)
        self.w7 = nn.Linear(d, cfg.d_ff, bias=False)
        self.w8 = nn.Linear(cfg.d_ff, d, bias=False)
        self.norm2 = nn.LayerNorm(d, eps=cfg.layer_norm_eps)
        self.gelu = nn.GELU()  # exact erf form

    def forward(self, x: torch.Tensor, e: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        """x: (n, d) node states; e: (n, n, d) projected edge features with
        e[i, j] feeding messages j -> i; adj: (n, n) bool with adj[i, j]
        true when j is a neighbor of i."""
        n, d = x.shape
        h, dh = self.n_heads, self.d_head
        q = self.w4(x).view(n, h, dh)
        k = self.w5(x).view(n, h, dh)
        v = self.w2(x).view(n, h, dh)
        ek = self.w6(e).view(n, n, h, dh)
        ev = self.w3(e).view(n, n, h, dh)
        keys = k.unsqueeze(0) + ek  # (i, j, h, dh)
        scores = (q.unsqueeze(1) * keys).sum(-1) / math.sqrt(dh)  # (i, j, h)
        mask = adj.unsqueeze(-1)
        has_neighbor = adj.any(dim=1).view(n, 1, 1)
        scores = scores.masked_fill(~mask, float("-inf"))
        # rows without neighbors would softmax to NaN; zero them instead
        scores = torch.where(has_neighbor, scores, torch.zeros_like(scores))
        alpha = torch.softmax(scores, dim=1) * mask
        values = v.unsqueeze(0) + ev  # (i, j, h, dh)
        message = (alpha.unsqueeze(-1) * values).sum(dim=1).reshape(n, d)
        out = self.norm1(self.w1(x) + message)
        return self.norm2(out + self.w8(self.gelu(self.w7(out))))


class GraphEncoder(nn.Module):
    """Input projections plus a stack of graph-transformer convolutions."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.node_in = nn.Linear(NODE_FEATURE_DIM, cfg.d_model)
        self.edge_in = nn.Linear(EDGE_FEATURE_DIM, cfg.d_model)
        self.layers = nn.ModuleList(GraphTransformerConv(cfg) for _ in range(cfg.n_layers_enc))

    def forward(self, nodes: torch.Tensor, edges: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        x = self.node_in(nodes)
        e = self.edge_in(edges)
        for layer in self.layers:
            x = layer(x, e, adj)
        return x


class MultiHeadAttention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.d_model
        self.n_heads = cfg.n_heads
        self.d_head = d // cfg.n_heads
        self.q_proj = nn.Linear(d, d)
        self.k_proj = nn.Linear(d, d)
        self.v_proj = nn.Linear(d, d)
        self.out_proj = nn.Linear(d, d)

    def project_kv(self, x_kv: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        b, lk, _ = x_kv.shape
        h, dh = self.n_heads, self.d_head
        k = self.k_proj(x_kv).view(b, lk, h, dh).transpose(1, 2)
        v = self.v_proj(x_kv).view(b, lk, h, dh).transpose(1, 2)
        return k, v

    def attend(self, x_q: torch.Tensor, k: torch.Tensor, v: torch.Tensor, causal: bool = False) -> torch.Tensor:
        b, lq, d = x_q.shape
        h, dh = self.n_heads, self.d_head
        lk = k.shape[2]
        q = self.q_proj(x_q).view(b, lq, h, dh).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(dh)  # (b, h, lq, lk)
        if causal and lq > 1:
            mask = torch.ones(lq, lk, dtype=torch.bool, device=x_q.device).tril(lk - lq)
            scores = scores.masked_fill(~mask, float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, lq, d)
        return self.out_proj(out)

    def forward(self, x_q: torch.Tensor, x_kv: torch.Tensor, causal: bool = False) -> torch.Tensor:
        k, v = self.project_kv(x_kv)
        return self.attend(x_q, k, v, causal=causal)


class FeedForward(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.fc1 = nn.Linear(cfg.d_model, cfg.d_ff)
        self.fc2 = nn.Linear(cfg.d_ff, cfg.d_model)
        self.gelu = nn.GELU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc2(self.gelu(self.fc1(x)))


class DecoderLayer(nn.Module):
    """Pre-norm decoder block; the feed-forward module is supplied per call
    because it belongs to the active expert."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.d_model
        self.self_attn = MultiHeadAttention(cfg)
        self.cross_attn = MultiHeadAttention(cfg)
        self.norm1 = nn.LayerNorm(d, eps=cfg.layer_norm_eps)
        self.norm2 = nn.LayerNorm(d, eps=cfg.layer_norm_eps)
        self.norm3 = nn.LayerNorm(d, eps=cfg.layer_norm_eps)

    def forward(self, x: torch.Tensor, memory: torch.Tensor, ff: FeedForward) -> torch.Tensor:
        a = self.norm1(x)
        x = x + self.self_attn(a, a, causal=True)
        x = x + self.cross_attn(self.norm2(x), memory)
        return x + ff(self.norm3(x))


class Expert(nn.Module):
    """Per-size weights: one feed-forward per decoder layer plus the
    vocabulary projection."""

    def __init__(self, cfg: ModelConfig, vocab_size: int):
        super().__init__()
        self.feed_forwards = nn.ModuleList(FeedForward(cfg) for _ in range(cfg.n_layers_dec))
        self.out_proj = nn.Linear(cfg.d_model, vocab_size)


class GQCOModel(nn.Module):
    """Conditional circuit generator: problem graph in, gate tokens out."""

    def __init__(self, config: ModelConfig | None = None, expert_sizes: tuple[int, ...] = (3,)):
        super().__init__()
        self.config = config or ModelConfig()
        self.vocab = build_vocabulary(self.config.n_max_supported)
        d = self.config.d_model
        self.encoder = GraphEncoder(self.config)
        self.token_embedding = nn.Embedding(self.vocab.size, d)
        self.position_embedding = nn.Embedding(self.config.max_positions, d)
        self.decoder_layers = nn.ModuleList(
            DecoderLayer(self.config) for _ in range(self.config.n_layers_dec)
        )
        self.final_norm = nn.LayerNorm(d, eps=self.config.layer_norm_eps)
        self.experts = nn.ModuleDict()
        nn.init.normal_(self.token_embedding.weight, std=0.02)
        nn.init.normal_(self.position_embedding.weight, std=0.02)
        for n in expert_sizes:
            self.add_expert(n, init="fresh")
        token_max_qubit = torch.tensor([g.max_qubit for g in self.vocab.gates], dtype=torch.long)
        self.register_buffer("token_max_qubit", token_max_qubit, persistent=False)
        self._valid_token_cache: dict[tuple[int, tuple[int, ...] | None], torch.Tensor] = {}
        self.to(torch.float64)

    # ---- expert bank -------------------------------------------------

    @property
    def expert_sizes(self) -> tuple[int, ...]:
        return tuple(sorted(int(k) for k in self.experts))

    def select_expert(self, n: int) -> Expert:
        key = str(int(n))
        if key not in self.experts:
            raise ConfigurationError(
                f"no expert registered for n={n}; available sizes: {self.expert_sizes}"
            )
        return self.experts[key]

    def add_expert(self, n: int, init: str = "copy") -> None:
        """Register the expert for problem size n.

        ``init="copy"`` clones the weights of the nearest smaller registered
        expert (curriculum warm start); ``init="fresh"`` samples new weights.
        """
        key = str(int(n))
        if key in self.experts:
            raise ConfigurationError(f"expert for n={n} already registered")
        if not 1 <= n <= self.config.n_max_supported:
            raise ConfigurationError(
                f"expert size {n} outside supported range [1, {self.config.n_max_supported}]"
            )
        if init not in ("copy", "fresh"):
            raise ConfigurationError(f"unknown expert init policy {init!r}")
        expert = Expert(self.config, self.vocab.size)
        nn.init.normal_(expert.out_proj.weight, std=0.02)
        nn.init.zeros_(expert.out_proj.bias)
        expert = expert.to(self.token_embedding.weight.dtype)
        smaller = [m for m in self.expert_sizes if m < n]
        if init == "copy" and smaller:
            source = self.select_expert(max(smaller))
            expert.load_state_dict(copy.deepcopy(source.state_dict()))
        self.experts[key] = expert

    # ---- tensors and masks -------------------------------------------

    def _dtype(self) -> torch.dtype:
        return self.token_embedding.weight.dtype

    def graph_tensors(self, graph: ProblemGraph) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        n = graph.n_nodes
        dtype = self._dtype()
        nodes = torch.from_numpy(np.ascontiguousarray(graph.node_features)).to(dtype)
        edges = torch.zeros(n, n, EDGE_FEATURE_DIM, dtype=dtype)
        adj = torch.zeros(n, n, dtype=torch.bool)
        for row, (i, j) in enumerate(graph.edge_index):
            edges[i, j] = torch.from_numpy(graph.edge_features[row]).to(dtype)
            adj[i, j] = True
        return nodes, edges, adj

    def encode(self, problem_or_graph: IsingProblem | ProblemGraph) -> torch.Tensor:
        """Encoder memory, one row per node in index order."""
        graph = (
            problem_or_graph
            if isinstance(problem_or_graph, ProblemGraph)
            else embed(problem_or_graph)
        )
        nodes, edges, adj = self.graph_tensors(graph)
        return self.encoder(nodes, edges, adj)

    def valid_tokens(self, n: int, restrict: tuple[int, ...] | None = None) -> torch.Tensor:
        """Ascending global token ids usable for problems of size n."""
        key = (int(n), restrict)
        cached = self._valid_token_cache.get(key)
        if cached is None:
            keep = self.token_max_qubit < n
            if restrict is not None:
                chosen = torch.zeros_like(keep)
                chosen[list(restrict)] = True
                chosen[0] = True  # end token always available
                keep = keep & chosen
            cached = torch.nonzero(keep, as_tuple=False).flatten()
            self._valid_token_cache[key] = cached
        return cached

    # ---- decoder forward ---------------------------------------------

    def _decoder_hidden(self, tokens: torch.Tensor, memory: torch.Tensor, expert: Expert) -> torch.Tensor:
        b, length = tokens.shape
        if length > self.config.max_positions:
            raise ValueError(f"sequence length {length} exceeds {self.config.max_positions}")
        positions = torch.arange(length, device=tokens.device)
        x = self.token_embedding(tokens) + self.position_embedding(positions)
        mem = memory.unsqueeze(0).expand(b, -1, -1)
        for layer, ff in zip(self.decoder_layers, expert.feed_forwards):
            x = layer(x, mem, ff)
        return self.final_norm(x)

    def _subspace_logits(
        self,
        tokens: torch.Tensor,
        memory: torch.Tensor,
        n: int,
        min_gates: int = MIN_GATES_BEFORE_END,
        restrict: tuple[int, ...] | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Masked logits over the valid-token subspace for every position.

        Returns (logits (B, L, K), valid token ids (K,)). Position p holds
        the prediction for sequence slot p + 1; the end token (local index 0)
        is masked while fewer than ``min_gates`` gates have been generated.
        """
        expert = self.select_expert(n)
        valid = self.valid_tokens(n, restrict)
        hidden = self._decoder_hidden(tokens, memory, expert)
        weight = expert.out_proj.weight[valid]
        bias = expert.out_proj.bias[valid]
        logits = hidden @ weight.T + bias
        cut = min(min_gates, logits.shape[1])
        if cut > 0:
            # local index 0 is the end token; position p has p gates so far
            mask = torch.zeros_like(logits, dtype=torch.bool)
            mask[:, :cut, 0] = True
            logits = logits.masked_fill(mask, float("-inf"))
        return logits, valid

    def decode_logits(
        self,
        tokens_prefix,
        memory: torch.Tensor,
        n: int,
        min_gates: int = MIN_GATES_BEFORE_END,
    ) -> torch.Tensor:
        """Next-token logits over the full vocabulary for one prefix.

        Tokens touching qubits >= n and (while fewer than ``min_gates`` gates
        exist) the end token carry -inf.
        """
        tokens = torch.as_tensor(tokens_prefix, dtype=torch.long)
        if tokens.dim() == 1:
            tokens = tokens.unsqueeze(0)
        if tokens[0, 0].item() != 0:
            raise ValueError("prefix must begin with the start token 0")
        with torch.no_grad():
            logits, valid = self._subspace_logits(tokens, memory, n, min_gates=min_gates)
            canvas = torch.full(
                (tokens.shape[0], self.vocab.size), float("-inf"), dtype=logits.dtype
            )
            canvas[:, valid] = logits[:, -1, :]
        return canvas.squeeze(0)

    # ---- sampling and scoring ----------------------------------------

    def sample_circuits(
        self,
        problem: IsingProblem,
        num_samples: int,
        cfg: SamplingConfig,
        generator: torch.Generator | None = None,
        memory: torch.Tensor | None = None,
    ) -> SampleBatch:
        """Draw circuits autoregressively; log-probs follow softmax(z / T)."""
        n = problem.n
        max_gates = 2 * n
        if max_gates < cfg.min_gates_before_end:
            raise ConfigurationError(
                f"2n={max_gates} cannot accommodate min_gates_before_end={cfg.min_gates_before_end}"
            )
        with torch.no_grad():
            if memory is None:
                memory = self.encode(problem)
            b = num_samples
            tokens = torch.zeros(b, 1 + max_gates, dtype=torch.long)
            log_probs = torch.zeros(b, dtype=self._dtype())
            active = torch.ones(b, dtype=torch.bool)
            gate_counts = torch.zeros(b, dtype=torch.long)
            for pos in range(1, max_gates + 1):
                if not bool(active.any()):
                    break
                logits, valid = self._subspace_logits(
                    tokens[:, :pos], memory, n,
                    min_gates=cfg.min_gates_before_end, restrict=cfg.restrict_tokens,
                )
                z = logits[:, -1, :] / cfg.temperature
                log_p = torch.log_softmax(z, dim=-1)
                if cfg.greedy:
                    local = torch.argmax(z, dim=-1)
                else:
                    local = torch.multinomial(torch.softmax(z, dim=-1), 1, generator=generator).squeeze(1)
                step_logp = log_p.gather(1, local.unsqueeze(1)).squeeze(1)
                chosen = valid[local]
                chosen = torch.where(active, chosen, torch.zeros_like(chosen))
                tokens[:, pos] = chosen
                log_probs = log_probs + torch.where(active, step_logp, torch.zeros_like(step_logp))
                is_gate = active & (chosen != 0)
                gate_counts = gate_counts + is_gate.long()
                active = active & (chosen != 0)
        return SampleBatch(
            problem=problem,
            tokens=tokens,
            gate_counts=gate_counts,
            ended_by_end=gate_counts < max_gates,
            log_probs=log_probs,
        )

    def sample_circuit(
        self,
        problem: IsingProblem,
        cfg: SamplingConfig,
        generator: torch.Generator | None = None,
    ) -> tuple[Circuit, float]:
        batch = self.sample_circuits(problem, 1, cfg, generator)
        return batch.circuits(self.vocab)[0], float(batch.log_probs[0])

    def generate(
        self,
        problem: IsingProblem,
        num_samples: int,
        temperature: float = 2.0,
        generator: torch.Generator | None = None,
    ) -> list[Circuit]:
        """Candidate circuits for one problem (the solver-facing interface)."""
        batch = self.sample_circuits(problem, num_samples, SamplingConfig(temperature=temperature), generator)
        return batch.circuits(self.vocab)

    def sequence_log_probs(
        self,
        tokens: torch.Tensor,
        gate_counts: torch.Tensor,
        problem: IsingProblem,
        temperature: float,
        memory: torch.Tensor | None = None,
        cfg: SamplingConfig | None = None,
    ) -> torch.Tensor:
        """Teacher-forced log-probabilities, differentiable w.r.t. weights.

        ``tokens`` is the padded (B, 1 + 2n) layout from sampling: rows with
        fewer than 2n gates include their end token as the first trailing 0.
        """
        cfg = cfg or SamplingConfig(temperature=temperature)
        n = problem.n
        max_gates = 2 * n
        if memory is None:
            memory = self.encode(problem)
        logits, valid = self._subspace_logits(
            tokens[:, :-1], memory, n,
            min_gates=cfg.min_gates_before_end, restrict=cfg.restrict_tokens,
        )
        log_p = torch.log_softmax(logits / temperature, dim=-1)
        targets = tokens[:, 1:]
        local_of_global = torch.full((self.vocab.size,), -1, dtype=torch.long)
        local_of_global[valid] = torch.arange(valid.numel())
        local_targets = local_of_global[targets]
        if bool((local_targets < 0).any()):
            raise ValueError("token sequence contains tokens invalid for this problem size")
        gathered = log_p.gather(2, local_targets.clamp(min=0).unsqueeze(-1)).squeeze(-1)
        steps = torch.arange(targets.shape[1])
        g = gate_counts.unsqueeze(1)
        ended = (gate_counts < max_gates).unsqueeze(1)
        include = (steps.unsqueeze(0) < g) | ((steps.unsqueeze(0) == g) & ended)
        return torch.where(include, gathered, torch.zeros_like(gathered)).sum(dim=1)

    def sequence_log_prob(
        self,
        problem: IsingProblem,
        token_sequence,
        temperature: float = 1.0,
        cfg: SamplingConfig | None = None,
    ) -> float:
        """Log-probability of one complete token sequence (with start token).

        A trailing end token marks early termination; sequences with exactly
        2n gates need none. Mask violations raise ValueError.
        """
        cfg = cfg or SamplingConfig(temperature=temperature)
        seq = [int(t) for t in token_sequence]
        n = problem.n
        max_gates = 2 * n
        if not seq or seq[0] != 0:
            raise ValueError("sequence must begin with the start token 0")
        body = seq[1:]
        if body and body[-1] == 0:
            gates = body[:-1]
            if len(gates) >= max_gates:
                raise ValueError("end token after a full-length sequence")
            if len(gates) < cfg.min_gates_before_end:
                raise ValueError(
                    f"end token before {cfg.min_gates_before_end} gates violates the mask"
                )
        else:
            gates = body
            if len(gates) != max_gates:
                raise ValueError("sequence without end token must contain exactly 2n gates")
        if any(t == 0 for t in gates):
            raise ValueError("end token may only terminate the sequence")
        for t in gates:
            if self.vocab.token_to_gate(t).max_qubit >= n:
                raise ValueError(f"token {t} touches qubit >= n={n}")
        padded = torch.zeros(1, 1 + max_gates, dtype=torch.long)
        padded[0, 1 : 1 + len(gates)] = torch.tensor(gates, dtype=torch.long)
        counts = torch.tensor([len(gates)], dtype=torch.long)
        with torch.no_grad():
            out = self.sequence_log_probs(padded, counts, problem, temperature, cfg=cfg)
        return float(out[0])

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def build_model(
    config: ModelConfig | None = None,
    expert_sizes: tuple[int, ...] = (3,),
    seed: int = 0,
) -> GQCOModel:
    """Construct a model with a reproducible random initialization."""
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        model = GQCOModel(config, expert_sizes)
    return model


# ---- checkpoint format ------------------------------------------------
#
# magic "GQCO" | u32 version | u32 config length | config JSON |
# u32 manifest length | manifest JSON [(name, shape, offset), ...] |
# raw little-endian float64 tensor data in state-dict order.


def save_checkpoint(model: GQCOModel, path) -> None:
    config_blob = json.dumps(
        {
            "model": asdict(model.config),
            "experts": list(model.expert_sizes),
            "vocabulary_version": VOCAB_ORDERING_VERSION,
        }
    ).encode("utf-8")
    state = model.state_dict()
    manifest = []
    offset = 0
    blobs = []
    for name, tensor in state.items():
        data = tensor.detach().to(torch.float64).numpy().astype("<f8").tobytes()
        manifest.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        offset += len(data)
        blobs.append(data)
    manifest_blob = json.dumps(manifest).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(config_blob)))
        fh.write(config_blob)
        fh.write(struct.pack("<I", len(manifest_blob)))
        fh.write(manifest_blob)
        for data in blobs:
            fh.write(data)


def load_checkpoint(path) -> GQCOModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    buf = io.BytesIO(raw)
    if buf.read(4) != CHECKPOINT_MAGIC:
        raise ConfigurationError(f"{path} is not a GQCO checkpoint (bad magic)")
    (version,) = struct.unpack("<I", buf.read(4))
    if version != CHECKPOINT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {version}")
    (config_len,) = struct.unpack("<I", buf.read(4))
    header = json.loads(buf.read(config_len).decode("utf-8"))
    if header.get("vocabulary_version") != VOCAB_ORDERING_VERSION:
        raise ConfigurationError("checkpoint uses an incompatible vocabulary ordering")
    allowed = {f.name for f in fields(ModelConfig)}
    config = ModelConfig(**{k: v for k, v in header["model"].items() if k in allowed})
    model = GQCOModel(config, expert_sizes=tuple(header["experts"]))
    (manifest_len,) = struct.unpack("<I", buf.read(4))
    manifest = json.loads(buf.read(manifest_len).decode("utf-8"))
    data_start = buf.tell()
    state = model.state_dict()
    if [m["name"] for m in manifest] != list(state.keys()):
        raise ConfigurationError("checkpoint manifest does not match the model layout")
    new_state = {}
    for entry in manifest:
        name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        if tuple(state[name].shape) != shape:
            raise ConfigurationError(
                f"shape mismatch for {name}: checkpoint {shape}, model {tuple(state[name].shape)}"
            )
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=data_start + offset)
        new_state[name] = torch.from_numpy(arr.copy().reshape(shape))
    model.load_state_dict(new_state)
    return model
