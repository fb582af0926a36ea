"""The two classifier heads and their training math.

``dqc`` sandwiches the variational circuit between two dense layers: the
pre-layer maps the frozen 512-dim backbone features down to rotation
angles, the post-layer maps all per-qubit Z expectations to class
logits. ``purevqc`` has no classical layers at all: features are
amplitude-embedded and the first n_classes qubits are read out as
logits directly.

Dense outputs are squashed to angles via tanh(.) * pi/2 before angle
embedding; unbounded outputs would alias under 2pi-periodic rotations.
The squash derivative participates in backprop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .embeddings import amplitude_embed, angle_embed, dense_angle_embed
from .sim import Circuit, ROTATION_KINDS
from .vqc import VqcTemplate, build_layers, circuit_expectations, circuit_param_shift

MODES = ("dqc", "purevqc")
EMBEDDINGS = ("angle", "dense_angle", "amplitude")

ANGLE_SCALE = math.pi / 2.0


@dataclass(frozen=True)
class DenseLayer:
    """Affine map x -> W x + b with W of shape (out_dim, in_dim)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ValueError(f"bias shape {b.shape} does not match weights {w.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("dense layer entries must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def dense_forward(layer: DenseLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (layer.in_dim,):
        raise ValueError(f"expected input of length {layer.in_dim}, got shape {x.shape}")
    return layer.weights @ x + layer.bias


def softmax(logits) -> np.ndarray:
    """Max-subtracted softmax; safe for arbitrarily large logits."""
    z = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def cross_entropy(probs, label: int) -> float:
    """-ln p[label], with the probability clamped at 1e-12."""
    p = np.asarray(probs, dtype=float)
    if not 0 <= label < p.shape[0]:
        raise ValueError(f"label {label} out of range for {p.shape[0]} classes")
    return -math.log(max(float(p[label]), 1e-12))


@dataclass(frozen=True)
class HybridModel:
    mode: str
    template: VqcTemplate
    qparams: np.ndarray
    n_classes: int
    embedding: str
    pre: DenseLayer | None = None
    post: DenseLayer | None = None
    in_dim: int = 512

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.embedding not in EMBEDDINGS:
            raise ValueError(f"embedding must be one of {EMBEDDINGS}, got {self.embedding!r}")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        q = np.asarray(self.qparams, dtype=float)
        if q.shape != (self.template.n_params,):
            raise ValueError(
                f"qparams shape {q.shape} does not match template "
                f"({self.template.n_params} parameters)"
            )
        object.__setattr__(self, "qparams", q)
        n = self.template.n_qubits
        if self.mode == "dqc":
            if self.embedding not in ("angle", "dense_angle"):
                raise ValueError("dqc mode requires angle or dense_angle embedding")
            if self.pre is None or self.post is None:
                raise ValueError("dqc mode requires pre and post layers")
            want = n if self.embedding == "angle" else 2 * n
            if self.pre.in_dim != self.in_dim or self.pre.out_dim != want:
                raise ValueError(
                    f"pre layer must map {self.in_dim} -> {want}, "
                    f"got {self.pre.in_dim} -> {self.pre.out_dim}"
                )
            if self.post.in_dim != n or self.post.out_dim != self.n_classes:
                raise ValueError(
                    f"post layer must map {n} -> {self.n_classes}, "
                    f"got {self.post.in_dim} -> {self.post.out_dim}"
                )
        else:
            if self.embedding != "amplitude":
                raise ValueError("purevqc mode requires amplitude embedding")
            if self.pre is not None or self.post is not None:
                raise ValueError("purevqc mode takes no classical layers")
            if self.n_classes > n:
                raise ValueError(
                    f"purevqc measures one qubit per class: {self.n_classes} classes "
                    f"need at least {self.n_classes} qubits, template has {n}"
                )
            want = max(1, math.ceil(math.log2(self.in_dim)))
            if n != want:
                raise ValueError(
                    f"amplitude embedding of {self.in_dim} features uses {want} "
                    f"qubits, template has {n}"
                )


def init_model(mode: str, embedding: str, n_qubits: int, depth: int,
               n_classes: int, rng: np.random.Generator, in_dim: int = 512) -> HybridModel:
    """Fresh model: dense layers uniform in +-1/sqrt(in_dim), small qparams."""
    template = VqcTemplate(n_qubits, depth)
    qparams = rng.uniform(-0.1, 0.1, size=template.n_params)
    pre = post = None
    if mode == "dqc":
        pre_out = n_qubits if embedding == "angle" else 2 * n_qubits
        bound = 1.0 / math.sqrt(in_dim)
        pre = DenseLayer(
            rng.uniform(-bound, bound, size=(pre_out, in_dim)),
            rng.uniform(-bound, bound, size=pre_out),
        )
        bound = 1.0 / math.sqrt(n_qubits)
        post = DenseLayer(
            rng.uniform(-bound, bound, size=(n_classes, n_qubits)),
            rng.uniform(-bound, bound, size=n_classes),
        )
    return HybridModel(mode, template, qparams, n_classes, embedding,
                       pre=pre, post=post, in_dim=in_dim)


@lru_cache(maxsize=None)
def _dqc_circuit(embedding: str, n_qubits: int, depth: int, axis: str) -> Circuit:
    """Embedding + layers with every rotation angle exposed as trainable.

    Slots 0..E-1 are the embedding angles in feature order, slots E..
    the layer parameters; one parameter-shift pass then yields gradients
    on both sides of the classical/quantum boundary.
    """
    zeros = np.zeros(n_qubits if embedding == "angle" else 2 * n_qubits)
    if embedding == "angle":
        embed = angle_embed(zeros, n_qubits)
    else:
        embed = dense_angle_embed(zeros, n_qubits)
    ops = []
    n_embed = 0
    for op in embed.ops:
        assert op.kind in ROTATION_KINDS and op.angle is not None
        ops.append(replace(op, angle=None, param_index=n_embed))
        n_embed += 1
    layers = build_layers(VqcTemplate(n_qubits, depth, axis))
    for op in layers.ops:
        if op.param_index is not None:
            op = replace(op, param_index=op.param_index + n_embed)
        ops.append(op)
    return Circuit(n_qubits, tuple(ops), n_embed + layers.n_params)


def _check_input(model: HybridModel, features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.shape != (model.in_dim,):
        raise ValueError(f"expected {model.in_dim} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    return x


def _dqc_parts(model: HybridModel, x: np.ndarray):
    """Shared forward pieces of the dressed circuit up to the logits."""
    pre_out = dense_forward(model.pre, x)
    angles = np.tanh(pre_out) * ANGLE_SCALE
    circuit = _dqc_circuit(model.embedding, model.template.n_qubits,
                           model.template.depth, model.template.rotation_axis)
    full_params = np.concatenate([angles, model.qparams])
    measured = list(range(model.template.n_qubits))
    z = circuit_expectations(circuit, full_params, measured)
    logits = dense_forward(model.post, z)
    return pre_out, angles, circuit, full_params, measured, z, logits


def model_forward(model: HybridModel, features) -> np.ndarray:
    """Class probability vector for one sample."""
    x = _check_input(model, features)
    if model.mode == "dqc":
        logits = _dqc_parts(model, x)[-1]
    else:
        state = amplitude_embed(x)
        layers = build_layers(model.template)
        logits = circuit_expectations(layers, model.qparams,
                                      list(range(model.n_classes)), state)
    return softmax(logits)


@dataclass(frozen=True)
class ModelGrads:
    """Cross-entropy gradients per parameter block; None where absent."""

    qparams: np.ndarray
    pre_weights: np.ndarray | None = None
    pre_bias: np.ndarray | None = None
    post_weights: np.ndarray | None = None
    post_bias: np.ndarray | None = None


def model_backward(model: HybridModel, features, label: int) -> ModelGrads:
    """Exact gradient of cross_entropy(model_forward(x), label).

    Classical pieces are differentiated analytically; rotation angles
    (embedding and variational alike) via the parameter-shift rule,
    chained through the tanh squash into the pre-layer.
    """
    x = _check_input(model, features)
    if not 0 <= label < model.n_classes:
        raise ValueError(f"label {label} out of range for {model.n_classes} classes")
    if model.mode == "purevqc":
        state = amplitude_embed(x)
        layers = build_layers(model.template)
        measured = list(range(model.n_classes))
        logits = circuit_expectations(layers, model.qparams, measured, state)
        dlogits = softmax(logits)
        dlogits[label] -= 1.0
        dq = circuit_param_shift(layers, model.qparams, measured, dlogits, state)
        return ModelGrads(qparams=dq)

    pre_out, angles, circuit, full_params, measured, z, logits = _dqc_parts(model, x)
    dlogits = softmax(logits)
    dlogits[label] -= 1.0
    dpost_w = np.outer(dlogits, z)
    dpost_b = dlogits
    dz = model.post.weights.T @ dlogits
    dfull = circuit_param_shift(circuit, full_params, measured, dz)
    n_embed = angles.shape[0]
    dangles, dq = dfull[:n_embed], dfull[n_embed:]
    dpre_out = dangles * ANGLE_SCALE * (1.0 - np.tanh(pre_out) ** 2)
    dpre_w = np.outer(dpre_out, x)
    dpre_b = dpre_out
    return ModelGrads(qparams=dq, pre_weights=dpre_w, pre_bias=dpre_b,
                      post_weights=dpost_w, post_bias=dpost_b)


# --- flat parameter vector (checkpoint order: pre W, pre b, q, post W, post b)

def params_to_vector(model: HybridModel) -> np.ndarray:
    parts = []
    if model.pre is not None:
        parts += [model.pre.weights.reshape(-1), model.pre.bias]
    parts.append(model.qparams)
    if model.post is not None:
        parts += [model.post.weights.reshape(-1), model.post.bias]
    return np.concatenate(parts)


def grads_to_vector(model: HybridModel, grads: ModelGrads) -> np.ndarray:
    parts = []
    if model.pre is not None:
        parts += [grads.pre_weights.reshape(-1), grads.pre_bias]
    parts.append(grads.qparams)
    if model.post is not None:
        parts += [grads.post_weights.reshape(-1), grads.post_bias]
    return np.concatenate(parts)


def model_with_vector(model: HybridModel, vec: np.ndarray) -> HybridModel:
    """Rebuild the model from a flat parameter vector (inverse of packing)."""
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (n_total_parameters(model),):
        raise ValueError(
            f"expected {n_total_parameters(model)} packed parameters, got shape {vec.shape}"
        )
    pos = 0

    def take(count):
        nonlocal pos
        out = vec[pos : pos + count]
        pos += count
        return out

    pre = post = None
    if model.pre is not None:
        w = take(model.pre.out_dim * model.pre.in_dim)
        pre = DenseLayer(w.reshape(model.pre.out_dim, model.pre.in_dim),
                         take(model.pre.out_dim))
    qparams = take(model.template.n_params)
    if model.post is not None:
        w = take(model.post.out_dim * model.post.in_dim)
        post = DenseLayer(w.reshape(model.post.out_dim, model.post.in_dim),
                          take(model.post.out_dim))
    return replace(model, pre=pre, post=post, qparams=qparams)


def count_parameters(model: HybridModel) -> tuple[int, int]:
    """(classical, quantum) trainable parameter counts."""
    classical = 0
    for layer in (model.pre, model.post):
        if layer is not None:
            classical += layer.out_dim * (layer.in_dim + 1)
    return classical, model.qparams.shape[0]


def n_total_parameters(model: HybridModel) -> int:
    classical, quantum = count_parameters(model)
    return classical + quantum


# --- optimizer ----------------------------------------------------------

@dataclass(frozen=True)
class AdamState:
    """Adam moments plus hyperparameters; weight decay is coupled L2."""

    step: int
    m: np.ndarray
    v: np.ndarray
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    @classmethod
    def init(cls, n_params: int, lr: float = 1e-4, weight_decay: float = 0.0,
             beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(0, np.zeros(n_params), np.zeros(n_params), lr, beta1, beta2,
                   eps, weight_decay)


def adam_step(state: AdamState, params, grads) -> tuple[np.ndarray, AdamState]:
    """One Adam update; weight decay is added to the gradient before moments."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"moments {state.m.shape}"
        )
    if not np.all(np.isfinite(grads)):
        raise ValueError("non-finite gradients")
    g = grads + state.weight_decay * params
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, replace(state, step=t, m=m, v=v)
