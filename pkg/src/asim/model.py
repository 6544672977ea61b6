"""Sentence-pair interaction network.

Pipeline per knowledge unit: embedding lookup, BiLSTM context encoding,
inter-attention alignment against the other unit, three-way fusion of the
contextual and aligned views, a second BiLSTM composition pass, masked
max-pooling, and a feed-forward classifier over
[vx; vy; vx - vy; vx * vy]. Shortcut wiring concatenates the raw
embeddings back in at the attention input (projected to width k) and at
the composition input. Everything except the prediction head is shared
between the two units.

Ablation switches: ``use_attention`` skips attention and fusion entirely;
``use_fusion`` replaces the fusion stack with a single affine projection of
[x; x_aligned]; ``use_shortcuts`` removes both embedding re-injections.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, DimensionError, UsageError
from .lstm import LstmParams, bilstm, init_lstm

KU_LABELS = ("duplicate", "direct", "indirect", "isolated")
BINARY_LABELS = ("duplicate", "non-duplicate")


def labels_for(num_classes: int) -> tuple[str, ...]:
    if num_classes == 4:
        return KU_LABELS
    if num_classes == 2:
        return BINARY_LABELS
    raise ConfigError(f"num_classes must be 2 or 4, got {num_classes}")


@dataclass
class AsimConfig:
    embed_dim: int = 300
    hidden: int = 200
    num_classes: int = 4
    max_len: int = 250
    dropout: float = 0.2
    prediction_hidden_dims: tuple[int, ...] = (200,)
    use_attention: bool = True
    use_fusion: bool = True
    use_shortcuts: bool = True
    train_embeddings: bool = False

    @property
    def k(self) -> int:
        """Width of the contextual word representation (both directions)."""
        return 2 * self.hidden

    def validate(self) -> "AsimConfig":
        if self.num_classes not in (2, 4):
            raise ConfigError(f"num_classes must be 2 or 4, got {self.num_classes}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.hidden <= 0 or self.embed_dim <= 0:
            raise ConfigError("hidden and embed_dim must be positive")
        if self.max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {self.max_len}")
        if any(d <= 0 for d in self.prediction_hidden_dims):
            raise ConfigError("prediction hidden widths must be positive")
        return self

    def labels(self) -> tuple[str, ...]:
        return labels_for(self.num_classes)


@dataclass
class AffineParams:
    w: Tensor
    b: Tensor

    def named_tensors(self, prefix):
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}


def init_affine(in_dim: int, out_dim: int, rng: np.random.Generator) -> AffineParams:
    bound = 1.0 / np.sqrt(in_dim)
    return AffineParams(
        w=Tensor(rng.uniform(-bound, bound, size=(in_dim, out_dim)), requires_grad=True),
        b=Tensor(np.zeros(out_dim), requires_grad=True))


def affine(x: Tensor, p: AffineParams) -> Tensor:
    return ad.add(ad.matmul(x, p.w), p.b)


@dataclass
class AsimParams:
    encoder_fwd: LstmParams
    encoder_bwd: LstmParams
    composer_fwd: LstmParams
    composer_bwd: LstmParams
    predict_hidden: list[AffineParams]
    predict_out: AffineParams
    attn_proj: AffineParams | None = None
    fuse_f1: AffineParams | None = None
    fuse_f2: AffineParams | None = None
    fuse_f3: AffineParams | None = None
    fuse_out: AffineParams | None = None
    fuse_concat: AffineParams | None = None

    def named_tensors(self) -> dict[str, Tensor]:
        out = {}
        out.update(self.encoder_fwd.named_tensors("encoder_fwd"))
        out.update(self.encoder_bwd.named_tensors("encoder_bwd"))
        for name in ("attn_proj", "fuse_f1", "fuse_f2", "fuse_f3",
                     "fuse_out", "fuse_concat"):
            p = getattr(self, name)
            if p is not None:
                out.update(p.named_tensors(name))
        out.update(self.composer_fwd.named_tensors("composer_fwd"))
        out.update(self.composer_bwd.named_tensors("composer_bwd"))
        for i, layer in enumerate(self.predict_hidden):
            out.update(layer.named_tensors(f"predict_hidden{i}"))
        out.update(self.predict_out.named_tensors("predict_out"))
        return out


def init_params(cfg: AsimConfig, rng: np.random.Generator) -> AsimParams:
    cfg.validate()
    k = cfg.k
    encoder_fwd = init_lstm(cfg.embed_dim, cfg.hidden, rng)
    encoder_bwd = init_lstm(cfg.embed_dim, cfg.hidden, rng)
    attn_proj = f1 = f2 = f3 = f_out = f_concat = None
    if cfg.use_attention:
        if cfg.use_shortcuts:
            attn_proj = init_affine(cfg.embed_dim + k, k, rng)
        if cfg.use_fusion:
            f1 = init_affine(2 * k, k, rng)
            f2 = init_affine(2 * k, k, rng)
            f3 = init_affine(2 * k, k, rng)
            f_out = init_affine(3 * k, k, rng)
        else:
            f_concat = init_affine(2 * k, k, rng)
    composer_in = k + (cfg.embed_dim if cfg.use_shortcuts else 0)
    composer_fwd = init_lstm(composer_in, cfg.hidden, rng)
    composer_bwd = init_lstm(composer_in, cfg.hidden, rng)
    predict_hidden = []
    width = 4 * k
    for hidden_dim in cfg.prediction_hidden_dims:
        predict_hidden.append(init_affine(width, hidden_dim, rng))
        width = hidden_dim
    predict_out = init_affine(width, cfg.num_classes, rng)
    return AsimParams(
        encoder_fwd=encoder_fwd, encoder_bwd=encoder_bwd,
        composer_fwd=composer_fwd, composer_bwd=composer_bwd,
        predict_hidden=predict_hidden, predict_out=predict_out,
        attn_proj=attn_proj, fuse_f1=f1, fuse_f2=f2, fuse_f3=f3,
        fuse_out=f_out, fuse_concat=f_concat)


class _DropoutSites:
    """Deterministic per-site dropout seeding for one forward pass."""

    def __init__(self, training: bool, rate: float, seed: int):
        self.training = training
        self.rate = rate
        self.seed = int(seed)
        self.site = 0

    def apply(self, t: Tensor) -> Tensor:
        self.site += 1
        if not self.training or self.rate == 0.0:
            return t
        site_seed = int(np.random.SeedSequence(
            (self.seed, self.site)).generate_state(1)[0])
        return ad.dropout_apply(t, self.rate, True, site_seed)


@dataclass
class AttentionResult:
    x_aligned: Tensor      # n x k, each row a weighted sum of Y rows
    y_aligned: Tensor      # m x k
    scores: Tensor         # n x m raw inner products
    x_weights: Tensor      # n x m row-softmax over unmasked Y positions
    y_weights: Tensor      # m x n


@dataclass
class ForwardTrace:
    logits: Tensor
    probs: np.ndarray
    pooled_x: np.ndarray
    pooled_y: np.ndarray
    attention: np.ndarray | None = None      # raw score matrix
    x_weights: np.ndarray | None = None      # row-normalized alignment
    y_weights: np.ndarray | None = None


def embed_sequence(token_ids, table: Tensor) -> Tensor:
    """Rows of the embedding table for a 1-D id sequence."""
    return ad.embedding_rows(table, np.asarray(token_ids, dtype=np.int64))


def input_encode(x_emb: Tensor, cfg: AsimConfig, params: AsimParams,
                 drop: _DropoutSites) -> Tensor:
    """Contextual BiLSTM pass over the embedded sequence."""
    return drop.apply(bilstm(x_emb, params.encoder_fwd, params.encoder_bwd))


def attention_view(x_emb: Tensor, x_enc: Tensor, cfg: AsimConfig,
                   params: AsimParams) -> Tensor:
    """What the attention layer sees: with shortcuts, [embedding; encoder]
    projected back to width k; otherwise the encoder output itself."""
    if cfg.use_shortcuts:
        return affine(ad.concat([x_emb, x_enc], axis=1), params.attn_proj)
    return x_enc


def inter_attention(x: Tensor, y: Tensor, mask_x=None, mask_y=None) -> AttentionResult:
    """Bilinear alignment between the two sequences.

    scores[i, j] = <x_i, y_j>; each row of the weight matrices is a
    softmax of the scores over the *other* side's unmasked positions,
    scaled by 1/sqrt(k); aligned vectors are the weighted sums.
    """
    if x.shape[1] != y.shape[1]:
        raise DimensionError(
            f"attention operands disagree in width: {x.shape} vs {y.shape}")
    k = x.shape[1]
    scores = ad.matmul(x, ad.transpose(y))
    x_weights = ad.scaled_softmax_rows(scores, k, mask_y)
    y_weights = ad.scaled_softmax_rows(ad.transpose(scores), k, mask_x)
    return AttentionResult(
        x_aligned=ad.matmul(x_weights, y),
        y_aligned=ad.matmul(y_weights, x),
        scores=scores, x_weights=x_weights, y_weights=y_weights)


def fuse(x: Tensor, x_aligned: Tensor, cfg: AsimConfig, params: AsimParams,
         drop: _DropoutSites) -> Tensor:
    """Blend a sequence with its aligned view.

    Full fusion runs three feed-forward combiners over concatenation,
    difference, and elementwise product, then a fourth over their
    concatenation. The reduced variant is a single affine projection of
    [x; x_aligned].
    """
    if not cfg.use_fusion:
        return drop.apply(affine(ad.concat([x, x_aligned], axis=1),
                                 params.fuse_concat))
    f1 = drop.apply(ad.relu(affine(ad.concat([x, x_aligned], axis=1),
                                   params.fuse_f1)))
    f2 = drop.apply(ad.relu(affine(ad.concat([x, ad.sub(x, x_aligned)], axis=1),
                                   params.fuse_f2)))
    f3 = drop.apply(ad.relu(affine(ad.concat([x, ad.mul(x, x_aligned)], axis=1),
                                   params.fuse_f3)))
    return drop.apply(ad.relu(affine(ad.concat([f1, f2, f3], axis=1),
                                     params.fuse_out)))


def compose(x_fused: Tensor, x_emb: Tensor, cfg: AsimConfig, params: AsimParams,
            drop: _DropoutSites) -> Tensor:
    """Second BiLSTM pass; shortcuts re-inject the raw embeddings."""
    comp_in = (ad.concat([x_fused, x_emb], axis=1)
               if cfg.use_shortcuts else x_fused)
    return drop.apply(bilstm(comp_in, params.composer_fwd, params.composer_bwd))


def predict(vx: Tensor, vy: Tensor, mask_x, mask_y, cfg: AsimConfig,
            params: AsimParams, drop: _DropoutSites) -> tuple[Tensor, np.ndarray]:
    """Masked max-pool both sides and classify the combined feature vector."""
    px = ad.max_over_time(vx, mask_x)
    py = ad.max_over_time(vy, mask_y)
    features = ad.concat([px, py, ad.sub(px, py), ad.mul(px, py)])
    h = ad.reshape(features, (1, -1))
    for layer in params.predict_hidden:
        h = drop.apply(ad.relu(affine(h, layer)))
    logits = ad.reshape(affine(h, params.predict_out), (-1,))
    return logits, ad.softmax_vec(logits.data)


def forward_ids(x_ids, y_ids, table: Tensor, cfg: AsimConfig, params: AsimParams,
                mode: str = "eval", seed: int = 0) -> ForwardTrace:
    """Run the full network on two id sequences (no padding expected)."""
    if mode not in ("train", "eval"):
        raise UsageError(f"mode must be 'train' or 'eval', got {mode!r}")
    drop = _DropoutSites(mode == "train", cfg.dropout, seed)

    x_emb = embed_sequence(x_ids, table)
    y_emb = embed_sequence(y_ids, table)
    x_enc = input_encode(x_emb, cfg, params, drop)
    y_enc = input_encode(y_emb, cfg, params, drop)

    att = None
    if cfg.use_attention:
        x_view = attention_view(x_emb, x_enc, cfg, params)
        y_view = attention_view(y_emb, y_enc, cfg, params)
        att = inter_attention(x_view, y_view)
        x_stream = fuse(x_view, att.x_aligned, cfg, params, drop)
        y_stream = fuse(y_view, att.y_aligned, cfg, params, drop)
    else:
        x_stream, y_stream = x_enc, y_enc

    vx = compose(x_stream, x_emb, cfg, params, drop)
    vy = compose(y_stream, y_emb, cfg, params, drop)
    logits, probs = predict(vx, vy, None, None, cfg, params, drop)

    trace = ForwardTrace(
        logits=logits, probs=probs,
        pooled_x=vx.data.max(axis=0),
        pooled_y=vy.data.max(axis=0))
    if att is not None:
        trace.attention = att.scores.data.copy()
        trace.x_weights = att.x_weights.data.copy()
        trace.y_weights = att.y_weights.data.copy()
    return trace


def forward(pair, table: Tensor, cfg: AsimConfig, params: AsimParams,
            mode: str = "eval", seed: int = 0) -> ForwardTrace:
    """Forward over a (KnowledgeUnit, KnowledgeUnit) pair."""
    ku_x, ku_y = pair
    return forward_ids(ku_x.token_ids, ku_y.token_ids, table, cfg, params,
                       mode=mode, seed=seed)


def forward_padded(x_ids, x_mask, y_ids, y_mask, table: Tensor, cfg: AsimConfig,
                   params: AsimParams, mode: str = "eval", seed: int = 0) -> ForwardTrace:
    """Forward over right-padded id rows; masked positions never enter the
    graph, so padding cannot influence alignment, pooling, or the recurrent
    states of either direction."""
    x_ids = np.asarray(x_ids, dtype=np.int64)[np.asarray(x_mask, dtype=bool)]
    y_ids = np.asarray(y_ids, dtype=np.int64)[np.asarray(y_mask, dtype=bool)]
    return forward_ids(x_ids, y_ids, table, cfg, params, mode=mode, seed=seed)


def ablation_config(base: AsimConfig, removed: set[str]) -> AsimConfig:
    """Config with the named components ('attn', 'fl', 'sc') switched off."""
    unknown = removed - {"attn", "fl", "sc"}
    if unknown:
        raise ConfigError(f"unknown ablation component(s): {sorted(unknown)}")
    return replace(base,
                   use_attention=base.use_attention and "attn" not in removed,
                   use_fusion=base.use_fusion and "fl" not in removed,
                   use_shortcuts=base.use_shortcuts and "sc" not in removed)
