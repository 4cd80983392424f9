"""Training loop, checkpoint persistence, evaluation, and the latency bench.

Training is deterministic end to end: parameter init draws from the run
seed, each epoch's shuffle comes from a (seed, epoch) derived generator, and
batches group examples with similar padded grid sizes to limit padding
waste. The best-dev-EM checkpoint is kept alongside a resumable "last"
checkpoint carrying the optimizer state.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels as K
from .checkpoint import FORMAT_TAG, load_checkpoint, save_checkpoint
from .data import load_dataset
from .dialogue import (
    ConnectionWordList,
    EMPTY_CONNECTION_WORDS,
    Tokenization,
    derive_connection_words,
    join_context,
    prepare_incomplete,
    texts,
)
from .generation import rewrite_from_matrix
from .model import (
    EncodedExample,
    ModelConfig,
    RewriteModel,
    Vocabulary,
    encode_example,
)
from .supervision import Coverage


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite; carries diagnostics."""

    def __init__(self, epoch: int, batch_ids: list[int], loss_history: list[float]):
        super().__init__(
            f"non-finite loss at epoch {epoch}; last batch ids {batch_ids}; "
            f"recent losses {loss_history[-5:]}"
        )
        self.epoch = epoch
        self.batch_ids = batch_ids
        self.loss_history = loss_history


@dataclass
class RunConfig:
    """Everything one training run needs; JSON-serializable."""

    train_path: str = ""
    dev_path: str = ""
    test_path: str = ""
    labels_path: str = ""
    checkpoint_path: str = "model.run"

    embed_dim: int = 100
    hidden_dim: int = 200
    base_channels: int = 32
    class_weights: tuple[float, float, float] = (1.0, 5.0, 5.0)

    lr: float = 1e-3
    epochs: int = 50
    batch_size: int = 16
    seed: int = 0
    patience: int = 10

    tokenization: str = Tokenization.WHITESPACE.value
    connection_k: int = 0

    # Optional early exit once dev metrics reach targets (None disables).
    target_dev_em: Optional[float] = None
    target_dev_cell_acc: Optional[float] = None

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        self.class_weights = tuple(float(w) for w in self.class_weights)

    def model_config(self, vocab_size: int) -> ModelConfig:
        return ModelConfig(
            vocab_size=vocab_size,
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
            base_channels=self.base_channels,
            class_weights=self.class_weights,
            batch_size=self.batch_size,
        )

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["class_weights"] = list(self.class_weights)
        return d

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        known = {f for f in RunConfig.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**d)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    dev_cell_acc: float
    dev_em: float
    seconds: float


@dataclass
class TrainResult:
    best_checkpoint: str
    last_checkpoint: str
    best_dev_em: float
    history: list[EpochStats] = field(default_factory=list)
    partial_fraction: float = 0.0


# ---------------------------------------------------------------------------
# evaluation


def evaluate_model(model: RewriteModel, batch: list[EncodedExample], examples, conn, k):
    """Dev metrics: pooled unmasked cell accuracy and rewrite exact match."""
    correct = total = 0
    hits = 0
    for enc, ex in zip(batch, examples):
        pred = model.predict_encoded(enc)
        correct += int((pred == enc.gold).sum())
        total += pred.size
        out, _ = rewrite_from_matrix(
            pred, prepare_incomplete(list(ex.incomplete)), join_context(ex, conn, k)
        )
        hits += texts(out) == texts(ex.gold_rewrite)
    cell_acc = correct / total if total else 1.0
    return cell_acc, hits / len(batch)


def _epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    # Derived, not streamed: resuming at epoch e replays the same shuffles.
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, 7919, epoch)))


def _batches_by_size(encoded: list[EncodedExample], order: np.ndarray, batch_size: int):
    """Chunk a shuffled order into batches of similar padded grid sizes."""

    def pad4(n):
        return max(4, -(-n // 4) * 4)

    ranked = sorted(order, key=lambda i: (pad4(encoded[i].m), pad4(encoded[i].nx)))
    return [ranked[i : i + batch_size] for i in range(0, len(ranked), batch_size)]


# ---------------------------------------------------------------------------
# checkpoint plumbing


def _model_arrays(model: RewriteModel, adam: K.AdamState | None):
    arrays = {name: p.data for name, p in model.parameters().items()}
    arrays.update(model.buffers())
    if adam is not None:
        for (name, _), m, v in zip(model.parameters().items(), adam.m, adam.v):
            arrays[f"adam.m.{name}"] = m
            arrays[f"adam.v.{name}"] = v
    return arrays


def save_model(
    path,
    model: RewriteModel,
    vocab: Vocabulary,
    conn: ConnectionWordList,
    k: int,
    tokenization: str,
    adam: K.AdamState | None = None,
    meta: dict | None = None,
):
    meta = dict(meta or {})
    if adam is not None:
        meta["adam_step"] = adam.step
    save_checkpoint(path, _model_arrays(model, adam), meta)
    sidecar = {
        "format": FORMAT_TAG,
        "model_config": model.config.to_dict(),
        "tokenization": tokenization,
        "vocab": vocab.words,
        "connection_words": list(conn.words),
        "connection_k": k,
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, ensure_ascii=False, sort_keys=True)


def load_model(path):
    """Rebuild a model (plus vocab/conn/tokenization) from a checkpoint pair."""
    arrays, meta = load_checkpoint(path)
    with open(str(path) + ".json", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    config = ModelConfig.from_dict(sidecar["model_config"])
    model = RewriteModel(config, seed=0)
    for name, p in model.parameters().items():
        p.data = arrays[name].copy()
    model.load_buffers(arrays)
    vocab = Vocabulary(sidecar["vocab"])
    conn_words = sidecar.get("connection_words", [])
    conn = ConnectionWordList(tuple(conn_words), tuple(range(len(conn_words), 0, -1)))
    adam = None
    if "adam_step" in meta:
        params = list(model.parameters())
        adam = K.AdamState(
            step=int(meta["adam_step"]),
            m=[arrays[f"adam.m.{n}"].copy() for n in params],
            v=[arrays[f"adam.v.{n}"].copy() for n in params],
        )
    return model, vocab, conn, sidecar.get("connection_k", 0), sidecar["tokenization"], meta, adam


# ---------------------------------------------------------------------------
# training


def train(config: RunConfig, log=None, resume: bool = False) -> TrainResult:
    log = log or (lambda msg: None)
    mode = Tokenization(config.tokenization)
    train_examples = load_dataset(config.train_path, mode, require_rewrite=True)
    dev_examples = load_dataset(config.dev_path, mode, require_rewrite=True)

    if config.connection_k > 0:
        conn = derive_connection_words(train_examples, config.connection_k)
        k = min(config.connection_k, len(conn.words))
    else:
        conn, k = EMPTY_CONNECTION_WORDS, 0
    vocab = Vocabulary.from_examples(train_examples, conn)

    last_path = str(config.checkpoint_path) + ".last"
    best_path = str(config.checkpoint_path)
    start_epoch = 0
    best_em = -1.0
    history: list[EpochStats] = []

    if resume and Path(last_path).exists():
        model, vocab, conn, k, _, meta, adam = load_model(last_path)
        start_epoch = int(meta["epoch"]) + 1
        best_em = float(meta.get("best_dev_em", -1.0))
        log(f"resuming from {last_path} at epoch {start_epoch}")
    else:
        model = RewriteModel(config.model_config(vocab.size), seed=config.seed)
        adam = K.AdamState.for_params(list(model.parameters().values()))

    train_enc = [encode_example(ex, vocab, conn, k, with_gold=True) for ex in train_examples]
    dev_enc = [encode_example(ex, vocab, conn, k, with_gold=True) for ex in dev_examples]
    # Context-free examples have zero-row matrices: no cells to supervise.
    skipped = sum(e.m == 0 for e in train_enc)
    if skipped:
        log(f"skipping {skipped} empty-context training examples (no matrix cells)")
        train_enc = [e for e in train_enc if e.m > 0]
    if not train_enc:
        raise ValueError("no trainable examples (all have empty contexts)")
    partial = sum(e.coverage is Coverage.PARTIAL for e in train_enc) / max(1, len(train_enc))
    if partial:
        log(f"{partial:.1%} of training examples have partial label coverage")

    params = model.parameters()
    param_list = list(params.values())
    loss_history: list[float] = []
    epochs_since_best = 0

    for epoch in range(start_epoch, config.epochs):
        t0 = time.perf_counter()
        rng = _epoch_rng(config.seed, epoch)
        order = rng.permutation(len(train_enc))
        batches = _batches_by_size(train_enc, order, config.batch_size)
        epoch_loss = 0.0
        for batch_ids in batches:
            batch = [train_enc[i] for i in batch_ids]
            model.zero_grad()
            loss = model.forward_loss(batch)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(epoch, list(map(int, batch_ids)), loss_history)
            loss.backward()
            K.adam_step(param_list, [p.grad for p in param_list], adam, config.lr)
            loss_history.append(value)
            epoch_loss += value * len(batch)
        epoch_loss /= len(train_enc)

        cell_acc, em = evaluate_model(model, dev_enc, dev_examples, conn, k)
        stats = EpochStats(epoch, epoch_loss, cell_acc, em, time.perf_counter() - t0)
        history.append(stats)
        log(
            f"epoch {epoch:3d} loss {epoch_loss:.4f} dev cell-acc {cell_acc:.4f} "
            f"dev EM {em:.4f} ({stats.seconds:.1f}s)"
        )

        if em > best_em:
            best_em = em
            epochs_since_best = 0
            save_model(
                best_path, model, vocab, conn, k, mode.value, adam=None,
                meta={"epoch": epoch, "best_dev_em": best_em},
            )
        else:
            epochs_since_best += 1
        save_model(
            last_path, model, vocab, conn, k, mode.value, adam=adam,
            meta={"epoch": epoch, "best_dev_em": best_em},
        )

        reached_em = config.target_dev_em is not None and em >= config.target_dev_em
        reached_acc = (
            config.target_dev_cell_acc is not None and cell_acc >= config.target_dev_cell_acc
        )
        if (config.target_dev_em is None or reached_em) and (
            config.target_dev_cell_acc is None or reached_acc
        ):
            if config.target_dev_em is not None or config.target_dev_cell_acc is not None:
                log(f"targets reached at epoch {epoch}; stopping")
                break
        if epochs_since_best > config.patience:
            log(f"no dev-EM improvement for {config.patience} epochs; stopping")
            break

    return TrainResult(best_path, last_path, best_em, history, partial)


# ---------------------------------------------------------------------------
# latency benchmark


def bench_latency(model, vocab, examples, conn=EMPTY_CONNECTION_WORDS, k=0, warmup=3):
    """Per-example wall time of predict + standardize + apply, no batching.

    Tokenization and IO stay outside the timer. Also verifies the one-pass
    property: exactly one model invocation per example.
    """
    prepared = []
    for ex in examples:
        prepared.append(
            (
                encode_example(ex, vocab, conn, k),
                prepare_incomplete(list(ex.incomplete)),
                join_context(ex, conn, k),
            )
        )
    for enc, x_prepared, c in prepared[:warmup]:
        rewrite_from_matrix(model.predict_encoded(enc), x_prepared, c)

    times = []
    out_lens = []
    invocations = []
    for enc, x_prepared, c in prepared:
        before = model.invocations
        t0 = time.perf_counter()
        matrix = model.predict_encoded(enc)
        out, _ = rewrite_from_matrix(matrix, x_prepared, c)
        times.append((time.perf_counter() - t0) * 1000.0)
        invocations.append(model.invocations - before)
        out_lens.append(len(out))

    times_arr = np.array(times)
    corr = 0.0
    if len(set(out_lens)) > 1 and times_arr.std() > 0:
        corr = float(np.corrcoef(times_arr, np.array(out_lens, dtype=float))[0, 1])
    return {
        "mean_ms": float(times_arr.mean()),
        "median_ms": float(np.median(times_arr)),
        "p95_ms": float(np.percentile(times_arr, 95)),
        "invocations": int(max(invocations)),
        "examples": len(times),
        "corr_time_vs_output_len": corr,
    }
