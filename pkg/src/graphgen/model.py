"""Training over canonical DFS codes and autoregressive graph generation."""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from collections import Counter, OrderedDict, defaultdict
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .canonize import EdgeTuple, decode, min_dfs_codes
from .codec import VocabSpec, build_vocab, decode_step, encode_sequence
from .errors import (ChecksumMismatch, CheckpointError, EmptyDataset,
                     ResampleCapExceeded, VersionMismatch)
from .graph import LabeledGraph
from .neural import Adam, NetConfig, SequenceNet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters. Defaults follow the full-size setup; use
    :meth:`desk` for a CPU-friendly profile."""

    epochs: int = 1000
    batch_size: int = 32
    lr: float = 3e-3
    weight_decay: float = 1e-5
    clip_norm: float = 1.0
    dropout: float = 0.2
    embed: int = 92
    hidden: int = 256
    layers: int = 4
    mlp_hidden: int = 512
    early_stop_rel: float = 0.0005
    patience: int = 20
    max_len: int = 0  # 0: max training |E| + 1
    seed: int = 0

    def __post_init__(self):
        for f in ("epochs", "batch_size", "hidden", "layers", "embed",
                  "mlp_hidden", "patience"):
            if getattr(self, f) <= 0:
                raise ValueError(f"{f} must be positive")
        if not 0.0 < self.early_stop_rel < 1.0:
            raise ValueError("early_stop_rel must lie in (0, 1)")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    @classmethod
    def desk(cls, **kw) -> TrainConfig:
        base = dict(layers=2, hidden=64, mlp_hidden=128, epochs=300)
        base.update(kw)
        return cls(**base)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class GenerativeModel:
    vocab: VocabSpec
    net: SequenceNet
    config: TrainConfig
    max_len: int

    @property
    def seed(self):
        return self.config.seed


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    valid_loss: float


def net_config(vocab: VocabSpec, cfg: TrainConfig) -> NetConfig:
    return NetConfig(k=vocab.k, dims=vocab.dims, embed=cfg.embed, hidden=cfg.hidden,
                     layers=cfg.layers, mlp_hidden=cfg.mlp_hidden, dropout=cfg.dropout)


# -- batching -----------------------------------------------------------------

def _batch_arrays(seqs: Sequence[np.ndarray], vocab: VocabSpec):
    """Teacher-forced inputs, targets and mask for index sequences.

    Step 0 input is the all-zeros start token; step ``t`` input is the
    one-hot of ground-truth tuple ``t - 1``.
    """
    B = len(seqs)
    T = max(len(s) for s in seqs)
    offsets = vocab.offsets
    X = np.zeros((B, T, vocab.k))
    Y = np.tile(vocab.eos, (B, T, 1))
    M = np.zeros((B, T))
    for b, s in enumerate(seqs):
        L = len(s)
        Y[b, :L] = s
        M[b, :L] = 1.0
        if L > 1:
            rows = np.arange(1, L)[:, None]
            X[b, rows, s[:L - 1] + offsets] = 1.0
    return X, Y, M


def _make_batches(lengths, batch_size, rng):
    """Shuffle, group by similar length, shuffle the batch order."""
    order = rng.permutation(len(lengths))
    order = sorted(order, key=lambda i: lengths[i])
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    return [batches[i] for i in rng.permutation(len(batches))]


def _dataset_loss(net, seqs, vocab, batch_size=256):
    total = 0.0
    for i in range(0, len(seqs), batch_size):
        chunk = seqs[i:i + batch_size]
        X, Y, M = _batch_arrays(chunk, vocab)
        total += net.loss(X, Y, M) * len(chunk)
    return total / len(seqs)


# -- training -----------------------------------------------------------------

def encode_dataset(graphs, vocab, threads=1):
    codes = min_dfs_codes(graphs, threads=threads)
    return codes, [encode_sequence(c, vocab).indices for c in codes]


def train(train_set: Sequence[LabeledGraph], valid_set: Sequence[LabeledGraph],
          cfg: TrainConfig, threads: int = 1, resume: dict | None = None,
          on_epoch: Callable | None = None):
    """Fit the sequence model to the minimum DFS codes of ``train_set``.

    Stops when validation loss has not improved by more than
    ``early_stop_rel`` (relative) for ``patience`` epochs, or at the epoch
    cap, and returns the parameters with the lowest validation loss.

    ``resume`` is a training state from :func:`load_train_state`.
    ``on_epoch(epoch, state)`` is called after every epoch.
    """
    if not train_set:
        raise EmptyDataset("training set is empty")
    if not valid_set:
        raise EmptyDataset("validation set is empty")
    vocab = build_vocab(train_set)
    codes, train_seqs = encode_dataset(train_set, vocab, threads)
    _, valid_seqs = encode_dataset(valid_set, vocab, threads)
    max_len = cfg.max_len or max(len(c) for c in codes) + 1

    if resume is not None:
        st = resume
        net, adam, rng = st["net"], st["adam"], st["rng"]
        best_params, best_loss = st["best_params"], st["best_loss"]
        history = list(st["history"])
        since_best = st["since_best"]
        start = len(history)
    else:
        rng = np.random.default_rng(cfg.seed)
        net = SequenceNet(net_config(vocab, cfg), rng)
        adam = Adam(net.params, lr=cfg.lr, weight_decay=cfg.weight_decay,
                    clip_norm=cfg.clip_norm)
        best_params, best_loss = None, np.inf
        history, since_best, start = [], 0, 0

    lengths = [len(s) for s in train_seqs]
    for epoch in range(start, cfg.epochs):
        if since_best >= cfg.patience:
            break
        seen = 0
        total = 0.0
        for batch in _make_batches(lengths, cfg.batch_size, rng):
            X, Y, M = _batch_arrays([train_seqs[i] for i in batch], vocab)
            loss, grads = net.loss_and_grads(X, Y, M, rng=rng)
            adam.step(net.params, grads)
            if not all(np.isfinite(p).all() for p in net.params.values()):
                raise FloatingPointError(f"non-finite parameters at epoch {epoch}")
            total += loss * len(batch)
            seen += len(batch)
        train_loss = total / seen
        valid_loss = _dataset_loss(net, valid_seqs, vocab)
        history.append(EpochRecord(epoch + 1, train_loss, valid_loss))
        if valid_loss < best_loss * (1.0 - cfg.early_stop_rel):
            since_best = 0
        else:
            since_best += 1
        if valid_loss < best_loss:
            best_loss = valid_loss
            best_params = OrderedDict((k, v.copy()) for k, v in net.params.items())
        log.info("epoch %d train %.6f valid %.6f", epoch + 1, train_loss, valid_loss)
        if on_epoch is not None:
            on_epoch(epoch + 1, dict(net=net, adam=adam, rng=rng, vocab=vocab,
                                     best_params=best_params, best_loss=best_loss,
                                     history=history, since_best=since_best,
                                     config=cfg, max_len=max_len))

    final = net.copy()
    if best_params is not None:
        final.params = OrderedDict((k, v.copy()) for k, v in best_params.items())
    return GenerativeModel(vocab, final, cfg, max_len), history


def history_csv(history: Sequence[EpochRecord]) -> str:
    lines = ["epoch,train_loss,valid_loss"]
    lines += [f"{r.epoch},{r.train_loss!r},{r.valid_loss!r}" for r in history]
    return "\n".join(lines) + "\n"


# -- evaluation helpers ---------------------------------------------------------

def teacher_forced_accuracy(model: GenerativeModel, codes) -> dict:
    """Argmax prediction accuracy under teacher forcing, including the
    terminal EOS step. Reports whole-tuple and per-component rates."""
    seqs = [encode_sequence(c, model.vocab).indices for c in codes]
    hit_tuple = hit_comp = steps = 0
    for i in range(0, len(seqs), 256):
        chunk = seqs[i:i + 256]
        X, Y, M = _batch_arrays(chunk, model.vocab)
        probs, _ = model.net.forward(X)
        pred = np.stack([p.argmax(-1) for p in probs], -1)
        eq = (pred == Y)
        mask = M.astype(bool)
        hit_tuple += int(eq.all(-1)[mask].sum())
        hit_comp += int(eq[mask].sum())
        steps += int(mask.sum())
    return {"tuple": hit_tuple / steps, "component": hit_comp / (5 * steps),
            "steps": steps}


def achievable_accuracy(codes) -> float:
    """Best whole-tuple teacher-forced accuracy any deterministic predictor
    can reach on this multiset of codes: identical prefixes force identical
    predictions, so only the most frequent continuation can be right."""
    nexts = defaultdict(Counter)
    steps = 0
    for c in codes:
        seq = list(c) + [None]
        for i, t in enumerate(seq):
            nexts[tuple(seq[:i])][t] += 1
            steps += 1
    return sum(cnt.most_common(1)[0][1] for cnt in nexts.values()) / steps


# -- generation -----------------------------------------------------------------

def _sample_rows(model: GenerativeModel, rngs, max_len: int):
    vocab, net = model.vocab, model.net
    B = len(rngs)
    out: list[list[EdgeTuple]] = [[] for _ in range(B)]
    if max_len <= 0 or B == 0:
        return out
    done = np.zeros(B, dtype=bool)
    state = net.init_state(B)
    x = np.zeros((B, vocab.k))
    offsets = vocab.offsets
    for _ in range(max_len):
        state, probs = net.step(state, x)
        cdfs = [np.cumsum(p, axis=1) for p in probs]
        x = np.zeros((B, vocab.k))
        for b in range(B):
            if done[b]:
                continue
            u = rngs[b].random(5)
            comp = [min(int(np.searchsorted(cdf[b], u[c] * cdf[b, -1], side="right")),
                        cdf.shape[1] - 1) for c, cdf in enumerate(cdfs)]
            t = decode_step(comp, vocab)
            if t is None:
                done[b] = True
                continue
            out[b].append(t)
            x[b, np.asarray(comp) + offsets] = 1.0
        if done.all():
            break
    return out


def generate(model: GenerativeModel, max_len: int | None = None,
             rng: np.random.Generator | None = None) -> list[EdgeTuple]:
    """Sample one tuple sequence, stopping at the first EOS component."""
    if max_len is None:
        max_len = model.max_len
    if rng is None:
        rng = np.random.default_rng(model.seed)
    return _sample_rows(model, [rng], max_len)[0]


def sample_codes(model: GenerativeModel, indices: Sequence[int], seed: int,
                 max_len: int | None = None, batch: int = 256):
    """Sequences for sample ids ``indices``; sample ``i`` uses the random
    stream seeded by ``(seed, i)``, so results do not depend on batching."""
    if max_len is None:
        max_len = model.max_len
    out = []
    for j in range(0, len(indices), batch):
        rngs = [np.random.default_rng([seed, int(i)]) for i in indices[j:j + batch]]
        out += _sample_rows(model, rngs, max_len)
    return out


def generate_graphs(model: GenerativeModel, n: int, max_len: int | None = None,
                    seed: int = 0, threads: int = 1) -> list[LabeledGraph]:
    """Sample ``n`` graphs: lenient decode drops self-loops and duplicate
    edges and keeps the largest connected component. Samples that decode to
    a graph without edges are discarded and replaced, up to ``10 * n``
    attempts in total."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cap = 10 * n
    graphs: list[LabeledGraph] = []
    next_id = 0
    while len(graphs) < n:
        need = n - len(graphs)
        if next_id + need > cap:
            need = cap - next_id
        if need <= 0:
            raise ResampleCapExceeded(
                f"only {len(graphs)} of {n} non-empty graphs after {cap} samples")
        ids = list(range(next_id, next_id + need))
        next_id += need
        if threads > 1 and need > 1:
            from concurrent.futures import ThreadPoolExecutor
            parts = [ids[i::threads] for i in range(threads)]
            with ThreadPoolExecutor(threads) as pool:
                res = list(pool.map(lambda p: sample_codes(model, p, seed, max_len), parts))
            by_id = {}
            for part, codes in zip(parts, res):
                by_id.update(zip(part, codes))
            codes = [by_id[i] for i in ids]
        else:
            codes = sample_codes(model, ids, seed, max_len)
        for code in codes:
            g = decode(code, "lenient")
            if g.m > 0:
                graphs.append(g)
    return graphs[:n]


# -- checkpoints ------------------------------------------------------------------

MAGIC = b"GRAPHGEN-CKPT\n"
FORMAT_VERSION = 1


def write_checkpoint(path, meta: dict, arrays: "OrderedDict[str, np.ndarray]"):
    """Layout: magic, u32 version, u64 header length, JSON header, then per
    array (u16 name length, name, u8 ndim, u64 dims, float64 LE data), then a
    SHA-256 digest of everything before it."""
    buf = bytearray(MAGIC)
    buf += struct.pack("<I", FORMAT_VERSION)
    header = json.dumps(meta, sort_keys=True).encode()
    buf += struct.pack("<Q", len(header)) + header
    buf += struct.pack("<Q", len(arrays))
    for name, arr in arrays.items():
        nb = name.encode()
        buf += struct.pack("<H", len(nb)) + nb
        buf += struct.pack("<B", arr.ndim)
        buf += struct.pack(f"<{arr.ndim}Q", *arr.shape)
        buf += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    buf += hashlib.sha256(buf).digest()
    Path(path).write_bytes(bytes(buf))


def read_checkpoint(path):
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    body, digest = data[:-32], data[-32:]
    if len(data) < len(MAGIC) + 32 or hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatch(f"{path}: checksum mismatch (truncated or corrupted)")
    pos = len(MAGIC)
    (version,) = struct.unpack_from("<I", body, pos)
    pos += 4
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    (hlen,) = struct.unpack_from("<Q", body, pos)
    pos += 8
    meta = json.loads(body[pos:pos + hlen].decode())
    pos += hlen
    (count,) = struct.unpack_from("<Q", body, pos)
    pos += 8
    arrays = OrderedDict()
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", body, pos)
        pos += 2
        name = body[pos:pos + nlen].decode()
        pos += nlen
        (ndim,) = struct.unpack_from("<B", body, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}Q", body, pos)
        pos += 8 * ndim
        size = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(body, dtype="<f8", count=size, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * size
    return meta, arrays


def _model_meta(model: GenerativeModel):
    return {"kind": "model", "vocab": model.vocab.to_dict(),
            "net": model.net.cfg.to_dict(), "train": model.config.to_dict(),
            "max_len": model.max_len}


def save_checkpoint(model: GenerativeModel, path):
    write_checkpoint(path, _model_meta(model), model.net.params)


def load_checkpoint(path) -> GenerativeModel:
    meta, arrays = read_checkpoint(path)
    net = SequenceNet(NetConfig.from_dict(meta["net"]))
    net.params = OrderedDict((k, v) for k, v in arrays.items() if not k.startswith("state."))
    return GenerativeModel(VocabSpec.from_dict(meta["vocab"]), net,
                           TrainConfig.from_dict(meta["train"]), int(meta["max_len"]))


def save_train_state(state: dict, path):
    """Everything needed to continue training after an interrupted run."""
    net, adam = state["net"], state["adam"]
    meta = {"kind": "train_state", "vocab": state["vocab"].to_dict(),
            "net": net.cfg.to_dict(), "train": state["config"].to_dict(),
            "max_len": state["max_len"], "adam_t": adam.t,
            "rng": state["rng"].bit_generator.state,
            "best_loss": state["best_loss"], "since_best": state["since_best"],
            "history": [asdict(r) for r in state["history"]]}
    arrays = OrderedDict(net.params)
    arrays.update(adam.state_arrays())
    if state["best_params"] is not None:
        arrays.update((f"best.{k}", v) for k, v in state["best_params"].items())
    write_checkpoint(path, meta, arrays)


def load_train_state(path) -> dict:
    meta, arrays = read_checkpoint(path)
    if meta.get("kind") != "train_state":
        raise CheckpointError(f"{path}: not a training-state checkpoint")
    cfg = TrainConfig.from_dict(meta["train"])
    net = SequenceNet(NetConfig.from_dict(meta["net"]))
    net.params = OrderedDict((k, v) for k, v in arrays.items()
                             if not k.startswith(("adam.", "best.")))
    adam = Adam(net.params, lr=cfg.lr, weight_decay=cfg.weight_decay, clip_norm=cfg.clip_norm)
    adam.t = int(meta["adam_t"])
    for k in net.params:
        adam.m[k] = arrays[f"adam.m.{k}"]
        adam.v[k] = arrays[f"adam.v.{k}"]
    best = OrderedDict((k[5:], v) for k, v in arrays.items() if k.startswith("best."))
    rng = np.random.default_rng()
    rng.bit_generator.state = meta["rng"]
    return dict(net=net, adam=adam, rng=rng, vocab=VocabSpec.from_dict(meta["vocab"]),
                best_params=best or None, best_loss=float(meta["best_loss"]),
                since_best=int(meta["since_best"]), config=cfg,
                max_len=int(meta["max_len"]),
                history=[EpochRecord(**r) for r in meta["history"]])
