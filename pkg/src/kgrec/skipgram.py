"""Skip-gram with negative sampling over walk corpora, and embedding tables.

Training runs a numba kernel that updates the shared parameter matrices one
(target, context) pair at a time.  The loss for a pair is

    -log s(v_t . u_c) - sum_k log s(-v_t . u_k)

with ``v`` the input (exported) vectors, ``u`` the context vectors, ``s`` the
logistic function and ``u_k`` noise entities drawn from unigram^0.75.
:func:`sgns_loss_and_grad` computes the same quantity and its gradient with
plain numpy; the tests use it as the reference for the kernel.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from kgrec.errors import ParseError, ValidationError

log = logging.getLogger(__name__)

_LCG_MUL = np.uint64(25214903917)
_LCG_ADD = np.uint64(11)


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between entity identifiers and contiguous row indices."""

    entities: tuple

    def __post_init__(self):
        if len(set(self.entities)) != len(self.entities):
            raise ValidationError("vocabulary entities must be unique")
        object.__setattr__(self, "_index", {e: i for i, e in enumerate(self.entities)})

    @classmethod
    def from_corpus(cls, corpus) -> "Vocabulary":
        return cls(tuple(sorted({e for walk in corpus for e in walk})))

    def __len__(self):
        return len(self.entities)

    def __contains__(self, entity):
        return entity in self._index

    def __iter__(self):
        return iter(self.entities)

    def index(self, entity) -> int:
        try:
            return self._index[entity]
        except KeyError:
            raise KeyError(f"unknown entity {entity!r}") from None


@dataclass(frozen=True)
class TrainConfig:
    dimension: int = 128
    window: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    negatives_per_target: int = 5
    seed: int = 0
    shrink_window: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.dimension <= 0 or self.window < 1 or self.epochs < 1 or self.negatives_per_target < 1:
            raise ValidationError("dimension, window, epochs and negatives_per_target must be positive")
        if not (0 < self.min_learning_rate <= self.learning_rate):
            raise ValidationError("need 0 < min_learning_rate <= learning_rate")


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    vocabulary: Vocabulary
    vectors: np.ndarray
    loss_history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.vocabulary):
            raise ValidationError(
                f"vectors shape {self.vectors.shape} does not match vocabulary size {len(self.vocabulary)}"
            )

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __getitem__(self, entity) -> np.ndarray:
        return self.vectors[self.vocabulary.index(entity)]

    def __contains__(self, entity):
        return entity in self.vocabulary

    def __len__(self):
        return len(self.vocabulary)


# -- reference loss -----------------------------------------------------------


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sgns_loss_and_grad(target_vec, context_vecs, labels):
    """Negative-sampling loss of one target against labelled context rows.

    ``labels`` holds 1 for the observed context and 0 for noise rows.
    Returns ``(loss, grad_target, grad_contexts)``.
    """
    target_vec = np.asarray(target_vec, dtype=np.float64)
    context_vecs = np.asarray(context_vecs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    scores = context_vecs @ target_vec
    signs = 2.0 * labels - 1.0
    loss = -np.sum(_log_sigmoid(signs * scores))
    coeff = _sigmoid(scores) - labels
    grad_target = coeff @ context_vecs
    grad_contexts = np.outer(coeff, target_vec)
    return float(loss), grad_target, grad_contexts


# -- numba kernels ------------------------------------------------------------


@numba.njit(cache=True)
def _rand_unit(state):
    state = state * _LCG_MUL + _LCG_ADD
    u = (state >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    return state, u


@numba.njit(cache=True, fastmath=True)
def _pair_update(syn0, syn1, target, context, noise, lr, neu):
    """SGD step on one (target, context, noise...) group; returns the loss.

    Arithmetic runs in float32 whatever the matrix dtype.
    """
    d = syn0.shape[1]
    for j in range(d):
        neu[j] = 0.0
    loss = 0.0
    for s in range(noise.shape[0] + 1):
        if s == 0:
            row = context
        else:
            row = noise[s - 1]
        f = np.float32(0.0)
        for j in range(d):
            f += syn0[target, j] * syn1[row, j]
        # z is the signed score; the loss term is log(1 + exp(-z))
        z = f if s == 0 else -f
        if z >= 0:
            e = math.exp(-z)
            loss += math.log1p(e)
            one_minus = e / (1.0 + e)
        else:
            e = math.exp(z)
            loss += -z + math.log1p(e)
            one_minus = 1.0 / (1.0 + e)
        g = np.float32(one_minus * lr if s == 0 else -one_minus * lr)
        for j in range(d):
            neu[j] += g * syn1[row, j]
            syn1[row, j] += g * syn0[target, j]
    for j in range(d):
        syn0[target, j] += neu[j]
    return loss


@numba.njit(cache=True, nogil=True)
def _train_walks(tokens, offsets, order, syn0, syn1, noise_table, window, negative, shrink,
                 lr_start, lr_end, done, total, state):
    table_size = noise_table.shape[0]
    neu = np.zeros(syn0.shape[1], dtype=np.float32)
    noise = np.empty(negative, dtype=np.int64)
    loss = 0.0
    pairs = 0
    for wi in range(order.shape[0]):
        w = order[wi]
        start = offsets[w]
        stop = offsets[w + 1]
        for pos in range(start, stop):
            lr = lr_start - (lr_start - lr_end) * (done / total)
            if lr < lr_end:
                lr = lr_end
            done += 1
            target = tokens[pos]
            reach = window
            if shrink:
                state, u = _rand_unit(state)
                reach = 1 + int(u * window)
                if reach > window:
                    reach = window
            lo = max(start, pos - reach)
            hi = min(stop, pos + reach + 1)
            for cpos in range(lo, hi):
                if cpos == pos:
                    continue
                context = tokens[cpos]
                n = 0
                tries = 0
                while n < negative:
                    state = state * _LCG_MUL + _LCG_ADD
                    cand = noise_table[(state >> np.uint64(16)) % np.uint64(table_size)]
                    tries += 1
                    if cand == context and tries < 100 * negative:
                        continue
                    noise[n] = cand
                    n += 1
                loss += _pair_update(syn0, syn1, target, context, noise, lr, neu)
                pairs += 1
    return loss, pairs, done, state


NOISE_TABLE_SIZE = 1_000_000


def noise_table(counts: np.ndarray, power: float = 0.75, size: int = NOISE_TABLE_SIZE) -> np.ndarray:
    """Lookup table where each index appears in proportion to count**power."""
    weights = counts.astype(np.float64) ** power
    cum = np.cumsum(weights) / weights.sum()
    positions = (np.arange(size) + 0.5) / size
    return np.minimum(np.searchsorted(cum, positions, side="right"), len(counts) - 1).astype(np.int64)


def _encode(corpus, vocab: Vocabulary):
    lengths = np.fromiter((len(w) for w in corpus), dtype=np.int64, count=len(corpus))
    offsets = np.zeros(len(corpus) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    index = vocab._index
    tokens = np.fromiter((index[e] for w in corpus for e in w), dtype=np.int64, count=int(offsets[-1]))
    return tokens, offsets


def train_skipgram(corpus: Sequence[Sequence[str]], config: TrainConfig) -> EmbeddingTable:
    """Train input vectors for every corpus entity; single-threaded runs are bitwise reproducible."""
    if not corpus:
        raise ValidationError("cannot train on an empty corpus")
    if any(len(w) == 0 for w in corpus):
        raise ValidationError("every walk must contain at least one entity")
    vocab = Vocabulary.from_corpus(corpus)
    if len(vocab) < 2:
        raise ValidationError("need at least two distinct entities to form context pairs")
    tokens, offsets = _encode(corpus, vocab)
    counts = np.bincount(tokens, minlength=len(vocab))
    table = noise_table(counts)

    d = config.dimension
    rng = np.random.default_rng(config.seed)
    syn0 = ((rng.random((len(vocab), d)) - 0.5) / d).astype(np.float32)
    syn1 = np.zeros((len(vocab), d), dtype=np.float32)
    state = np.uint64(np.random.SeedSequence(config.seed).generate_state(1, dtype=np.uint64)[0])

    total = config.epochs * len(tokens)
    done = 0
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(corpus)).astype(np.int64)
        if config.workers > 1:
            loss, pairs, done = _parallel_epoch(
                tokens, offsets, order, syn0, syn1, table, config, done, total, state
            )
            with np.errstate(over="ignore"):  # LCG arithmetic is modulo 2**64
                state = np.uint64(state) * _LCG_MUL + _LCG_ADD
        else:
            loss, pairs, done, state = _train_walks(
                tokens, offsets, order, syn0, syn1, table, config.window,
                config.negatives_per_target, config.shrink_window,
                config.learning_rate, config.min_learning_rate, done, total, state,
            )
            state = np.uint64(state)
        history.append(loss / pairs if pairs else 0.0)
        log.debug("epoch %d: mean pair loss %.5f over %d pairs", epoch, history[-1], pairs)
    if not np.all(np.isfinite(syn0)):
        raise ValidationError("training diverged (non-finite embeddings)")
    return EmbeddingTable(vocab, syn0, tuple(history))


def _parallel_epoch(tokens, offsets, order, syn0, syn1, table, config, done, total, state):
    from concurrent.futures import ThreadPoolExecutor

    # numba releases the GIL inside nogil kernels, so threads share syn0/syn1 (hogwild)
    parts = np.array_split(order, config.workers)
    seeds = [np.uint64((int(state) + i * 7919) % 2**64) for i in range(len(parts))]
    with ThreadPoolExecutor(config.workers) as pool:
        futures = [
            pool.submit(
                _train_walks, tokens, offsets, part, syn0, syn1, table, config.window,
                config.negatives_per_target, config.shrink_window, config.learning_rate,
                config.min_learning_rate, done, total, s,
            )
            for part, s in zip(parts, seeds)
        ]
        results = [f.result() for f in futures]
    loss = sum(r[0] for r in results)
    pairs = sum(r[1] for r in results)
    return loss, pairs, done + len(tokens)



def concat_embeddings(a: EmbeddingTable, b: EmbeddingTable) -> EmbeddingTable:
    """Row-wise concatenation of two tables over the same vocabulary."""
    sa, sb = set(a.vocabulary), set(b.vocabulary)
    if sa != sb:
        diff = sorted(sa ^ sb)
        raise ValidationError(f"vocabulary mismatch; symmetric difference: {diff}")
    rows_b = b.vectors[[b.vocabulary.index(e) for e in a.vocabulary]]
    return EmbeddingTable(a.vocabulary, np.hstack([a.vectors, rows_b]))


def save_embeddings(path, table: EmbeddingTable):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_embeddings(table))


def format_embeddings(table: EmbeddingTable) -> str:
    vecs = table.vectors.astype(np.float32)
    lines = [f"{len(table)} {table.dimension}"]
    for ent, row in zip(table.vocabulary, vecs):
        lines.append(ent + " " + " ".join(f"{float(x):.9g}" for x in row))
    return "\n".join(lines) + "\n"


def load_embeddings(path) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError("embedding header must be 'N d'", 1)
        n, d = int(header[0]), int(header[1])
        names = []
        rows = np.empty((n, d), dtype=np.float32)
        for i, line in enumerate(fh):
            parts = line.split()
            if not parts:
                continue
            if len(names) == n:
                raise ParseError(f"more rows than the {n} promised by the header", i + 2)
            if len(parts) != d + 1:
                raise ParseError(f"expected {d + 1} fields, got {len(parts)}", i + 2)
            names.append(parts[0])
            rows[len(names) - 1] = np.array(parts[1:], dtype=np.float32)
        if len(names) != n:
            raise ParseError(f"header promises {n} rows, found {len(names)}")
    return EmbeddingTable(Vocabulary(tuple(names)), rows)
