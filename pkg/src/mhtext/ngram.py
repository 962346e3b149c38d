"""Directional smoothed n-gram language models.

A model predicts over its *support*: the content vocabulary, optionally
UNK, plus EOS. BOS only ever appears as left padding in contexts and PHD
never enters a model at all. Probabilities are stored in standard backoff
form (explicit n-gram probabilities plus per-context backoff weights), so
every conditional distribution is normalized by construction and the model
serializes losslessly to the ARPA text format.

Smoothing: add-k at every level (default k=0.1), or interpolated
Kneser-Ney with continuation counts at the lower levels. Both produce
strictly positive probabilities over the full support, so no in-vocabulary
sentence ever scores -inf.

Backward models are trained on token-reversed sentences and evaluate input
sentences by reversing them first; their EOS marks the sentence start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import ContractError, CorpusError, FormatError
from .textcore import (
    BOS_ID,
    BOS_TOKEN,
    EOS_ID,
    EOS_TOKEN,
    PHD_TOKEN,
    UNK_ID,
    UNK_TOKEN,
    Sentence,
    Vocabulary,
)

LN10 = math.log(10.0)

# ARPA lines with log10 prob <= this are context-only markers (no real
# probability); add-k floors are many orders of magnitude above it.
_NOPROB = -99.0

FORWARD = "forward"
BACKWARD = "backward"


@dataclass(frozen=True)
class SmoothingConfig:
    """Smoothing hyperparameters. kind is "add_k" or "kneser_ney"."""

    kind: str = "add_k"
    add_k: float = 0.1
    kn_discount: float = 0.75

    def __post_init__(self):
        if self.kind not in ("add_k", "kneser_ney"):
            raise ValueError(f"unknown smoothing kind {self.kind!r}")
        if self.add_k <= 0:
            raise ValueError("add_k must be > 0")
        if not 0 < self.kn_discount < 1:
            raise ValueError("kn_discount must be in (0, 1)")


@dataclass
class _CtxEntry:
    """Explicit probabilities observed under one context, plus its backoff."""

    ids: np.ndarray
    probs: np.ndarray
    logprobs: dict[int, float]
    bow: float = 1.0
    log_bow: float = 0.0


class NGramModel:
    """Immutable after construction; concurrent reads are safe."""

    def __init__(
        self,
        vocab: Vocabulary,
        order: int,
        direction: str,
        uni_prob: np.ndarray,
        levels: list[dict[tuple[int, ...], _CtxEntry]],
        smoothing: SmoothingConfig,
        include_unk: bool,
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if direction not in (FORWARD, BACKWARD):
            raise ValueError(f"direction must be {FORWARD!r} or {BACKWARD!r}")
        self.vocab = vocab
        self.order = order
        self.direction = direction
        self.smoothing = smoothing
        self.include_unk = include_unk
        self._uni_prob = uni_prob
        with np.errstate(divide="ignore"):
            self._uni_log = np.log(uni_prob)
        # levels[ell-2] maps a (ell-1)-token context to its entry, ell >= 2
        self._levels = levels
        self._cond_cache: dict[tuple[int, ...], np.ndarray] = {}
        self._cond_cache_max = 64

    # ------------------------------------------------------------------
    # construction helpers

    @classmethod
    def uniform(cls, vocab: Vocabulary, order: int = 2, direction: str = FORWARD):
        """Model whose every conditional is uniform over content words + EOS.

        UNK is excluded from the support so that a vocabulary of C content
        words yields conditionals of exactly 1/(C+1) each.
        """
        v = len(vocab)
        n_support = len(vocab.content_ids) + 1
        uni = np.zeros(v)
        uni[EOS_ID] = 1.0 / n_support
        for i in vocab.content_ids:
            uni[i] = 1.0 / n_support
        levels = [dict() for _ in range(max(order - 1, 0))]
        return cls(vocab, order, direction, uni, levels, SmoothingConfig(), False)

    @property
    def support_ids(self) -> np.ndarray:
        ids = list(vocab_support(self.vocab, self.include_unk))
        return np.asarray(ids, dtype=np.int64)

    # ------------------------------------------------------------------
    # scoring

    def _token_logprob(self, context: tuple[int, ...], word: int) -> float:
        """Backoff walk from the highest applicable order down to unigrams."""
        acc = 0.0
        for ell in range(self.order, 1, -1):
            ctx = context[len(context) - (ell - 1):]
            entry = self._levels[ell - 2].get(ctx)
            if entry is None:
                continue
            logp = entry.logprobs.get(word)
            if logp is not None:
                return acc + logp
            acc += entry.log_bow
        return acc + float(self._uni_log[word])

    def seq_logprob(self, sentence: Sentence) -> float:
        """Natural-log probability of the sentence plus its EOS."""
        ids = sentence.ids
        if self.direction == BACKWARD:
            ids = ids[::-1]
        padded = (BOS_ID,) * (self.order - 1) + ids + (EOS_ID,)
        start = self.order - 1
        total = 0.0
        for i in range(start, len(padded)):
            total += self._token_logprob(padded[i - self.order + 1: i], padded[i])
        return total

    def prefix_logprob(self, ids: Sequence[int]) -> float:
        """Joint of a prefix in this model's own direction, without EOS.

        For a backward model the caller passes the already-reversed suffix.
        Returns 0.0 for the empty prefix.
        """
        ids = tuple(ids)
        padded = (BOS_ID,) * (self.order - 1) + ids
        start = self.order - 1
        total = 0.0
        for i in range(start, len(padded)):
            total += self._token_logprob(padded[i - self.order + 1: i], padded[i])
        return total

    def cond_dist(self, context: Sequence[int]) -> np.ndarray:
        """Full conditional distribution as a dense vector indexed by id.

        Entries outside the support are zero; the rest sum to 1. The
        context is in this model's own direction, nearest token last, and
        is BOS-padded on the left when shorter than order-1.
        """
        context = tuple(context)
        if len(context) > self.order - 1:
            raise ContractError(
                f"context of length {len(context)} for an order-{self.order} model"
            )
        key = ((BOS_ID,) * (self.order - 1 - len(context))) + context
        cached = self._cond_cache.get(key)
        if cached is not None:
            return cached
        vec = self._uni_prob.copy()
        for ell in range(2, self.order + 1):
            ctx = key[len(key) - (ell - 1):]
            entry = self._levels[ell - 2].get(ctx)
            if entry is None:
                break  # longer contexts cannot be observed either
            vec *= entry.bow
            vec[entry.ids] = entry.probs
        if len(self._cond_cache) >= self._cond_cache_max:
            self._cond_cache.pop(next(iter(self._cond_cache)))
        self._cond_cache[key] = vec
        return vec

    def per_token_nll(self, sentence: Sentence) -> float:
        """Mean negative log-likelihood per token, counting EOS."""
        return -self.seq_logprob(sentence) / (len(sentence) + 1)


def vocab_support(vocab: Vocabulary, include_unk: bool) -> list[int]:
    """Prediction support: content ids, optionally UNK, plus EOS."""
    ids = [EOS_ID]
    if include_unk:
        ids.append(UNK_ID)
    ids.extend(vocab.content_ids)
    return ids


# ----------------------------------------------------------------------
# training


def train(
    corpus: Iterable[str],
    vocab: Vocabulary,
    order: int = 3,
    direction: str = FORWARD,
    smoothing: SmoothingConfig | None = None,
) -> NGramModel:
    """Count n-grams over the corpus and build a backoff model.

    Backward models are trained on token-reversed sentences. Out-of-vocab
    tokens count as UNK, which is part of every trained model's support.
    """
    smoothing = smoothing or SmoothingConfig()
    if order < 1:
        raise ValueError("order must be >= 1")
    counts: list[dict] = [dict() for _ in range(order)]  # level ell at index ell-1
    n_sentences = 0
    for line in corpus:
        parts = line.split()
        if not parts:
            continue
        ids = tuple(vocab.lookup(t) for t in parts)
        if direction == BACKWARD:
            ids = ids[::-1]
        n_sentences += 1
        padded = (BOS_ID,) * (order - 1) + ids + (EOS_ID,)
        for i in range(order - 1, len(padded)):
            w = padded[i]
            for ell in range(1, order + 1):
                ctx = padded[i - ell + 1: i]
                table = counts[ell - 1].setdefault(ctx, {})
                table[w] = table.get(w, 0) + 1
    if n_sentences == 0:
        raise CorpusError("training corpus has no usable sentences")

    support = vocab_support(vocab, include_unk=True)
    if smoothing.kind == "add_k":
        uni, levels = _build_add_k(counts, support, len(vocab), order, smoothing.add_k)
    else:
        uni, levels = _build_kneser_ney(
            counts, support, len(vocab), order, smoothing.kn_discount, smoothing.add_k
        )
    return NGramModel(vocab, order, direction, uni, levels, smoothing, True)


def _build_add_k(counts, support, v_size, order, k_add):
    m = len(support)
    uni_counts = counts[0].get((), {})
    total = sum(uni_counts.values())
    uni = np.zeros(v_size)
    for w in support:
        uni[w] = (uni_counts.get(w, 0) + k_add) / (total + k_add * m)

    levels: list[dict[tuple[int, ...], _CtxEntry]] = [dict() for _ in range(order - 1)]
    model_probe = _Probe(uni, levels)
    for ell in range(2, order + 1):
        for ctx, succ in counts[ell - 1].items():
            ctx_count = sum(succ.values())
            ids = np.asarray(sorted(succ), dtype=np.int64)
            probs = np.asarray(
                [(succ[w] + k_add) / (ctx_count + k_add * m) for w in ids]
            )
            leftover = (m - len(ids)) * k_add / (ctx_count + k_add * m)
            lower = sum(model_probe.prob_upto(ell - 1, ctx[1:], int(w)) for w in ids)
            denom = 1.0 - lower
            bow = leftover / denom if denom > 1e-12 else 1.0
            levels[ell - 2][ctx] = _make_entry(ids, probs, bow)
    return uni, levels


def _build_kneser_ney(counts, support, v_size, order, discount, k_add):
    """Interpolated Kneser-Ney folded into backoff form.

    Raw counts at the top level, continuation counts below; the unigram
    continuation distribution gets a small add-k floor so the support
    stays strictly positive.
    """
    m = len(support)
    # continuation counts: number of distinct one-token-longer contexts
    cont: list[dict] = [dict() for _ in range(order)]
    for ell in range(2, order + 1):
        for ctx, succ in counts[ell - 1].items():
            sub = ctx[1:]
            table = cont[ell - 2].setdefault(sub, {})
            for w in succ:
                table[w] = table.get(w, 0) + 1
    if order == 1:
        return _build_add_k(counts, support, v_size, order, k_add)

    uni_cont = cont[0].get((), {})
    total_cont = sum(uni_cont.values())
    uni = np.zeros(v_size)
    for w in support:
        uni[w] = (uni_cont.get(w, 0) + k_add) / (total_cont + k_add * m)

    levels: list[dict[tuple[int, ...], _CtxEntry]] = [dict() for _ in range(order - 1)]
    model_probe = _Probe(uni, levels)
    for ell in range(2, order + 1):
        source = counts[ell - 1] if ell == order else cont[ell - 1]
        for ctx, succ in source.items():
            ctx_count = sum(succ.values())
            lam = discount * len(succ) / ctx_count
            ids = np.asarray(sorted(succ), dtype=np.int64)
            probs = np.asarray(
                [
                    (succ[w] - discount) / ctx_count
                    + lam * model_probe.prob_upto(ell - 1, ctx[1:], int(w))
                    for w in ids
                ]
            )
            levels[ell - 2][ctx] = _make_entry(ids, probs, lam)
    return uni, levels


def _make_entry(ids, probs, bow):
    logprobs = {int(w): math.log(p) for w, p in zip(ids, probs)}
    return _CtxEntry(ids, probs, logprobs, bow, math.log(bow) if bow > 0 else -math.inf)


class _Probe:
    """Scores lower levels while higher levels are still being built."""

    def __init__(self, uni, levels):
        self.uni = uni
        self.levels = levels

    def prob_upto(self, max_level, context, word):
        acc = 1.0
        for ell in range(max_level, 1, -1):
            ctx = context[len(context) - (ell - 1):]
            entry = self.levels[ell - 2].get(ctx)
            if entry is None:
                continue
            logp = entry.logprobs.get(word)
            if logp is not None:
                return acc * math.exp(logp)
            acc *= entry.bow
        return acc * self.uni[word]


# ----------------------------------------------------------------------
# ARPA serialization


def export_arpa(model: NGramModel, sink: TextIO) -> None:
    """Write the model in ARPA format (log10 in file, natural log in memory).

    Context-only n-grams (those that carry a backoff weight but are not
    themselves predictions, e.g. BOS runs) get the conventional -99 marker.
    """
    if model.direction == BACKWARD:
        sink.write("#direction: backward\n")
    surf = model.vocab.surface

    sections: list[list[str]] = []
    for ell in range(1, model.order + 1):
        rows: dict[tuple[int, ...], list] = {}
        if ell == 1:
            for w in vocab_support(model.vocab, model.include_unk):
                rows[(w,)] = [float(model._uni_log[w]) / LN10, None]
            rows[(BOS_ID,)] = [_NOPROB, None]
        else:
            for ctx, entry in model._levels[ell - 2].items():
                for w, logp in entry.logprobs.items():
                    rows[ctx + (w,)] = [logp / LN10, None]
        if ell < model.order:
            for ctx, entry in model._levels[ell - 1].items():
                row = rows.setdefault(ctx, [_NOPROB, None])
                row[1] = entry.log_bow / LN10
        lines = []
        for gram in sorted(rows):
            logp, bow = rows[gram]
            words = " ".join(surf(w) for w in gram)
            if bow is None:
                lines.append(f"{logp:.12g}\t{words}")
            else:
                lines.append(f"{logp:.12g}\t{words}\t{bow:.12g}")
        sections.append(lines)

    sink.write("\n\\data\\\n")
    for ell, lines in enumerate(sections, start=1):
        sink.write(f"ngram {ell}={len(lines)}\n")
    for ell, lines in enumerate(sections, start=1):
        sink.write(f"\n\\{ell}-grams:\n")
        for line in lines:
            sink.write(line + "\n")
    sink.write("\n\\end\\\n")


def import_arpa(source: TextIO, lowercase: bool = False) -> NGramModel:
    """Parse an ARPA file written by export_arpa (or compatible)."""
    direction = FORWARD
    lines = []
    for raw in source:
        line = raw.rstrip("\n")
        if line.startswith("#direction:"):
            if line.split(":", 1)[1].strip() == "backward":
                direction = BACKWARD
            continue
        lines.append(line)

    pos = 0
    while pos < len(lines) and lines[pos].strip() != "\\data\\":
        if lines[pos].strip() and not lines[pos].startswith("#"):
            raise FormatError("ARPA file must begin with a \\data\\ section")
        pos += 1
    if pos == len(lines):
        raise FormatError("missing \\data\\ header")
    pos += 1

    declared: dict[int, int] = {}
    while pos < len(lines) and lines[pos].strip():
        part = lines[pos].strip()
        if not part.startswith("ngram "):
            raise FormatError(f"bad count line in \\data\\ section: {part!r}")
        try:
            spec, value = part[len("ngram "):].split("=")
            declared[int(spec)] = int(value)
        except ValueError as exc:
            raise FormatError(f"bad count line in \\data\\ section: {part!r}") from exc
        pos += 1
    if not declared or sorted(declared) != list(range(1, max(declared) + 1)):
        raise FormatError("\\data\\ section must declare orders 1..N")
    order = max(declared)

    grams: dict[int, list[tuple[list[str], float, float | None]]] = {
        ell: [] for ell in declared
    }
    saw_end = False
    while pos < len(lines):
        part = lines[pos].strip()
        pos += 1
        if not part:
            continue
        if part == "\\end\\":
            saw_end = True
            break
        if not (part.startswith("\\") and part.endswith("-grams:")):
            raise FormatError(f"expected a section header, got {part!r}")
        ell = int(part[1:].split("-")[0])
        if ell not in declared:
            raise FormatError(f"section for undeclared order {ell}")
        while pos < len(lines) and lines[pos].strip() and not lines[pos].startswith("\\"):
            fields = lines[pos].split("\t")
            if len(fields) == 1:  # tolerate space-separated files
                fields = lines[pos].split()
                fields = [fields[0], " ".join(fields[1: 1 + ell])] + fields[1 + ell:]
            if len(fields) not in (2, 3):
                raise FormatError(f"bad n-gram line: {lines[pos]!r}")
            try:
                logp = float(fields[0])
                bow = float(fields[2]) if len(fields) == 3 else None
            except ValueError as exc:
                raise FormatError(f"bad n-gram line: {lines[pos]!r}") from exc
            words = fields[1].split()
            if len(words) != ell:
                raise FormatError(
                    f"{ell}-gram line has {len(words)} words: {lines[pos]!r}"
                )
            grams[ell].append((words, logp, bow))
            pos += 1
    if not saw_end:
        raise FormatError("missing \\end\\ marker")
    for ell, expected in declared.items():
        if len(grams[ell]) != expected:
            raise FormatError(
                f"declared {expected} {ell}-grams but found {len(grams[ell])}"
            )

    specials = {BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, PHD_TOKEN}
    content = [w[0] for w, _, _ in grams[1] if w[0] not in specials]
    vocab = Vocabulary(content, lowercase=lowercase)
    include_unk = any(
        w[0] == UNK_TOKEN and logp > _NOPROB + 0.5 for w, logp, _ in grams[1]
    )

    # bow written on an n-gram line applies when that n-gram is a context
    # one level up; collect them per length, then assemble the levels.
    uni = np.zeros(len(vocab))
    pending_bow: dict[int, dict[tuple[int, ...], float]] = {
        ell: {} for ell in declared
    }
    explicit: dict[int, dict[tuple[int, ...], dict[int, float]]] = {
        ell: {} for ell in range(2, order + 1)
    }
    for ell in declared:
        for words, logp, bow in grams[ell]:
            try:
                ids_all = tuple(vocab.id_of[w] for w in words)
            except KeyError as exc:
                raise FormatError(f"n-gram uses token absent from unigrams: {words}") from exc
            if ell == 1:
                if logp > _NOPROB + 0.5:
                    uni[ids_all[0]] = math.exp(logp * LN10)
            elif logp > _NOPROB + 0.5:
                explicit[ell].setdefault(ids_all[:-1], {})[ids_all[-1]] = logp * LN10
            if bow is not None:
                pending_bow[ell][ids_all] = bow * LN10

    levels: list[dict[tuple[int, ...], _CtxEntry]] = [dict() for _ in range(order - 1)]
    for ell in range(2, order + 1):
        contexts = set(explicit[ell]) | set(pending_bow[ell - 1])
        for ctx in contexts:
            succ = explicit[ell].get(ctx, {})
            ids = np.asarray(sorted(succ), dtype=np.int64)
            probs = np.exp(np.asarray([succ[w] for w in ids], dtype=float))
            log_bow = pending_bow[ell - 1].get(ctx, 0.0)
            levels[ell - 2][ctx] = _CtxEntry(
                ids,
                probs,
                {int(w): succ[int(w)] for w in ids},
                math.exp(log_bow),
                log_bow,
            )

    return NGramModel(
        vocab, order, direction, uni, levels, SmoothingConfig(), include_unk
    )
