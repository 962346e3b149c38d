"""The Metropolis-Hastings loop, task modes, and output selection.

A chain moves over sentences by accepting or rejecting proposals with

    A = min(1, pi(x') g(x|x') / (pi(x) g(x'|x)))

computed entirely from unnormalized log scores. Replacement draws come
from the target conditional of the edited position, which makes them Gibbs
steps with acceptance exactly 1; the acceptance function returns a literal
1.0 for them in both modes (an identity in exact mode, the standard
approximation under top-K truncation). Insertions and deletions are
mutually inverse and carry real acceptance ratios.

The optional likelihood floor used by error correction additionally
rejects any proposal whose target ratio falls below tau. That extra
rejection modifies the kernel, so a floored chain no longer targets pi
exactly; it is a task heuristic, not part of the sampler's correctness
story.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace as dc_replace
from typing import Sequence, TextIO

import numpy as np

from .constraints import (
    ConstraintSpec,
    EmbedMatch,
    MODE_AVG,
    MODE_MIN,
    NEG_INF,
    load_stopwords,
    rake_extract,
)
from .embeddings import EmbeddingTable
from .errors import ContractError, DataError, OffSupportError
from .metrics import BleuConfig, bleu_ori
from .ngram import NGramModel
from .proposals import (
    DELETE,
    INSERT,
    REPLACE,
    Models,
    Proposal,
    ProposalConfig,
    Scorer,
    propose,
)
from .textcore import UNK_ID, Sentence, Vocabulary

EXACT = "exact"
TRUNCATED = "truncated"


# ----------------------------------------------------------------------
# selection rules


@dataclass(frozen=True)
class MinNllAfter:
    """Lowest per-token NLL among states at steps >= start."""

    start: int


@dataclass(frozen=True)
class FirstBelowBleuOri:
    """First state whose BLEU against the original drops below threshold."""

    threshold: float


@dataclass(frozen=True)
class SampleAtStep:
    """The state recorded at exactly this step."""

    step: int


SelectionRule = MinNllAfter | FirstBelowBleuOri | SampleAtStep


@dataclass(frozen=True)
class SamplerConfig:
    p_insert: float = 1.0 / 3.0
    p_delete: float = 1.0 / 3.0
    p_replace: float = 1.0 / 3.0
    k_top: int = 50
    max_steps: int = 200
    burn_in: int = 100
    thinning: int = 1
    seed: int = 0
    mode: str = TRUNCATED
    likelihood_floor: float | None = None
    selection: SelectionRule | None = None
    max_len: int = 60

    def __post_init__(self):
        if abs(self.p_insert + self.p_delete + self.p_replace - 1.0) > 1e-9:
            raise ValueError("operation probabilities must sum to 1")
        if not 0 <= self.burn_in <= self.max_steps:
            raise ValueError("need max_steps >= burn_in >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.mode not in (EXACT, TRUNCATED):
            raise ValueError(f"mode must be {EXACT!r} or {TRUNCATED!r}")
        if self.likelihood_floor is not None and not 0 <= self.likelihood_floor <= 1:
            raise ValueError("likelihood_floor must be in [0, 1] or None")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")

    def proposal_config(self) -> ProposalConfig:
        return ProposalConfig(
            p_insert=self.p_insert,
            p_delete=self.p_delete,
            p_replace=self.p_replace,
            k_top=self.k_top,
            exact=self.mode == EXACT,
            max_len=self.max_len,
        )


@dataclass(frozen=True, slots=True)
class StepRecord:
    step: int
    kind: str
    position: int
    a_value: float
    accepted: bool
    log_score: float


@dataclass
class ChainTrace:
    """Full record of one run: states, scores, decisions, per-op counters."""

    states: list[Sentence]
    log_scores: list[float]
    records: list[StepRecord]
    proposed: dict[str, int]
    accepted: dict[str, int]
    seed: int

    def acceptance_rates(self) -> dict[str, float]:
        return {
            kind: (self.accepted[kind] / self.proposed[kind]) if self.proposed[kind] else float("nan")
            for kind in (REPLACE, INSERT, DELETE)
        }


def export_trace(trace: ChainTrace, vocab: Vocabulary, sink: TextIO) -> None:
    """Line-delimited JSON: {step, sentence, log_score, op, A, accepted}."""
    for rec in trace.records:
        state = trace.states[rec.step]
        sink.write(json.dumps({
            "step": rec.step,
            "sentence": " ".join(vocab.surface(i) for i in state.ids),
            "log_score": rec.log_score,
            "op": rec.kind,
            "A": rec.a_value,
            "accepted": rec.accepted,
        }, ensure_ascii=False) + "\n")


# ----------------------------------------------------------------------
# acceptance and stepping


def acceptance(proposal: Proposal, logpi_x: float, logpi_xp: float) -> float:
    """MH acceptance probability for one proposal.

    Replacement returns a literal 1.0 (Gibbs identity in exact mode, the
    standard approximation under truncation). Infeasible proposals and
    zero-measure targets return 0.
    """
    if not math.isfinite(logpi_x):
        raise ContractError("current state must be on the target support")
    if not proposal.feasible or logpi_xp == NEG_INF:
        return 0.0
    if proposal.kind == REPLACE:
        return 1.0
    if proposal.log_g_rev == NEG_INF:
        return 0.0
    log_ratio = logpi_xp + proposal.log_g_rev - logpi_x - proposal.log_g_fwd
    return math.exp(min(0.0, log_ratio))


def step(
    state: Sentence,
    cfg: SamplerConfig,
    models: Models,
    spec: ConstraintSpec,
    rng: np.random.Generator,
    scorer: Scorer | None = None,
    extra_candidates: frozenset[int] | None = None,
    logpi_state: float | None = None,
) -> tuple[Sentence, float, Proposal, float, bool]:
    """One propose/accept-or-reject transition.

    Returns (next state, its log score, the proposal, A, accepted). With a
    likelihood floor active, proposals whose target ratio falls below the
    floor are rejected no matter what A says.
    """
    scorer = scorer or Scorer(spec, models.fwd)
    if logpi_state is None:
        logpi_state = scorer(state)
    if logpi_state == NEG_INF:
        raise OffSupportError("current state violates a hard constraint")
    proposal = propose(state, rng, cfg.proposal_config(), models, spec,
                       scorer, extra_candidates)
    a_value = acceptance(proposal, logpi_state, proposal.result_logscore)
    accept = False
    if a_value > 0.0:
        if cfg.likelihood_floor is not None and cfg.likelihood_floor > 0:
            ratio = math.exp(min(0.0, proposal.result_logscore - logpi_state))
            if ratio < cfg.likelihood_floor:
                return state, logpi_state, proposal, a_value, False
        accept = a_value >= 1.0 or rng.random() < a_value
    if accept:
        return proposal.result, proposal.result_logscore, proposal, a_value, True
    return state, logpi_state, proposal, a_value, False


def run_chain(
    x0: Sentence,
    cfg: SamplerConfig,
    models: Models,
    spec: ConstraintSpec,
    extra_candidates: frozenset[int] | None = None,
) -> ChainTrace:
    """Run max_steps transitions from x0; fully determined by cfg.seed."""
    scorer = Scorer(spec, models.fwd)
    logpi = scorer(x0)
    if logpi == NEG_INF:
        raise OffSupportError(
            "initial state has zero target probability; keyword-constrained "
            "chains must start from a sentence containing every keyword"
        )
    if len(x0) > cfg.max_len:
        raise DataError(f"initial state longer than max_len={cfg.max_len}")
    rng = np.random.default_rng(cfg.seed)
    states = [x0]
    log_scores = [logpi]
    records: list[StepRecord] = []
    proposed = {REPLACE: 0, INSERT: 0, DELETE: 0}
    accepted = {REPLACE: 0, INSERT: 0, DELETE: 0}
    state = x0
    for t in range(1, cfg.max_steps + 1):
        state, logpi, proposal, a_value, ok = step(
            state, cfg, models, spec, rng, scorer, extra_candidates, logpi
        )
        proposed[proposal.kind] += 1
        if ok:
            accepted[proposal.kind] += 1
        states.append(state)
        log_scores.append(logpi)
        records.append(StepRecord(t, proposal.kind, proposal.position,
                                  a_value, ok, logpi))
    return ChainTrace(states, log_scores, records, proposed, accepted, cfg.seed)


# ----------------------------------------------------------------------
# output selection


@dataclass(frozen=True)
class SelectionResult:
    sentence: Sentence
    step: int
    met: bool


def select_output(
    trace: ChainTrace,
    rule: SelectionRule,
    lm: NGramModel | None = None,
    original: Sentence | None = None,
) -> SelectionResult:
    """Pick the run's output state according to the task's rule.

    MinNllAfter needs the scoring lm; FirstBelowBleuOri needs the original
    sentence and, when no state qualifies, falls back to the lowest-BLEU
    state with met=False.
    """
    last = len(trace.states) - 1
    if isinstance(rule, SampleAtStep):
        if rule.step > last:
            raise DataError(f"trace has {last} steps, cannot select step {rule.step}")
        return SelectionResult(trace.states[rule.step], rule.step, True)
    if isinstance(rule, MinNllAfter):
        if lm is None:
            raise ContractError("MinNllAfter selection needs a language model")
        if rule.start > last:
            raise DataError(f"trace has {last} steps, selection starts at {rule.start}")
        best_step = min(
            range(rule.start, last + 1),
            key=lambda t: (lm.per_token_nll(trace.states[t]), t),
        )
        return SelectionResult(trace.states[best_step], best_step, True)
    if isinstance(rule, FirstBelowBleuOri):
        if original is None:
            raise ContractError("FirstBelowBleuOri selection needs the original")
        cfg = BleuConfig()
        scores: dict[tuple[int, ...], float] = {}
        fallback_step, fallback_score = 0, math.inf
        for t in range(1, last + 1):
            ids = trace.states[t].ids
            score = scores.get(ids)
            if score is None:
                score = bleu_ori(list(ids), list(original.ids), cfg)
                scores[ids] = score
            if score < rule.threshold:
                return SelectionResult(trace.states[t], t, True)
            if score < fallback_score:
                fallback_step, fallback_score = t, score
        if fallback_step == 0:
            fallback_step = last
        return SelectionResult(trace.states[fallback_step], fallback_step, False)
    raise ContractError(f"unknown selection rule {rule!r}")


# ----------------------------------------------------------------------
# error-correction candidate augmentation

_VOWELS = set("aeiou")

# suffix variants: +-s, +-es, +-ed, +-d, +-ing with final-consonant and
# silent-e handling in both directions
_STRIP_SUFFIXES = ("ing", "ed", "es", "s", "d")
_ADD_SUFFIXES = ("s", "es", "ed", "d", "ing")


def _stems(word: str) -> set[str]:
    stems = {word}
    for suf in _STRIP_SUFFIXES:
        if word.endswith(suf) and len(word) > len(suf) + 1:
            stem = word[: -len(suf)]
            stems.add(stem)
            if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS:
                stems.add(stem[:-1])  # stopped -> stopp -> stop
            if suf in ("ing", "ed") and not stem.endswith("e"):
                stems.add(stem + "e")  # making -> mak -> make
    return stems


def _inflections(stem: str) -> set[str]:
    out = {stem}
    for suf in _ADD_SUFFIXES:
        out.add(stem + suf)
    if len(stem) >= 3 and stem[-1] not in _VOWELS and stem[-2] in _VOWELS:
        out.add(stem + stem[-1] + "ed")  # stop -> stopped
        out.add(stem + stem[-1] + "ing")
    if stem.endswith("e"):
        out.add(stem[:-1] + "ing")  # make -> making
        out.add(stem[:-1] + "ed")
    return out


def damerau_levenshtein(a: str, b: str, cap: int = 2) -> int:
    """Restricted Damerau-Levenshtein distance, early-exited at cap+1."""
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    prev2: list[int] | None = None
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        best = cur[0]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if prev2 is not None and i > 1 and j > 1 \
                    and ca == b[j - 2] and a[i - 2] == cb:
                cur[j] = min(cur[j], prev2[j - 2] + 1)
            best = min(best, cur[j])
        if best > cap:
            return cap + 1
        prev2, prev = prev, cur
    return prev[len(b)]


def augment_candidates(word: str, vocab: Vocabulary) -> frozenset[int]:
    """In-vocab words with similar spelling or a shared root.

    Spelling: restricted Damerau-Levenshtein distance <= 2. Root: the
    fixed suffix-rule table above, applied strip-then-add.
    """
    word = word.lower() if vocab.lowercase else word
    found: set[int] = set()
    variants: set[str] = set()
    for stem in _stems(word):
        variants |= _inflections(stem)
    for variant in variants:
        ident = vocab.id_of.get(variant)
        if ident is not None and ident in vocab.content_ids:
            found.add(ident)
    for ident in vocab.content_ids:
        if damerau_levenshtein(word, vocab.tokens[ident], cap=2) <= 2:
            found.add(ident)
    found.discard(UNK_ID)
    return frozenset(found)


# ----------------------------------------------------------------------
# task modes


@dataclass(frozen=True)
class TaskResult:
    sentence: Sentence
    selection: SelectionResult
    trace: ChainTrace


def task_keywords(
    keyword_ids: Sequence[int],
    cfg: SamplerConfig,
    models: Models,
) -> TaskResult:
    """Generate a sentence containing every keyword.

    The chain starts from the keyword sequence itself (on-support by
    construction) and the output is the lowest-NLL state after burn-in.
    """
    if not keyword_ids:
        raise DataError("need at least one keyword")
    for ident in keyword_ids:
        if ident not in models.vocab.content_ids:
            raise DataError(f"keyword id {ident} is not a content word")
    spec = ConstraintSpec(models.vocab, keywords=frozenset(keyword_ids))
    x0 = Sentence(tuple(keyword_ids))
    trace = run_chain(x0, cfg, models, spec)
    rule = cfg.selection or MinNllAfter(cfg.burn_in)
    selection = select_output(trace, rule, lm=models.fwd)
    return TaskResult(selection.sentence, selection, trace)


PARAPHRASE_VARIANTS = ("none", "kw", "kw+wva", "kw+wvm", "wva", "wvm")
BLEU_ORI_THRESHOLD = 55.0


def paraphrase_spec(
    x_star: Sentence,
    models: Models,
    variant: str,
    embeddings: EmbeddingTable | None = None,
    stopwords: frozenset[str] | None = None,
    rake_top_k: int = 2,
    alpha: float = 1.0,
    beta: float = 1.0,
) -> ConstraintSpec:
    """Constraint stack for one paraphrase input.

    kw variants pin the RAKE keywords of the input as a hard constraint
    (falling back to no keywords when the input is all stopwords); wva/wvm
    add the soft embedding match with mean/min aggregation. Plain wva/wvm
    drop the hard keyword factor.
    """
    variant = variant.lower()
    if variant not in PARAPHRASE_VARIANTS:
        raise DataError(f"unknown paraphrase variant {variant!r}")
    keywords = None
    if variant.startswith("kw"):
        stopwords = stopwords if stopwords is not None else load_stopwords()
        extracted = rake_extract(x_star, models.vocab, stopwords, top_k=rake_top_k)
        keywords = frozenset(extracted) or None
    embed = None
    if variant.endswith(("wva", "wvm")):
        if embeddings is None:
            raise DataError(f"variant {variant!r} needs an embedding table")
        embed = EmbedMatch(
            mode=MODE_AVG if variant.endswith("wva") else MODE_MIN,
            table=embeddings,
            reference=x_star,
        )
    return ConstraintSpec(models.vocab, keywords=keywords, embed=embed,
                          alpha=alpha, beta=beta)


def task_paraphrase(
    x_star: Sentence,
    cfg: SamplerConfig,
    models: Models,
    variant: str = "kw",
    embeddings: EmbeddingTable | None = None,
    stopwords: frozenset[str] | None = None,
) -> TaskResult:
    """Paraphrase by warm-started sampling from the matched distribution."""
    spec = paraphrase_spec(x_star, models, variant, embeddings, stopwords)
    trace = run_chain(x_star, cfg, models, spec)
    rule = cfg.selection or FirstBelowBleuOri(BLEU_ORI_THRESHOLD)
    selection = select_output(trace, rule, lm=models.fwd, original=x_star)
    return TaskResult(selection.sentence, selection, trace)


CORRECTION_FLOOR = 0.01
CORRECTION_OUTPUT_STEP = 100
CORRECTION_MATCH_WEIGHT = 12.0


def task_correct(
    x_star: Sentence,
    cfg: SamplerConfig,
    models: Models,
    embeddings: EmbeddingTable,
    stopwords: frozenset[str] | None = None,
    original_surfaces: Sequence[str] | None = None,
    match_weight: float = CORRECTION_MATCH_WEIGHT,
) -> TaskResult:
    """Repair fluency while staying close to the input.

    Soft word-vector matching only (errors may sit inside would-be
    keywords), averaged over content words and weighted by match_weight;
    candidate sets are augmented with spelling/root variants of the
    original surface tokens, and the likelihood floor keeps the chain from
    drifting down in probability. The output is the state at step 100.
    """
    stopwords = stopwords if stopwords is not None else load_stopwords()
    spec = ConstraintSpec(
        models.vocab,
        embed=EmbedMatch(MODE_AVG, embeddings, x_star,
                         content_only=True, stopwords=stopwords,
                         bidirectional=True),
        beta=match_weight,
    )
    if cfg.likelihood_floor is None:
        cfg = dc_replace(cfg, likelihood_floor=CORRECTION_FLOOR)
    surfaces = list(original_surfaces) if original_surfaces else [
        models.vocab.surface(i) for i in x_star.ids if i != UNK_ID
    ]
    extras: set[int] = set()
    for surf in surfaces:
        extras |= augment_candidates(surf, models.vocab)
    out_step = min(CORRECTION_OUTPUT_STEP, cfg.max_steps)
    rule = cfg.selection or SampleAtStep(out_step)
    trace = run_chain(x_star, cfg, models, spec, frozenset(extras))
    selection = select_output(trace, rule, lm=models.fwd, original=x_star)
    return TaskResult(selection.sentence, selection, trace)
