"""Candidate transitions: replacement, insertion, deletion.

Each proposal carries exact forward and reverse log proposal
probabilities. An operation decomposes as: pick the kind, pick a position
(uniform over the n word slots) or an insertion gap (uniform over the n+1
gaps), then for replace/insert draw the new word from the target
conditional over a candidate set. With the gap convention the position
factors of an insert and its inverse delete cancel exactly, so the
acceptance ratios reduce to the clean breakdown per operation.

Insertion uses the placeholder scheme collapsed into one composite step:
the chosen gap plays the role of the transient placeholder token and the
drawn word fills it immediately, so PHD never appears in any state.

Candidate sets come from the pre-selector Q: the minimum of the forward
prefix joint and the backward suffix joint, each ending/starting at the
candidate word. Exact mode keeps the whole content vocabulary and makes
the replacement draw a true Gibbs step; truncated mode keeps the top-K by
Q (plus the word currently at the position and any augmentation extras)
and is a documented approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSpec, stationary_logscore
from .errors import ContractError
from .ngram import NGramModel
from .textcore import Sentence, Vocabulary

NEG_INF = float("-inf")

REPLACE = "replace"
INSERT = "insert"
DELETE = "delete"

FULL_VOCAB = "full-vocab"
TOP_K = "top-K"
AUGMENTED = "augmented"


@dataclass(frozen=True)
class CandidateSet:
    """Words eligible for one replacement/insertion draw.

    probs (when set) is the normalized target conditional over ids;
    logweights holds the unnormalized log target score of the full
    sentence each candidate would produce. Special tokens never appear.
    """

    ids: np.ndarray
    q: np.ndarray | None
    probs: np.ndarray | None
    logweights: np.ndarray | None
    provenance: str


@dataclass(frozen=True)
class Proposal:
    """One candidate transition, with its reversibility bookkeeping.

    position is a 0-based word index for replace/delete and a gap index in
    [0, n] for insert. Infeasible proposals (delete at length 1, insert at
    max length) carry result=None and are always rejected.
    """

    kind: str
    position: int
    old_word: int | None
    new_word: int | None
    log_g_fwd: float
    log_g_rev: float
    base: Sentence
    result: Sentence | None
    result_logscore: float
    feasible: bool = True


@dataclass
class Models:
    """Forward/backward language model pair sharing one vocabulary."""

    fwd: NGramModel
    bwd: NGramModel

    def __post_init__(self):
        if self.fwd.vocab is not self.bwd.vocab:
            if self.fwd.vocab.tokens != self.bwd.vocab.tokens:
                raise ContractError("forward and backward models disagree on vocabulary")
        if self.fwd.direction != "forward" or self.bwd.direction != "backward":
            raise ContractError("Models expects (forward, backward) in that order")

    @property
    def vocab(self) -> Vocabulary:
        return self.fwd.vocab


class Scorer:
    """Memoized stationary_logscore; one per chain, never shared."""

    def __init__(self, spec: ConstraintSpec, lm: NGramModel, maxsize: int = 8192):
        self.spec = spec
        self.lm = lm
        self._cache: dict[tuple[int, ...], float] = {}
        self._maxsize = maxsize

    def __call__(self, sentence: Sentence) -> float:
        key = sentence.ids
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = stationary_logscore(sentence, self.spec, self.lm)
        if len(self._cache) >= self._maxsize:
            self._cache.clear()
        self._cache[key] = value
        return value


def preselect(
    models: Models,
    prefix: tuple[int, ...],
    suffix: tuple[int, ...],
    k_top: int,
    extra: frozenset[int] | None = None,
    exact: bool = False,
) -> CandidateSet:
    """Shortlist words for one slot by Q = min(prefix joint, suffix joint).

    The forward joint covers prefix + candidate, the backward joint
    candidate + suffix (scored on the reversed suffix). Only the candidate
    conditional varies across words, so both sides are one dense
    conditional plus a constant. Ties break toward smaller ids. The word
    ids in `extra` join the shortlist regardless of Q (error-correction
    augmentation); exact mode keeps every content word.
    """
    vocab = models.vocab
    content = vocab.content_id_array()
    if exact or k_top >= len(content):
        return CandidateSet(content, None, None, None, FULL_VOCAB)
    if k_top < 1:
        raise ValueError("k_top must be >= 1")

    fwd_cut = prefix[max(0, len(prefix) - (models.fwd.order - 1)):]
    rev_suffix = suffix[::-1]
    bwd_cut = rev_suffix[max(0, len(rev_suffix) - (models.bwd.order - 1)):]
    # rank in probability space (log is monotone, so the minimum and the
    # top-k are unchanged) and take logs only for the selected few; shift
    # both prefix joints by a shared offset to keep exp() in range
    fwd_lp = models.fwd.prefix_logprob(prefix)
    bwd_lp = models.bwd.prefix_logprob(rev_suffix)
    offset = max(fwd_lp, bwd_lp)
    q_all = np.minimum(
        math.exp(fwd_lp - offset) * models.fwd.cond_dist(fwd_cut),
        math.exp(bwd_lp - offset) * models.bwd.cond_dist(bwd_cut),
    )
    q = q_all[content]

    # top-k with deterministic by-id tie-break at the threshold
    kth = np.partition(q, len(q) - k_top)[len(q) - k_top]
    above = content[q > kth]
    at = content[q == kth]
    need = k_top - len(above)
    picked = np.concatenate([above, at[:need]]) if need > 0 else above[:k_top]
    provenance = TOP_K
    if extra:
        extra_ids = np.asarray(sorted(extra), dtype=np.int64)
        picked = np.union1d(picked, extra_ids)
        provenance = AUGMENTED
    picked = np.sort(picked)
    with np.errstate(divide="ignore"):
        q_log = np.log(q_all[picked]) + offset
    return CandidateSet(picked, q_log, None, None, provenance)


def candidate_distribution(
    prefix: tuple[int, ...],
    suffix: tuple[int, ...],
    candidates: CandidateSet,
    scorer: Scorer,
) -> CandidateSet | None:
    """Normalize the target score over candidate completions of one slot.

    Weight of candidate w is the unnormalized target of prefix + w +
    suffix. Returns None when every candidate violates a hard constraint
    (the caller treats the step as rejected).
    """
    logw = np.empty(len(candidates.ids))
    for i, ident in enumerate(candidates.ids):
        logw[i] = scorer(Sentence(prefix + (int(ident),) + suffix))
    top = logw.max()
    if top == NEG_INF:
        return None
    probs = np.exp(logw - top)
    probs /= probs.sum()
    return CandidateSet(candidates.ids, candidates.q, probs, logw, candidates.provenance)


def replacement_dist(
    x: Sentence,
    m: int,
    candidates: CandidateSet,
    spec: ConstraintSpec,
    lm: NGramModel,
    scorer: Scorer | None = None,
) -> CandidateSet | None:
    """Target conditional for the word at position m given the rest of x."""
    if not 0 <= m < len(x):
        raise ContractError(f"position {m} out of range for length {len(x)}")
    scorer = scorer or Scorer(spec, lm)
    return candidate_distribution(x.ids[:m], x.ids[m + 1:], candidates, scorer)


def apply(x: Sentence, proposal: Proposal) -> Sentence:
    """Materialize a proposal; the proposal fully determines the result."""
    if proposal.base.ids != x.ids:
        raise ContractError("proposal was constructed for a different sentence")
    if not proposal.feasible or proposal.result is None:
        raise ContractError("cannot apply an infeasible proposal")
    return proposal.result


@dataclass(frozen=True)
class ProposalConfig:
    """Knobs propose() needs; a view over the sampler configuration."""

    p_insert: float = 1.0 / 3.0
    p_delete: float = 1.0 / 3.0
    p_replace: float = 1.0 / 3.0
    k_top: int = 50
    exact: bool = False
    max_len: int = 60

    def __post_init__(self):
        total = self.p_insert + self.p_delete + self.p_replace
        if abs(total - 1.0) > 1e-9:
            raise ValueError("operation probabilities must sum to 1")
        if min(self.p_insert, self.p_delete, self.p_replace) <= 0:
            raise ValueError("operation probabilities must be positive")


def _draw_kind(u: float, cfg: ProposalConfig) -> str:
    if u < cfg.p_insert:
        return INSERT
    if u < cfg.p_insert + cfg.p_delete:
        return DELETE
    return REPLACE


def _draw_index(probs: np.ndarray, u: float) -> int:
    return int(np.searchsorted(np.cumsum(probs), u, side="right").clip(0, len(probs) - 1))


def _logprob_of(dist: CandidateSet, word: int) -> float:
    """Log draw probability of `word` under a normalized candidate set.

    -inf when the word is not a candidate; that only happens for UNK,
    which is never proposable, so e.g. deleting an UNK is irreversible and
    gets acceptance 0 (replacement remains its escape route).
    """
    idx = int(np.searchsorted(dist.ids, word))
    if idx >= len(dist.ids) or dist.ids[idx] != word:
        return NEG_INF
    p = float(dist.probs[idx])
    return math.log(p) if p > 0 else NEG_INF


def propose(
    x: Sentence,
    rng: np.random.Generator,
    cfg: ProposalConfig,
    models: Models,
    spec: ConstraintSpec,
    scorer: Scorer | None = None,
    extra_candidates: frozenset[int] | None = None,
) -> Proposal:
    """Draw one proposal from the current state.

    extra_candidates (error-correction augmentation) joins every
    replacement/insertion shortlist in truncated mode.
    """
    scorer = scorer or Scorer(spec, models.fwd)
    vocab = models.vocab
    n = len(x)
    kind = _draw_kind(rng.random(), cfg)

    if kind == DELETE and n == 1:
        # the empty sentence is outside the state space
        return Proposal(DELETE, 0, x.ids[0], None, math.log(cfg.p_delete),
                        NEG_INF, x, None, NEG_INF, feasible=False)
    if kind == INSERT and n >= cfg.max_len:
        return Proposal(INSERT, 0, None, None, math.log(cfg.p_insert),
                        NEG_INF, x, None, NEG_INF, feasible=False)

    extras = set(extra_candidates) if extra_candidates else set()

    if kind == REPLACE:
        m = int(rng.integers(n))
        old = x.ids[m]
        pre_extra = extras | ({old} if old in vocab.content_ids else set())
        cands = preselect(models, x.ids[:m], x.ids[m + 1:], cfg.k_top,
                          frozenset(pre_extra), exact=cfg.exact)
        dist = candidate_distribution(x.ids[:m], x.ids[m + 1:], cands, scorer)
        if dist is None:
            return Proposal(REPLACE, m, old, None, math.log(cfg.p_replace / n),
                            NEG_INF, x, None, NEG_INF, feasible=False)
        idx = _draw_index(dist.probs, rng.random())
        new = int(dist.ids[idx])
        result = Sentence(x.ids[:m] + (new,) + x.ids[m + 1:])
        pos_term = math.log(cfg.p_replace / n)
        # same slot, same candidate set: the reverse draw probability of the
        # old word comes from the same conditional (exact both ways in
        # exact mode, the documented approximation under truncation)
        log_fwd = pos_term + math.log(dist.probs[idx])
        log_rev = pos_term + _logprob_of(dist, old)
        return Proposal(REPLACE, m, old, new, log_fwd, log_rev, x, result,
                        float(dist.logweights[idx]))

    if kind == INSERT:
        slot = int(rng.integers(n + 1))
        cands = preselect(models, x.ids[:slot], x.ids[slot:], cfg.k_top,
                          frozenset(extras) or None, exact=cfg.exact)
        dist = candidate_distribution(x.ids[:slot], x.ids[slot:], cands, scorer)
        if dist is None:
            return Proposal(INSERT, slot, None, None,
                            math.log(cfg.p_insert / (n + 1)),
                            NEG_INF, x, None, NEG_INF, feasible=False)
        idx = _draw_index(dist.probs, rng.random())
        new = int(dist.ids[idx])
        result = Sentence(x.ids[:slot] + (new,) + x.ids[slot:])
        log_fwd = math.log(cfg.p_insert / (n + 1)) + math.log(dist.probs[idx])
        # inverse: delete position `slot` of the (n+1)-word result
        log_rev = math.log(cfg.p_delete / (n + 1))
        return Proposal(INSERT, slot, None, new, log_fwd, log_rev, x, result,
                        float(dist.logweights[idx]))

    # DELETE, n >= 2
    m = int(rng.integers(n))
    old = x.ids[m]
    result = Sentence(x.ids[:m] + x.ids[m + 1:])
    log_fwd = math.log(cfg.p_delete / n)
    # inverse: insert `old` at gap m of the shortened sentence; the deleted
    # word joins the shortlist so the stored reverse probability is finite
    pre_extra = extras | ({old} if old in vocab.content_ids else set())
    cands = preselect(models, x.ids[:m], x.ids[m + 1:], cfg.k_top,
                      frozenset(pre_extra), exact=cfg.exact)
    dist = candidate_distribution(x.ids[:m], x.ids[m + 1:], cands, scorer)
    if dist is None:
        log_rev = NEG_INF
    else:
        log_rev = math.log(cfg.p_insert / n) + _logprob_of(dist, old)
    return Proposal(DELETE, m, old, None, log_fwd, log_rev, x, result,
                    scorer(result))
