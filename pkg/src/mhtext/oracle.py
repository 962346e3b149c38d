"""Exact ground truth on enumerable micro-languages.

For a vocabulary of a handful of content words and a small maximum length,
the full sentence space can be enumerated, the target distribution
normalized by summation, and the sampler's transition kernel constructed
analytically (proposal probability times acceptance, rejection mass on the
diagonal). That turns the sampler's correctness claims into checkable
linear algebra: detailed balance, stationarity, irreducibility on the
support, and aperiodicity.

The kernel builder reuses the sampler's own candidate machinery in exact
mode, so the audit exercises the same arithmetic the chain runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.sparse.csgraph import connected_components

from .constraints import ConstraintSpec, NEG_INF
from .errors import ContractError, DataError
from .ngram import NGramModel
from .proposals import (
    DELETE,
    INSERT,
    REPLACE,
    Models,
    Proposal,
    Scorer,
    candidate_distribution,
    preselect,
)
from .sampler import EXACT, ChainTrace, SamplerConfig, acceptance
from .textcore import Sentence, Vocabulary


@dataclass(frozen=True)
class MicroSpace:
    """Complete enumeration of sentences up to max_len over a tiny vocab."""

    vocab: Vocabulary
    max_len: int
    states: tuple[Sentence, ...]
    index: dict[tuple[int, ...], int]

    def __len__(self) -> int:
        return len(self.states)

    def state_id(self, sentence: Sentence) -> int:
        ident = self.index.get(sentence.ids)
        if ident is None:
            raise DataError("sentence outside the enumerated space")
        return ident


def enumerate_space(vocab: Vocabulary, max_len: int) -> MicroSpace:
    """All sentences of length 1..max_len in lexicographic id order."""
    content = list(vocab.content_ids)
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if len(content) ** max_len > 10 ** 6:
        raise DataError(
            f"state space too large: {len(content)}^{max_len} > 1e6"
        )
    states: list[Sentence] = []
    for length in range(1, max_len + 1):
        for combo in product(content, repeat=length):
            states.append(Sentence(combo))
    index = {s.ids: i for i, s in enumerate(states)}
    return MicroSpace(vocab, max_len, tuple(states), index)


def exact_stationary(space: MicroSpace, spec: ConstraintSpec,
                     lm: NGramModel) -> np.ndarray:
    """Target distribution normalized by summation over the space.

    Exactly zero on hard-constraint violators; errors out when nothing in
    the space has positive mass.
    """
    scorer = Scorer(spec, lm)
    logs = np.asarray([scorer(s) for s in space.states])
    finite = logs > NEG_INF
    if not finite.any():
        raise DataError("no state in the space satisfies the hard constraints")
    top = logs[finite].max()
    pi = np.zeros(len(logs))
    pi[finite] = np.exp(logs[finite] - top)
    pi /= pi.sum()
    return pi


def exact_kernel(
    space: MicroSpace,
    cfg: SamplerConfig,
    models: Models,
    spec: ConstraintSpec,
) -> np.ndarray:
    """Row-stochastic transition matrix of the exact-mode sampler.

    Entry (i, j) sums g*A over every proposal mapping state i to state j;
    the diagonal absorbs all rejection mass plus self-replacements. Rows
    for states off the target support are identity (the chain can never
    sit there).
    """
    if cfg.mode != EXACT:
        raise ContractError("the kernel oracle only covers exact mode")
    if cfg.max_len != space.max_len:
        raise ContractError("config max_len must match the enumerated space")
    scorer = Scorer(spec, models.fwd, maxsize=4 * len(space) + 16)
    pcfg = cfg.proposal_config()
    n_states = len(space)
    kernel = np.zeros((n_states, n_states))
    logpi = np.asarray([scorer(s) for s in space.states])

    for i, x in enumerate(space.states):
        if logpi[i] == NEG_INF:
            kernel[i, i] = 1.0
            continue
        n = len(x)
        stay = 0.0

        # replacements: Gibbs draw at each position, acceptance 1
        for m in range(n):
            dist = candidate_distribution(
                x.ids[:m], x.ids[m + 1:],
                preselect(models, x.ids[:m], x.ids[m + 1:], pcfg.k_top, exact=True),
                scorer,
            )
            if dist is None:
                stay += pcfg.p_replace / n
                continue
            for ident, prob, logw in zip(dist.ids, dist.probs, dist.logweights):
                g = pcfg.p_replace / n * float(prob)
                if g == 0.0:
                    continue
                target = x.ids[:m] + (int(ident),) + x.ids[m + 1:]
                proposal = Proposal(REPLACE, m, x.ids[m], int(ident), math.log(g),
                                    0.0, x, Sentence(target), float(logw))
                a = acceptance(proposal, float(logpi[i]), float(logw))
                j = space.index[target]
                kernel[i, j] += g * a
                stay += g * (1.0 - a)

        # insertions: blocked at max length, otherwise word draw per gap
        if n >= space.max_len:
            stay += pcfg.p_insert
        else:
            for slot in range(n + 1):
                dist = candidate_distribution(
                    x.ids[:slot], x.ids[slot:],
                    preselect(models, x.ids[:slot], x.ids[slot:], pcfg.k_top,
                              exact=True),
                    scorer,
                )
                if dist is None:
                    stay += pcfg.p_insert / (n + 1)
                    continue
                for ident, prob, logw in zip(dist.ids, dist.probs, dist.logweights):
                    g = pcfg.p_insert / (n + 1) * float(prob)
                    if g == 0.0:
                        continue
                    target = x.ids[:slot] + (int(ident),) + x.ids[slot:]
                    proposal = Proposal(
                        INSERT, slot, None, int(ident),
                        math.log(g), math.log(pcfg.p_delete / (n + 1)),
                        x, Sentence(target), float(logw),
                    )
                    a = acceptance(proposal, float(logpi[i]), float(logw))
                    j = space.index[target]
                    kernel[i, j] += g * a
                    stay += g * (1.0 - a)

        # deletions: blocked at length 1
        if n == 1:
            stay += pcfg.p_delete
        else:
            for m in range(n):
                target = x.ids[:m] + x.ids[m + 1:]
                logw = scorer(Sentence(target))
                g = pcfg.p_delete / n
                rev_dist = candidate_distribution(
                    x.ids[:m], x.ids[m + 1:],
                    preselect(models, x.ids[:m], x.ids[m + 1:], pcfg.k_top,
                              exact=True),
                    scorer,
                )
                if rev_dist is None:
                    log_rev = NEG_INF
                else:
                    pos = int(np.searchsorted(rev_dist.ids, x.ids[m]))
                    log_rev = (math.log(pcfg.p_insert / n)
                               + math.log(float(rev_dist.probs[pos])))
                proposal = Proposal(DELETE, m, x.ids[m], None,
                                    math.log(g), log_rev, x, Sentence(target), logw)
                a = acceptance(proposal, float(logpi[i]), logw)
                j = space.index[target]
                kernel[i, j] += g * a
                stay += g * (1.0 - a)

        kernel[i, i] += stay
    return kernel


# ----------------------------------------------------------------------
# audit metrics


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance: half the L1 gap."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DataError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def empirical_distribution(
    trace: ChainTrace,
    space: MicroSpace,
    burn_in: int = 0,
    thinning: int = 1,
) -> np.ndarray:
    """Visit frequencies over retained samples (steps >= burn_in)."""
    if thinning < 1:
        raise ValueError("thinning must be >= 1")
    if burn_in >= len(trace.states):
        raise DataError(
            f"burn_in {burn_in} leaves no samples from a {len(trace.states)}-state trace"
        )
    counts = np.zeros(len(space))
    for state in trace.states[burn_in::thinning]:
        counts[space.state_id(state)] += 1
    return counts / counts.sum()


def detailed_balance_violation(pi: np.ndarray, kernel: np.ndarray) -> float:
    """max over pairs of |pi_i P_ij - pi_j P_ji|."""
    flow = pi[:, None] * kernel
    return float(np.abs(flow - flow.T).max())


def stationarity_gap(pi: np.ndarray, kernel: np.ndarray) -> float:
    """max per-component |pi^T P - pi^T|."""
    return float(np.abs(pi @ kernel - pi).max())


def is_strongly_connected_on_support(kernel: np.ndarray, pi: np.ndarray) -> bool:
    """Strong connectivity of the positive-probability transition digraph."""
    support = np.flatnonzero(pi > 0)
    if len(support) == 0:
        return False
    if len(support) == 1:
        return True
    sub = kernel[np.ix_(support, support)] > 0
    n_comp, _ = connected_components(sub, directed=True, connection="strong")
    return int(n_comp) == 1


def is_aperiodic(kernel: np.ndarray, pi: np.ndarray) -> bool:
    """A positive diagonal entry on the support breaks periodicity."""
    support = np.flatnonzero(pi > 0)
    return bool((np.diag(kernel)[support] > 0).any())


# ----------------------------------------------------------------------
# built-in fixtures (analytic or from tiny inline corpora)

#: every conditional of the uniform fixture is 1/4 over {a, b, c, EOS}
UNIFORM_WORDS = ("a", "b", "c")

_BIGRAM_CORPUS = (
    "a b",
    "a b c",
    "b c",
    "c a b",
    "a a b c",
    "b c c",
    "a b b c",
    "c c a",
    "b a",
    "a c b",
)


def uniform_fixture(max_len: int = 3) -> tuple[Models, MicroSpace]:
    """Order-2 uniform model over three words; 39 states at max_len 3."""
    vocab = Vocabulary(list(UNIFORM_WORDS))
    fwd = NGramModel.uniform(vocab, order=2, direction="forward")
    bwd = NGramModel.uniform(vocab, order=2, direction="backward")
    return Models(fwd, bwd), enumerate_space(vocab, max_len)


def bigram_fixture(max_len: int = 3) -> tuple[Models, MicroSpace]:
    """Add-k bigram trained on a fixed ten-line corpus over three words."""
    from .ngram import train
    from .textcore import build_vocab

    vocab = build_vocab(_BIGRAM_CORPUS, max_size=3)
    fwd = train(_BIGRAM_CORPUS, vocab, order=2, direction="forward")
    bwd = train(_BIGRAM_CORPUS, vocab, order=2, direction="backward")
    return Models(fwd, bwd), enumerate_space(vocab, max_len)


FIXTURES = {
    "uniform3": uniform_fixture,
    "bigram3": bigram_fixture,
}


def corrupt_sentence(
    x: Sentence,
    fraction: float,
    rng: np.random.Generator,
    vocab: Vocabulary,
) -> Sentence:
    """Replace ceil(fraction * n) distinct positions with random words.

    Replacement words are drawn uniformly from the content vocabulary and
    may coincide with the originals by chance.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    n = len(x)
    n_corrupt = math.ceil(fraction * n)
    if n_corrupt == 0:
        return x
    positions = rng.choice(n, size=n_corrupt, replace=False)
    content = list(vocab.content_ids)
    ids = list(x.ids)
    for pos in positions:
        ids[pos] = int(content[rng.integers(len(content))])
    return Sentence(tuple(ids))
