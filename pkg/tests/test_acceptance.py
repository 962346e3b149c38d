"""Acceptance suite: one test per criterion, one printed line per verdict.

Run with `pytest -s tests/test_acceptance.py -v` to see the verdict lines
as they happen. Every tolerance is fixed here; nothing is calibrated at
run time.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from mhtext.cli import main
from mhtext.constraints import ConstraintSpec, keyword_indicator
from mhtext.embeddings import one_hot_table
from mhtext.metrics import BleuConfig, bleu, bleu_ori, corpus_nll, gleu
from mhtext.ngram import NGramModel, train
from mhtext.oracle import (
    bigram_fixture,
    corrupt_sentence,
    detailed_balance_violation,
    empirical_distribution,
    exact_kernel,
    exact_stationary,
    is_aperiodic,
    is_strongly_connected_on_support,
    stationarity_gap,
    tv_distance,
    uniform_fixture,
)
from mhtext.proposals import (
    DELETE,
    INSERT,
    REPLACE,
    Models,
    ProposalConfig,
    Scorer,
    candidate_distribution,
    preselect,
    propose,
)
from mhtext.sampler import (
    EXACT,
    FirstBelowBleuOri,
    SamplerConfig,
    run_chain,
    select_output,
    task_correct,
    task_keywords,
    task_paraphrase,
)
from mhtext.textcore import Sentence, Vocabulary, build_vocab, tokenize

DATA = Path(__file__).parent / "data"


def _verdict(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def _exact_cfg(space, **kw):
    base = dict(mode=EXACT, max_len=space.max_len, burn_in=0)
    base.update(kw)
    return SamplerConfig(**base)


@pytest.fixture(scope="module")
def uniform():
    return uniform_fixture()


@pytest.fixture(scope="module")
def bigram():
    return bigram_fixture()


@pytest.fixture(scope="module")
def toy_setup():
    corpus = (DATA / "toy_corpus.txt").read_text().splitlines()
    vocab = build_vocab(corpus, max_size=100)
    models = Models(
        train(corpus, vocab, order=3, direction="forward"),
        train(corpus, vocab, order=3, direction="backward"),
    )
    return corpus, vocab, models


def test_criterion_01_detailed_balance(uniform, bigram):
    """Exactness core: analytic kernel in detailed balance with exact pi."""
    start = time.monotonic()
    worst_db = 0.0
    worst_gap = 0.0
    for models, space in (uniform, bigram):
        spec = ConstraintSpec(models.vocab)
        pi = exact_stationary(space, spec, models.fwd)
        kernel = exact_kernel(space, _exact_cfg(space), models, spec)
        worst_db = max(worst_db, detailed_balance_violation(pi, kernel))
        worst_gap = max(worst_gap, stationarity_gap(pi, kernel))
    elapsed = time.monotonic() - start
    ok = worst_db < 1e-9 and worst_gap < 1e-9 and elapsed < 10.0
    _verdict(1, ok, f"max |pi_i P_ij - pi_j P_ji| = {worst_db:.2e}, "
                    f"stationarity gap = {worst_gap:.2e}, {elapsed:.1f}s")


def test_criterion_02_convergence_200k(uniform):
    """200k exact steps reach the target within TV 0.05, both spaces."""
    models, space = uniform
    vocab = models.vocab
    start = time.monotonic()

    spec_free = ConstraintSpec(vocab)
    cfg = _exact_cfg(space, max_steps=200_000, burn_in=1000, seed=0)
    trace = run_chain(Sentence((vocab.id_of["a"],)), cfg, models, spec_free)
    pi = exact_stationary(space, spec_free, models.fwd)
    tv_free = tv_distance(
        empirical_distribution(trace, space, burn_in=1000), pi
    )

    spec_b = ConstraintSpec(vocab, keywords=frozenset({vocab.id_of["b"]}))
    trace_b = run_chain(Sentence((vocab.id_of["b"],)), cfg, models, spec_b)
    pi_b = exact_stationary(space, spec_b, models.fwd)
    tv_b = tv_distance(
        empirical_distribution(trace_b, space, burn_in=1000), pi_b
    )
    elapsed = time.monotonic() - start
    ok = tv_free < 0.05 and tv_b < 0.05 and elapsed < 60.0
    _verdict(2, ok, f"TV unconstrained = {tv_free:.4f}, "
                    f"TV keyword-constrained = {tv_b:.4f}, {elapsed:.1f}s")


def test_criterion_03_replacement_acceptance_one(uniform):
    """Gibbs replacements never reject; insert/delete rates interior."""
    models, space = uniform
    spec = ConstraintSpec(models.vocab)
    cfg = _exact_cfg(space, max_steps=10_000, seed=7)
    trace = run_chain(Sentence((models.vocab.id_of["a"],)), cfg, models, spec)
    rates = trace.acceptance_rates()
    exact_equal = trace.accepted[REPLACE] == trace.proposed[REPLACE]
    interior = 0.0 < rates[INSERT] < 1.0 and 0.0 < rates[DELETE] < 1.0
    ok = exact_equal and interior
    _verdict(3, ok, f"replace {trace.accepted[REPLACE]}/{trace.proposed[REPLACE]}, "
                    f"insert rate {rates[INSERT]:.3f}, delete rate {rates[DELETE]:.3f}")


def test_criterion_04_hard_constraint_preservation():
    """1e5 keyword-task steps over arities 1-4: zero indicator violations."""
    words = ["alpha", "bravo", "carol", "delta", "echo", "fox"]
    vocab = Vocabulary(words)
    models = Models(
        NGramModel.uniform(vocab, order=2, direction="forward"),
        NGramModel.uniform(vocab, order=2, direction="backward"),
    )
    violations = 0
    total_steps = 0
    for arity in (1, 2, 3, 4):
        keys = frozenset(vocab.id_of[w] for w in words[:arity])
        spec = ConstraintSpec(vocab, keywords=keys)
        cfg = SamplerConfig(mode=EXACT, max_len=6, max_steps=25_000,
                            burn_in=0, seed=arity)
        trace = run_chain(Sentence(tuple(sorted(keys))), cfg, models, spec)
        total_steps += cfg.max_steps
        violations += sum(
            1 for s in trace.states if keyword_indicator(s, keys) == 0
        )
    ok = violations == 0 and total_steps == 100_000
    _verdict(4, ok, f"{total_steps} steps over arities 1-4, "
                    f"{violations} violations")


def test_criterion_05_ergodicity(uniform):
    """Exact-mode transition graph strongly connected and aperiodic."""
    models, space = uniform
    spec = ConstraintSpec(models.vocab)
    pi = exact_stationary(space, spec, models.fwd)
    kernel = exact_kernel(space, _exact_cfg(space), models, spec)
    connected = is_strongly_connected_on_support(kernel, pi)
    aperiodic = is_aperiodic(kernel, pi)
    ok = connected and aperiodic
    _verdict(5, ok, f"strongly connected = {connected}, aperiodic = {aperiodic}")


def test_criterion_06_protocol_fidelity(toy_setup):
    """Task protocols: step budgets and selection rules, by trace inspection."""
    corpus, vocab, models = toy_setup
    problems = []

    cfg = SamplerConfig(max_steps=200, burn_in=100, k_top=10, seed=5, max_len=20)
    kw = task_keywords([vocab.id_of["cat"], vocab.id_of["tree"]], cfg, models)
    if len(kw.trace.records) != 200:
        problems.append("keywords chain did not run 200 steps")
    if kw.selection.step < 100:
        problems.append("keywords selection before step 100")
    nlls = [models.fwd.per_token_nll(kw.trace.states[t]) for t in range(100, 201)]
    best = 100 + int(np.argmin(nlls))
    if kw.selection.step != best:
        problems.append(f"keywords selection {kw.selection.step} != argmin {best}")

    x_star = tokenize("the old cat slept under the tree on the grass .", vocab)
    cfg_p = SamplerConfig(max_steps=200, burn_in=0, k_top=10, seed=2, max_len=30)
    para = task_paraphrase(x_star, cfg_p, models, variant="none")
    crossings = [
        t for t in range(1, 201)
        if bleu_ori(list(para.trace.states[t].ids), list(x_star.ids)) < 55.0
    ]
    if not para.selection.met or not crossings:
        problems.append("paraphrase chain never crossed the BLEU-ori threshold")
    elif para.selection.step != crossings[0]:
        problems.append(
            f"paraphrase selection {para.selection.step} != first crossing {crossings[0]}"
        )

    table = one_hot_table([vocab.surface(i) for i in vocab.content_ids])
    x_err = tokenize("the cat sat mat the on .", vocab)
    corr = task_correct(x_err, cfg, models, table,
                        original_surfaces="the cat sat mat the on .".split())
    if corr.selection.step != 100:
        problems.append(f"correction output at step {corr.selection.step}, not 100")
    if corr.sentence.ids != corr.trace.states[100].ids:
        problems.append("correction output is not the recorded step-100 state")

    _verdict(6, not problems, "; ".join(problems) or
             "keywords min-NLL>=100, paraphrase first-below-55, correction step-100")


def test_criterion_07_metric_oracles(uniform):
    """BLEU/GLEU/NLL against closed forms and independent hand counts."""
    problems = []
    rng = np.random.default_rng(1)
    words = list("abcdefgh")
    for _ in range(100):
        n = int(rng.integers(1, 12))
        sent = [words[i] for i in rng.integers(0, len(words), size=n)]
        if abs(bleu(sent, [sent]) - 100.0) > 1e-9:
            problems.append(f"bleu identity failed on {sent}")
            break

    hand = bleu(["a", "b", "c"], [["a", "b", "d"]], BleuConfig(order=2))
    if abs(hand - 57.74) > 0.01:
        problems.append(f"bleu hand case = {hand:.4f}, want 57.74 +- 0.01")

    golden = gleu(["a", "b", "x"], ["a", "x", "c"], [["a", "b", "c"]],
                  BleuConfig(order=2))
    if abs(golden - 100.0 * math.sqrt(1.0 / 6.0)) > 1e-9:
        problems.append(f"gleu golden case = {golden:.6f}")
    s = "the cat sat".split()
    if abs(gleu(s, s, [s]) - 100.0) > 1e-9:
        problems.append("gleu identity failed")
    ref = "the cat sits".split()
    if not gleu(ref, s, [ref]) > gleu(s, s, [ref]):
        problems.append("gleu does not reward correction over copying")

    models, _ = uniform
    vocab = models.vocab
    sentences = [tokenize(t, vocab) for t in ("a", "b c", "a b c", "c")]
    nll = corpus_nll(models.fwd, sentences)
    if abs(nll - math.log(4.0)) > 1e-12:
        problems.append(f"uniform corpus NLL = {nll!r}, want ln 4")

    _verdict(7, not problems, "; ".join(problems) or
             "identity x100, 57.74 case, GLEU goldens, corpus NLL = ln 4")


def _inverse_logprob(proposal, models, spec, scorer, pcfg):
    """Forward log-probability of the exact inverse proposal from x'."""
    xp = proposal.result
    n2 = len(xp)
    if proposal.kind == REPLACE:
        m = proposal.position
        dist = candidate_distribution(
            xp.ids[:m], xp.ids[m + 1:],
            preselect(models, xp.ids[:m], xp.ids[m + 1:], pcfg.k_top, exact=True),
            scorer,
        )
        idx = int(np.searchsorted(dist.ids, proposal.old_word))
        return math.log(pcfg.p_replace / n2) + math.log(float(dist.probs[idx]))
    if proposal.kind == INSERT:
        return math.log(pcfg.p_delete / n2)
    # DELETE: inverse inserts old_word at gap `position` of x'
    m = proposal.position
    dist = candidate_distribution(
        xp.ids[:m], xp.ids[m:],
        preselect(models, xp.ids[:m], xp.ids[m:], pcfg.k_top, exact=True),
        scorer,
    )
    idx = int(np.searchsorted(dist.ids, proposal.old_word))
    return (math.log(pcfg.p_insert / (n2 + 1))
            + math.log(float(dist.probs[idx])))


def test_criterion_08_reversibility_bookkeeping(uniform, bigram):
    """Stored reverse log-probs equal independently constructed inverses."""
    worst = 0.0
    checked = 0
    for models, space in (uniform, bigram):
        spec = ConstraintSpec(models.vocab)
        scorer = Scorer(spec, models.fwd)
        pcfg = ProposalConfig(exact=True, max_len=space.max_len)
        rng = np.random.default_rng(99)
        while_checked = 0
        while while_checked < 5000:
            x = space.states[int(rng.integers(len(space)))]
            proposal = propose(x, rng, pcfg, models, spec, scorer)
            if not proposal.feasible:
                continue
            inverse = _inverse_logprob(proposal, models, spec, scorer, pcfg)
            worst = max(worst, abs(inverse - proposal.log_g_rev))
            while_checked += 1
        checked += while_checked
    ok = worst < 1e-9 and checked == 10_000
    _verdict(8, ok, f"{checked} proposals, worst inverse mismatch {worst:.2e}")


def test_criterion_09_cli_determinism(tmp_path, toy_setup):
    """Every subcommand, run twice with one config, is byte-identical."""
    corpus_path = DATA / "toy_corpus.txt"
    root = tmp_path

    def snapshot(paths):
        return {p: Path(p).read_bytes() for p in paths}

    runs = []

    fwd, bwd = root / "fwd.arpa", root / "bwd.arpa"
    runs.append((["train-lm", "--corpus", str(corpus_path), "--order", "3",
                  "--direction", "fwd", "--vocab-size", "100", "--out", str(fwd)],
                 [fwd]))
    runs.append((["train-lm", "--corpus", str(corpus_path), "--order", "3",
                  "--direction", "bwd", "--vocab-size", "100", "--out", str(bwd)],
                 [bwd]))

    model_args = ["--fwd-lm", str(fwd), "--bwd-lm", str(bwd)]
    gen_out = root / "gen.txt"
    runs.append((["generate", *model_args, "--keywords", "cat,mat",
                  "--steps", "150", "--burn-in", "75", "--seed", "3",
                  "--out", str(gen_out)], [gen_out]))

    para_in = root / "para_in.txt"
    para_in.write_text("the old cat slept under the tree .\n")
    para_out = root / "para.txt"
    runs.append((["paraphrase", *model_args, "--input", str(para_in),
                  "--constraint", "kw", "--steps", "80", "--burn-in", "0",
                  "--seed", "4", "--out", str(para_out)], [para_out]))

    corr_in = root / "corr_in.txt"
    corr_in.write_text("the cat sat mat the on .\n")
    corr_out = root / "corr.txt"
    runs.append((["correct", *model_args, "--input", str(corr_in),
                  "--steps", "100", "--burn-in", "0", "--seed", "5",
                  "--out", str(corr_out)], [corr_out]))

    diag_dir = root / "diag"
    runs.append((["diagnose", "--fixture", "uniform3", "--steps", "3000",
                  "--seed", "6", "--out-dir", str(diag_dir)],
                 [diag_dir / "audit.txt", diag_dir / "tv_curve.tsv",
                  diag_dir / "tv_curve.png", diag_dir / "acceptance_rates.tsv",
                  diag_dir / "acceptance_rates.png"]))

    eval_out = root / "metrics.tsv"
    runs.append((["eval", "--candidates", str(para_out), "--references",
                  str(para_in), "--originals", str(para_in), "--lm", str(fwd),
                  "--out", str(eval_out), "--plot"],
                 [eval_out, root / "metrics.png"]))

    mismatched = []
    for args, artifacts in runs:
        assert main(args) == 0, f"first run failed: {args[0]}"
        first = snapshot(artifacts)
        assert main(args) == 0, f"second run failed: {args[0]}"
        for path, blob in snapshot(artifacts).items():
            if blob != first[path]:
                mismatched.append(str(path))
    ok = not mismatched
    _verdict(9, ok, "all subcommand outputs byte-identical across reruns"
             if ok else f"mismatched: {mismatched}")


def test_criterion_10_corruption_ordering(toy_setup):
    """Small corruption is noise; total corruption is strictly worse."""
    corpus, vocab, models = toy_setup
    table = one_hot_table([vocab.surface(i) for i in vocab.content_ids])
    inputs = [
        "the old cat slept under the tree on the grass .",
        "a small dog ran over the mat under the tree .",
    ]
    levels = [0.0, 0.05, 0.10, 1.0]
    means = []
    for li, level in enumerate(levels):
        scores = []
        for line_idx, text in enumerate(inputs):
            x_star = tokenize(text, vocab)
            from mhtext.constraints import EmbedMatch

            spec = ConstraintSpec(vocab, embed=EmbedMatch("avg", table, x_star),
                                  beta=4.0)
            for s in range(3):
                seed = 10_000 * li + 101 * line_idx + s
                rng = np.random.default_rng(seed)
                x0 = corrupt_sentence(x_star, level, rng, vocab)
                cfg = SamplerConfig(k_top=8, max_steps=200, burn_in=0,
                                    seed=seed, max_len=24)
                trace = run_chain(x0, cfg, models, spec)
                picked = select_output(trace, FirstBelowBleuOri(55.0),
                                       original=x_star)
                scores.append(bleu(list(picked.sentence.ids), [list(x_star.ids)]))
        means.append(sum(scores) / len(scores))
    mild = means[:3]
    spread = max(mild) - min(mild)
    gap = min(mild) - means[3]
    ok = spread <= 30.0 and gap >= 15.0
    _verdict(10, ok, f"means 0/5/10/100% = "
                     f"{means[0]:.1f}/{means[1]:.1f}/{means[2]:.1f}/{means[3]:.1f}, "
                     f"spread {spread:.1f} <= 30, gap {gap:.1f} >= 15")


def test_criterion_11_throughput():
    """>= 500 proposals/second with a 50k-word trigram and K = 50."""
    rng = np.random.default_rng(0)
    v_size = 50_000
    lines = []
    ids = np.arange(v_size)
    for start in range(0, v_size, 20):
        lines.append(" ".join(f"w{i}" for i in ids[start:start + 20]))
    zipf = rng.zipf(1.3, size=(4000, 15)) % v_size
    for row in zipf:
        lines.append(" ".join(f"w{i}" for i in row))
    vocab = build_vocab(lines, max_size=v_size)
    models = Models(
        train(lines, vocab, order=3, direction="forward"),
        train(lines, vocab, order=3, direction="backward"),
    )
    spec = ConstraintSpec(vocab)
    x0 = Sentence(tuple(vocab.id_of[f"w{i}"] for i in range(100, 115)))
    warm = SamplerConfig(k_top=50, max_steps=200, burn_in=0, seed=1, max_len=40)
    run_chain(x0, warm, models, spec)
    cfg = SamplerConfig(k_top=50, max_steps=2000, burn_in=0, seed=2, max_len=40)
    start = time.monotonic()
    trace = run_chain(x0, cfg, models, spec)
    elapsed = time.monotonic() - start
    rate = sum(trace.proposed.values()) / elapsed
    ok = rate >= 500.0
    _verdict(11, ok, f"{rate:.0f} proposals/s "
                     f"(vocab {len(vocab) - 4}, trigram, K=50)")
