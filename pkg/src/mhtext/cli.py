"""Command-line surface: reproducible runs over files on disk.

Subcommands: train-lm, generate, paraphrase, correct, diagnose, eval.
Configuration precedence is CLI flags over a key=value config file over
built-in defaults; the fully resolved configuration (and its hash) is
echoed into every output file's metadata header, and all randomness flows
from the recorded seed, so identical invocations produce byte-identical
outputs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import metrics, report
from .constraints import ConstraintSpec, EmbedMatch, keywords_from_surfaces, load_stopwords
from .embeddings import load_embeddings, one_hot_table
from .errors import ContractError, DataError, MhtextError, UsageError
from .ngram import BACKWARD, FORWARD, SmoothingConfig, export_arpa, import_arpa, train
from .oracle import (
    FIXTURES,
    corrupt_sentence,
    detailed_balance_violation,
    exact_kernel,
    exact_stationary,
    is_aperiodic,
    is_strongly_connected_on_support,
    stationarity_gap,
    tv_distance,
)
from .proposals import Models
from .sampler import (
    EXACT,
    TRUNCATED,
    SamplerConfig,
    export_trace,
    run_chain,
    task_correct,
    task_keywords,
    task_paraphrase,
)
from .textcore import Sentence, Vocabulary, build_vocab, detokenize, tokenize

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we own the exit codes
        raise UsageError(message)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _BOOL_TRUE:
        return True
    if lowered in _BOOL_FALSE:
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config_file(path: str) -> dict[str, str]:
    """key=value lines; '#' starts a comment; later keys win."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve_config(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > config file > defaults, with file values typed by default."""
    file_cfg = read_config_file(args.config) if getattr(args, "config", None) else {}
    resolved = dict(defaults)
    for key, raw in file_cfg.items():
        if key not in defaults:
            raise UsageError(f"unknown config key {key!r}")
        ref = defaults[key]
        if isinstance(ref, bool):
            resolved[key] = _parse_bool(raw)
        elif isinstance(ref, int) and ref is not None:
            resolved[key] = int(raw)
        elif isinstance(ref, float):
            resolved[key] = float(raw)
        else:
            resolved[key] = raw
    for key in defaults:
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
    return resolved


def config_metadata(command: str, resolved: dict) -> list[str]:
    def fmt(value) -> str:
        if isinstance(value, (list, tuple)):
            return ",".join(str(v) for v in value)
        return str(value)

    items = " ".join(f"{k}={fmt(resolved[k])}" for k in sorted(resolved))
    digest = hashlib.sha256(items.encode("utf-8")).hexdigest()[:12]
    return [f"mhtext {command}", f"config: {items}", f"config_hash: {digest}"]


def _write_lines(path: str, metadata: list[str], lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as sink:
        for line in metadata:
            sink.write(f"# {line}\n")
        for line in lines:
            sink.write(line + "\n")


def _read_lines(path: str) -> list[str]:
    """Non-empty lines, skipping '#' metadata headers our own tools write."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return [
        line for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    ]


def _load_models(resolved: dict) -> Models:
    fwd_path, bwd_path = resolved["fwd_lm"], resolved["bwd_lm"]
    if not fwd_path or not bwd_path:
        raise UsageError("this command needs --fwd-lm and --bwd-lm")
    try:
        with open(fwd_path, encoding="utf-8") as f:
            fwd = import_arpa(f, lowercase=resolved.get("lowercase", False))
        with open(bwd_path, encoding="utf-8") as f:
            bwd = import_arpa(f, lowercase=resolved.get("lowercase", False))
    except OSError as exc:
        raise DataError(f"cannot read model file: {exc}") from exc
    if fwd.direction != FORWARD:
        raise DataError(f"{fwd_path} is not a forward model")
    if bwd.direction != BACKWARD:
        raise DataError(f"{bwd_path} is not a backward model (missing direction header?)")
    return Models(fwd, bwd)


def _sampler_config(resolved: dict, seed: int, selection=None) -> SamplerConfig:
    p_i, p_d, p_r = (float(v) for v in resolved["op_probs"].split(","))
    return SamplerConfig(
        p_insert=p_i, p_delete=p_d, p_replace=p_r,
        k_top=resolved["k"],
        max_steps=resolved["steps"],
        burn_in=resolved["burn_in"],
        seed=seed,
        mode=EXACT if resolved["exact"] else TRUNCATED,
        likelihood_floor=resolved.get("floor"),
        selection=selection,
        max_len=resolved["max_len"],
    )


def _line_seed(base: int, index: int) -> int:
    seq = np.random.SeedSequence(entropy=base, spawn_key=(index,))
    return int(seq.generate_state(1)[0])


def _maybe_trace(resolved: dict, index: int, result, vocab: Vocabulary) -> None:
    trace_dir = resolved.get("trace_dir")
    if not trace_dir:
        return
    directory = Path(trace_dir)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / f"line_{index:04d}.jsonl", "w", encoding="utf-8") as sink:
        export_trace(result.trace, vocab, sink)


# ----------------------------------------------------------------------
# subcommands

_TRAIN_DEFAULTS = {
    "corpus": None, "order": 3, "direction": "fwd", "vocab_size": 50000,
    "smoothing": "addk", "add_k": 0.1, "lowercase": False,
    "out": None, "vocab_out": "",
}


def cmd_train_lm(args) -> int:
    resolved = resolve_config(args, _TRAIN_DEFAULTS)
    if not resolved["corpus"] or not resolved["out"]:
        raise UsageError("train-lm needs --corpus and --out")
    lines = _read_lines(resolved["corpus"])
    if not lines:
        raise DataError(f"corpus {resolved['corpus']} is empty")
    vocab = build_vocab(lines, resolved["vocab_size"], lowercase=resolved["lowercase"])
    smoothing = SmoothingConfig(
        kind="add_k" if resolved["smoothing"] == "addk" else "kneser_ney",
        add_k=resolved["add_k"],
    )
    direction = FORWARD if resolved["direction"] in ("fwd", "forward") else BACKWARD
    model = train(lines, vocab, order=resolved["order"], direction=direction,
                  smoothing=smoothing)
    # build fully in memory first so a failure never leaves a partial file
    with open(resolved["out"], "w", encoding="utf-8") as sink:
        export_arpa(model, sink)
    if resolved["vocab_out"]:
        with open(resolved["vocab_out"], "w", encoding="utf-8") as sink:
            vocab.save(sink)
    n_tokens = sum(len(line.split()) for line in lines)
    print(f"trained {direction} order-{resolved['order']} model: "
          f"vocab {len(vocab) - 4} words (+4 specials), "
          f"{len(lines)} sentences, {n_tokens} tokens -> {resolved['out']}")
    return 0


_TASK_DEFAULTS = {
    "fwd_lm": None, "bwd_lm": None, "embeddings": "", "stopwords": "",
    "steps": 200, "burn_in": 100, "k": 50, "seed": 0, "max_len": 60,
    "exact": False, "op_probs": "0.3333333333333333,0.3333333333333333,0.3333333333333334",
    "out": None, "trace_dir": "", "lowercase": False,
}


def _task_common(args, extra_defaults: dict) -> tuple[dict, Models]:
    defaults = {**_TASK_DEFAULTS, **extra_defaults}
    resolved = resolve_config(args, defaults)
    if not resolved["out"]:
        raise UsageError("this command needs --out")
    return resolved, _load_models(resolved)


def cmd_generate(args) -> int:
    resolved, models = _task_common(args, {"keywords": "", "keywords_file": ""})
    if bool(resolved["keywords"]) == bool(resolved["keywords_file"]):
        raise UsageError("pass exactly one of --keywords or --keywords-file")
    if resolved["keywords"]:
        keyword_sets = [resolved["keywords"]]
    else:
        keyword_sets = _read_lines(resolved["keywords_file"])
    vocab = models.vocab
    outputs = []
    for i, line in enumerate(keyword_sets):
        ids = keywords_from_surfaces(line.replace(",", " ").split(), vocab)
        cfg = _sampler_config(resolved, _line_seed(resolved["seed"], i))
        result = task_keywords(ids, cfg, models)
        outputs.append(detokenize(result.sentence, vocab))
        _maybe_trace(resolved, i, result, vocab)
    meta = config_metadata("generate", resolved) + [f"inputs: {len(outputs)}"]
    _write_lines(resolved["out"], meta, outputs)
    print(f"generate: wrote {len(outputs)} sentences -> {resolved['out']}")
    return 0


def cmd_paraphrase(args) -> int:
    resolved, models = _task_common(
        args, {"input": None, "constraint": "kw", "bleu_ori_threshold": 55.0}
    )
    if not resolved["input"]:
        raise UsageError("paraphrase needs --input")
    variant = resolved["constraint"].lower()
    table = None
    if variant.endswith(("wva", "wvm")):
        if not resolved["embeddings"]:
            raise UsageError(f"constraint {variant} needs --embeddings")
        with open(resolved["embeddings"], encoding="utf-8") as f:
            table = load_embeddings(f)
    stops = _load_stopword_file(resolved)
    from .sampler import FirstBelowBleuOri

    outputs = []
    vocab = models.vocab
    for i, line in enumerate(_read_lines(resolved["input"])):
        x_star = tokenize(line, vocab)
        cfg = _sampler_config(
            resolved, _line_seed(resolved["seed"], i),
            selection=FirstBelowBleuOri(resolved["bleu_ori_threshold"]),
        )
        result = task_paraphrase(x_star, cfg, models, variant, table, stops)
        outputs.append(detokenize(result.sentence, vocab))
        _maybe_trace(resolved, i, result, vocab)
    meta = config_metadata("paraphrase", resolved) + [f"inputs: {len(outputs)}"]
    _write_lines(resolved["out"], meta, outputs)
    print(f"paraphrase: wrote {len(outputs)} sentences -> {resolved['out']}")
    return 0


def cmd_correct(args) -> int:
    resolved, models = _task_common(
        args, {"input": None, "floor": 0.01, "match_weight": 12.0}
    )
    if not resolved["input"]:
        raise UsageError("correct needs --input")
    vocab = models.vocab
    if resolved["embeddings"]:
        with open(resolved["embeddings"], encoding="utf-8") as f:
            table = load_embeddings(f)
    else:
        # exact-match vectors keep the run hermetic when no table is given
        table = one_hot_table([vocab.surface(i) for i in vocab.content_ids])
    stops = _load_stopword_file(resolved)
    outputs = []
    for i, line in enumerate(_read_lines(resolved["input"])):
        x_star = tokenize(line, vocab)
        cfg = _sampler_config(resolved, _line_seed(resolved["seed"], i))
        result = task_correct(x_star, cfg, models, table, stops,
                              original_surfaces=line.split(),
                              match_weight=resolved["match_weight"])
        outputs.append(detokenize(result.sentence, vocab))
        _maybe_trace(resolved, i, result, vocab)
    meta = config_metadata("correct", resolved) + [f"inputs: {len(outputs)}"]
    _write_lines(resolved["out"], meta, outputs)
    print(f"correct: wrote {len(outputs)} sentences -> {resolved['out']}")
    return 0


def _load_stopword_file(resolved: dict) -> frozenset[str]:
    if resolved.get("stopwords"):
        return load_stopwords(_read_lines(resolved["stopwords"]))
    return load_stopwords()


_EVAL_DEFAULTS = {
    "candidates": None, "references": None, "originals": None, "lm": None,
    "out": None, "bleu_order": 4, "plot": False, "lowercase": False,
}


def cmd_eval(args) -> int:
    resolved = resolve_config(args, _EVAL_DEFAULTS)
    for key in ("candidates", "references", "originals", "lm", "out"):
        if not resolved[key]:
            raise UsageError(f"eval needs --{key.replace('_', '-')}")
    cand_lines = _read_lines(resolved["candidates"])
    ref_files = resolved["references"]
    if isinstance(ref_files, str):
        ref_files = [ref_files]
    ref_lines = [_read_lines(p) for p in ref_files]
    ori_lines = _read_lines(resolved["originals"])
    lengths = {len(cand_lines), len(ori_lines), *(len(r) for r in ref_lines)}
    if len(lengths) != 1:
        raise DataError(
            f"line-count mismatch across eval files: {sorted(lengths)}"
        )
    with open(resolved["lm"], encoding="utf-8") as f:
        lm = import_arpa(f, lowercase=resolved["lowercase"])
    cfg = metrics.BleuConfig(order=resolved["bleu_order"])
    rows = []
    sentences = []
    for i, cand in enumerate(cand_lines):
        cand_toks = cand.split()
        refs = [ref[i].split() for ref in ref_lines]
        ori = ori_lines[i].split()
        sentence = tokenize(cand, lm.vocab)
        sentences.append(sentence)
        rows.append((
            i,
            metrics.bleu_ref(cand_toks, refs, cfg),
            metrics.bleu_ori(cand_toks, ori, cfg),
            lm.per_token_nll(sentence),
            metrics.gleu(cand_toks, ori, refs, cfg),
        ))
    n = len(rows)
    aggregate = (
        "mean",
        sum(r[1] for r in rows) / n,
        sum(r[2] for r in rows) / n,
        metrics.corpus_nll(lm, sentences),
        sum(r[4] for r in rows) / n,
    )
    meta = config_metadata("eval", resolved) + [
        "nll aggregate is token-weighted; BLEU/GLEU aggregates are line means"
    ]
    out = Path(resolved["out"])
    report.write_tsv(out, ("id", "bleu_ref", "bleu_ori", "nll", "gleu"),
                     rows + [aggregate], metadata=meta)
    if resolved["plot"]:
        _plot_eval(rows, out.with_suffix(".png"))
    print(f"eval: {n} lines -> {out}  "
          f"(bleu_ref {aggregate[1]:.2f}, bleu_ori {aggregate[2]:.2f}, "
          f"nll {aggregate[3]:.4f}, gleu {aggregate[4]:.2f})")
    return 0


def _plot_eval(rows, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter([r[2] for r in rows], [r[1] for r in rows], alpha=0.7)
    ax.set_xlabel("BLEU-ori")
    ax.set_ylabel("BLEU-ref")
    ax.set_title("Per-line paraphrase tradeoff")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


_DIAGNOSE_DEFAULTS = {
    "fixture": "uniform3", "steps": 200000, "seed": 0, "keywords": "",
    "out_dir": None, "burn_in": 1000,
    "corrupt": "", "corpus": "", "input": "", "seeds": 5,
    "corrupt_steps": 200, "k": 8, "beta": 4.0, "lowercase": False,
    "op_probs": "0.3333333333333333,0.3333333333333333,0.3333333333333334",
}


def cmd_diagnose(args) -> int:
    resolved = resolve_config(args, _DIAGNOSE_DEFAULTS)
    if not resolved["out_dir"]:
        raise UsageError("diagnose needs --out-dir")
    out_dir = Path(resolved["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    if resolved["corrupt"]:
        return _diagnose_corruption(resolved, out_dir)
    return _diagnose_audit(resolved, out_dir)


def _diagnose_audit(resolved: dict, out_dir: Path) -> int:
    name = resolved["fixture"]
    if name not in FIXTURES:
        raise DataError(f"unknown fixture {name!r}; have {sorted(FIXTURES)}")
    models, space = FIXTURES[name]()
    spec_kwargs = {}
    if resolved["keywords"]:
        ids = keywords_from_surfaces(
            resolved["keywords"].replace(",", " ").split(), models.vocab
        )
        spec_kwargs["keywords"] = frozenset(ids)
    spec = ConstraintSpec(models.vocab, **spec_kwargs)
    steps = resolved["steps"]
    p_i, p_d, p_r = (float(v) for v in resolved["op_probs"].split(","))
    cfg = SamplerConfig(
        p_insert=p_i, p_delete=p_d, p_replace=p_r,
        mode=EXACT, max_len=space.max_len, max_steps=steps,
        burn_in=min(resolved["burn_in"], steps // 2), seed=resolved["seed"],
    )

    pi = exact_stationary(space, spec, models.fwd)
    kernel = exact_kernel(space, cfg, models, spec)
    db = detailed_balance_violation(pi, kernel)
    gap = stationarity_gap(pi, kernel)
    connected = is_strongly_connected_on_support(kernel, pi)
    aperiodic = is_aperiodic(kernel, pi)

    if spec.keywords:
        x0 = Sentence(tuple(sorted(spec.keywords)))
    else:
        x0 = space.states[0]
    trace = run_chain(x0, cfg, models, spec)

    checkpoints = _geometric_checkpoints(steps)
    tvs = []
    for c in checkpoints:
        burn = min(cfg.burn_in, c // 2)
        tvs.append(tv_distance(_partial_empirical(trace, space, burn, c), pi))
    rates = trace.acceptance_rates()

    meta = config_metadata("diagnose", resolved)
    report.write_tsv(out_dir / "tv_curve.tsv", ("steps", "tv"),
                     list(zip(checkpoints, tvs)), metadata=meta)
    report.render_tv_curve(checkpoints, tvs, out_dir / "tv_curve.png")
    rate_rows = [(kind, trace.proposed[kind], trace.accepted[kind],
                  100.0 * rates[kind] if not math.isnan(rates[kind]) else 0.0)
                 for kind in ("replace", "insert", "delete")]
    report.write_tsv(out_dir / "acceptance_rates.tsv",
                     ("op", "proposed", "accepted", "rate_pct"),
                     rate_rows, metadata=meta)
    report.render_acceptance_bars(
        {k: (0.0 if math.isnan(v) else v) for k, v in rates.items()},
        out_dir / "acceptance_rates.png",
    )

    lines = meta + [
        f"fixture: {name}",
        f"states: {len(space)}",
        f"support_states: {int((pi > 0).sum())}",
        f"max_detailed_balance_violation: {db:.3e}",
        f"stationarity_gap: {gap:.3e}",
        f"irreducible_on_support: {'yes' if connected else 'no'}",
        f"aperiodic: {'yes' if aperiodic else 'no'}",
        f"steps: {steps}",
        f"final_tv: {tvs[-1]:.6f}",
    ] + [f"acceptance_{k}: {rates[k]:.6f}" for k in ("replace", "insert", "delete")]
    (out_dir / "audit.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines[3:]))
    return 0


def _partial_empirical(trace, space, burn_in, upto):
    counts = np.zeros(len(space))
    for state in trace.states[burn_in: upto + 1]:
        counts[space.state_id(state)] += 1
    return counts / counts.sum()


def _geometric_checkpoints(steps: int) -> list[int]:
    points = []
    c = 100
    while c < steps:
        points.append(c)
        c = int(c * 10 ** 0.5) + 1
    points.append(steps)
    return points


def _diagnose_corruption(resolved: dict, out_dir: Path) -> int:
    if not resolved["corpus"] or not resolved["input"]:
        raise UsageError("--corrupt needs --corpus and --input")
    levels = [float(v) for v in resolved["corrupt"].split(",")]
    for level in levels:
        if not 0 <= level <= 1:
            raise DataError(f"corruption level {level} outside [0, 1]")
    corpus = _read_lines(resolved["corpus"])
    vocab = build_vocab(corpus, max_size=50000, lowercase=resolved["lowercase"])
    models = Models(
        train(corpus, vocab, order=3, direction=FORWARD),
        train(corpus, vocab, order=3, direction=BACKWARD),
    )
    table = one_hot_table([vocab.surface(i) for i in vocab.content_ids])
    input_lines = _read_lines(resolved["input"])
    n_seeds = resolved["seeds"]
    steps = resolved["corrupt_steps"]

    # run the paraphrase protocol from each corrupted start and judge the
    # protocol-selected output against the uncorrupted original; soft
    # matching only, since a fully corrupted start must stay on support
    from .sampler import FirstBelowBleuOri, select_output

    per_level_scores: list[list[float]] = []
    for li, level in enumerate(levels):
        scores = []
        for line_idx, line in enumerate(input_lines):
            x_star = tokenize(line, vocab)
            spec = ConstraintSpec(
                vocab,
                embed=EmbedMatch("avg", table, x_star),
                beta=resolved["beta"],
            )
            for s in range(n_seeds):
                seed = _line_seed(resolved["seed"], li * 10007 + line_idx * 101 + s)
                rng = np.random.default_rng(seed)
                x0 = corrupt_sentence(x_star, level, rng, vocab)
                cfg = SamplerConfig(
                    k_top=resolved["k"], max_steps=steps, burn_in=0,
                    seed=seed, max_len=max(60, len(x_star) + 8),
                )
                trace = run_chain(x0, cfg, models, spec)
                picked = select_output(trace, FirstBelowBleuOri(55.0),
                                       original=x_star)
                scores.append(metrics.bleu(list(picked.sentence.ids),
                                           [list(x_star.ids)]))
        per_level_scores.append(scores)

    means = [sum(s) / len(s) for s in per_level_scores]
    meta = config_metadata("diagnose", resolved) + [
        "quality = BLEU(protocol-selected output, uncorrupted original)"
    ]
    rows = [
        (level, mean) + tuple(scores)
        for level, mean, scores in zip(levels, means, per_level_scores)
    ]
    header = ("corruption", "mean_bleu") + tuple(
        f"run{j}" for j in range(len(per_level_scores[0]))
    )
    report.write_tsv(out_dir / "corruption_curve.tsv", header, rows, metadata=meta)
    report.render_corruption_curve(levels, means, per_level_scores,
                                   out_dir / "corruption_curve.png")
    for level, mean in zip(levels, means):
        print(f"corruption {level:.0%}: mean final BLEU vs original {mean:.2f}")
    return 0


# ----------------------------------------------------------------------
# parser assembly


def _add(parser: _Parser, *names, **kwargs):
    parser.add_argument(*names, default=None, **kwargs)


def build_parser() -> _Parser:
    parser = _Parser(prog="mhtext", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-lm", help="train an n-gram model to an ARPA file")
    p.set_defaults(func=cmd_train_lm)
    _add(p, "--corpus"); _add(p, "--order", type=int)
    _add(p, "--direction", choices=("fwd", "bwd", "forward", "backward"))
    _add(p, "--vocab-size", type=int, dest="vocab_size")
    _add(p, "--smoothing", choices=("addk", "kneser-ney"))
    _add(p, "--add-k", type=float, dest="add_k")
    _add(p, "--lowercase", action="store_const", const=True)
    _add(p, "--out"); _add(p, "--vocab-out", dest="vocab_out")
    _add(p, "--config")

    def task_parser(name, help_text):
        q = sub.add_parser(name, help=help_text)
        _add(q, "--fwd-lm", dest="fwd_lm"); _add(q, "--bwd-lm", dest="bwd_lm")
        _add(q, "--embeddings"); _add(q, "--stopwords")
        _add(q, "--steps", type=int); _add(q, "--burn-in", type=int, dest="burn_in")
        _add(q, "--k", type=int); _add(q, "--seed", type=int)
        _add(q, "--max-len", type=int, dest="max_len")
        _add(q, "--exact", action="store_const", const=True)
        _add(q, "--op-probs", dest="op_probs",
             help="insert,delete,replace probabilities")
        _add(q, "--out"); _add(q, "--trace-dir", dest="trace_dir")
        _add(q, "--lowercase", action="store_const", const=True)
        _add(q, "--config")
        return q

    p = task_parser("generate", "sentences containing the given keywords")
    p.set_defaults(func=cmd_generate)
    _add(p, "--keywords"); _add(p, "--keywords-file", dest="keywords_file")

    p = task_parser("paraphrase", "rewrite inputs under a matching constraint")
    p.set_defaults(func=cmd_paraphrase)
    _add(p, "--input")
    _add(p, "--constraint",
         choices=("none", "kw", "kw+wva", "kw+wvm", "wva", "wvm"))
    _add(p, "--bleu-ori-threshold", type=float, dest="bleu_ori_threshold")

    p = task_parser("correct", "repair fluency of erroneous inputs")
    p.set_defaults(func=cmd_correct)
    _add(p, "--input"); _add(p, "--floor", type=float)
    _add(p, "--match-weight", type=float, dest="match_weight")

    p = sub.add_parser("diagnose", help="exactness audits and diagnostics")
    p.set_defaults(func=cmd_diagnose)
    _add(p, "--fixture", choices=tuple(sorted(FIXTURES)))
    _add(p, "--steps", type=int); _add(p, "--seed", type=int)
    _add(p, "--keywords"); _add(p, "--burn-in", type=int, dest="burn_in")
    _add(p, "--out-dir", dest="out_dir")
    _add(p, "--corrupt", help="comma-separated corruption fractions")
    _add(p, "--corpus"); _add(p, "--input")
    _add(p, "--seeds", type=int); _add(p, "--corrupt-steps", type=int,
                                       dest="corrupt_steps")
    _add(p, "--k", type=int); _add(p, "--beta", type=float)
    _add(p, "--lowercase", action="store_const", const=True)
    _add(p, "--op-probs", dest="op_probs")
    _add(p, "--config")

    p = sub.add_parser("eval", help="BLEU-ref/BLEU-ori/NLL/GLEU report")
    p.set_defaults(func=cmd_eval)
    _add(p, "--candidates"); _add(p, "--references", action="append")
    _add(p, "--originals"); _add(p, "--lm")
    _add(p, "--out"); _add(p, "--bleu-order", type=int, dest="bleu_order")
    _add(p, "--plot", action="store_const", const=True)
    _add(p, "--lowercase", action="store_const", const=True)
    _add(p, "--config")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (ContractError, MhtextError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
