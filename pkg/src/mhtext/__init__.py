"""Metropolis-Hastings sampling over token sequences.

Word-level replace/insert/delete proposals, constraint-shaped stationary
distributions (mandatory keywords, soft embedding match), task drivers for
keyword generation, paraphrasing, and error correction, and an exact
enumeration oracle that audits the sampler on micro-languages.
"""

from .constraints import (
    ConstraintSpec,
    EmbedMatch,
    MatchScore,
    keyword_indicator,
    load_stopwords,
    match_score_wv,
    rake_extract,
    stationary_logscore,
)
from .embeddings import EmbeddingTable, cosine, load_embeddings, max_sim_to_reference
from .metrics import BleuConfig, bleu, bleu_ori, bleu_ref, corpus_nll, gleu
from .ngram import NGramModel, SmoothingConfig, export_arpa, import_arpa, train
from .proposals import CandidateSet, Models, Proposal, apply, preselect, propose
from .sampler import (
    ChainTrace,
    FirstBelowBleuOri,
    MinNllAfter,
    SampleAtStep,
    SamplerConfig,
    TaskResult,
    acceptance,
    augment_candidates,
    run_chain,
    select_output,
    step,
    task_correct,
    task_keywords,
    task_paraphrase,
)
from .textcore import Sentence, Vocabulary, build_vocab, detokenize, tokenize

__version__ = "0.1.0"
