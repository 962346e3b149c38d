"""Word-vector tables and cosine similarity for the soft matching scores."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError

DEFAULT_OOV_SIMILARITY = 0.3


class EmbeddingTable:
    """word -> unit-normalized vector of a fixed dimension.

    Vectors are normalized at load so cosine similarity is a plain dot
    product. Immutable after construction.
    """

    __slots__ = ("dim", "_vectors", "oov_similarity")

    def __init__(self, vectors: dict[str, np.ndarray],
                 oov_similarity: float = DEFAULT_OOV_SIMILARITY):
        if not vectors:
            raise FormatError("embedding table is empty")
        dims = {v.shape[0] for v in vectors.values()}
        if len(dims) != 1:
            raise FormatError(f"inconsistent embedding dimensions: {sorted(dims)}")
        self.dim = dims.pop()
        normalized = {}
        for word, vec in vectors.items():
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise FormatError(f"zero vector for word {word!r}")
            normalized[word] = vec / norm
        self._vectors = normalized
        self.oov_similarity = oov_similarity

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, word: str) -> bool:
        return word in self._vectors

    def unit(self, word: str) -> np.ndarray | None:
        return self._vectors.get(word)


def load_embeddings(source: Iterable[str],
                    oov_similarity: float = DEFAULT_OOV_SIMILARITY) -> EmbeddingTable:
    """Parse a GloVe-style text stream: one `word v1 .. vd` per line.

    Duplicate words keep their first occurrence. Ragged rows, non-numeric
    fields, and zero vectors are format errors.
    """
    vectors: dict[str, np.ndarray] = {}
    dim = None
    for lineno, line in enumerate(source, start=1):
        parts = line.split()
        if not parts:
            continue
        word, values = parts[0], parts[1:]
        if not values:
            raise FormatError(f"line {lineno}: no vector components")
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise FormatError(
                f"line {lineno}: expected {dim} components, got {len(values)}"
            )
        if word in vectors:
            continue
        try:
            vec = np.asarray([float(v) for v in values])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: non-numeric component") from exc
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"line {lineno}: non-finite component")
        if float(np.linalg.norm(vec)) == 0.0:
            raise FormatError(f"line {lineno}: zero vector for {word!r}")
        vectors[word] = vec
    return EmbeddingTable(vectors, oov_similarity=oov_similarity)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|), in [-1, 1]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.dot(u, v) / (nu * nv))


def max_sim_to_reference(word: str, reference: Sequence[str],
                         table: EmbeddingTable) -> float:
    """Highest cosine between `word` and any reference word.

    Reference words missing from the table are skipped; if the query word
    (or every reference word) is unmodeled, the table's configured OOV
    similarity is returned instead of a cosine.
    """
    if not reference:
        raise ValueError("reference must be non-empty")
    query = table.unit(word)
    if query is None:
        return table.oov_similarity
    best = None
    for ref_word in reference:
        ref = table.unit(ref_word)
        if ref is None:
            continue
        sim = float(np.dot(query, ref))
        if best is None or sim > best:
            best = sim
    return table.oov_similarity if best is None else best


def one_hot_table(words: Sequence[str]) -> EmbeddingTable:
    """Basis-vector embeddings: cosine 1 for identical words, 0 otherwise.

    A deterministic stand-in for pretrained vectors on micro vocabularies;
    refuses to build anything large.
    """
    unique = list(dict.fromkeys(words))
    if len(unique) > 4096:
        raise ValueError("one-hot table is only meant for toy vocabularies")
    dim = len(unique)
    vectors = {}
    for i, w in enumerate(unique):
        vec = np.zeros(dim)
        vec[i] = 1.0
        vectors[w] = vec
    return EmbeddingTable(vectors)
