"""Tokens, vocabularies, and sentences.

The substrate for everything else: a dense-id vocabulary with four special
tokens and an immutable token-id sequence type. Corpora are plain UTF-8
text, one sentence per line, tokens separated by whitespace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from .errors import CorpusError, FormatError

BOS_ID = 0
EOS_ID = 1
UNK_ID = 2
PHD_ID = 3

BOS_TOKEN = "<bos>"
EOS_TOKEN = "<eos>"
UNK_TOKEN = "<unk>"
PHD_TOKEN = "<phd>"

SPECIAL_TOKENS = (BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, PHD_TOKEN)

# BOS/EOS are implicit sentence boundaries and PHD only exists transiently
# while a proposal is being built, so none of them may appear in a Sentence.
_FORBIDDEN_IN_SENTENCE = frozenset((BOS_ID, EOS_ID, PHD_ID))


class Vocabulary:
    """Dense string<->id mapping with fixed special tokens at ids 0..3.

    Ids are dense in [0, V-1]; the four specials always occupy ids 0..3 in
    the order BOS, EOS, UNK, PHD. Instances are immutable after
    construction and safe to share across threads.
    """

    __slots__ = ("tokens", "id_of", "lowercase", "_content_array")

    def __init__(self, content_tokens: Sequence[str], lowercase: bool = False):
        tokens = list(SPECIAL_TOKENS) + list(content_tokens)
        id_of = {}
        for i, tok in enumerate(tokens):
            if tok in id_of:
                raise FormatError(f"duplicate vocabulary token {tok!r}")
            id_of[tok] = i
        self.tokens = tokens
        self.id_of = id_of
        self.lowercase = lowercase
        self._content_array = None

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.id_of

    @property
    def content_ids(self) -> range:
        return range(len(SPECIAL_TOKENS), len(self.tokens))

    def content_id_array(self):
        """Content ids as a shared int64 numpy array; treat as read-only."""
        if self._content_array is None:
            import numpy as np

            self._content_array = np.arange(
                len(SPECIAL_TOKENS), len(self.tokens), dtype=np.int64
            )
        return self._content_array

    def lookup(self, token: str) -> int:
        """Map a surface token to its id, falling back to UNK."""
        if self.lowercase:
            token = token.lower()
        return self.id_of.get(token, UNK_ID)

    def require(self, token: str) -> int:
        """Map a surface token to its id; unknown tokens are an error."""
        if self.lowercase:
            token = token.lower()
        ident = self.id_of.get(token)
        if ident is None or ident < len(SPECIAL_TOKENS):
            raise CorpusError(f"token {token!r} is not in the vocabulary")
        return ident

    def surface(self, ident: int) -> str:
        return self.tokens[ident]

    def save(self, sink: TextIO) -> None:
        """One token per line, line number = id, specials first."""
        for tok in self.tokens:
            sink.write(tok + "\n")

    @classmethod
    def load(cls, source: TextIO, lowercase: bool = False) -> "Vocabulary":
        tokens = [line.rstrip("\n") for line in source]
        while tokens and tokens[-1] == "":
            tokens.pop()
        if tuple(tokens[:4]) != SPECIAL_TOKENS:
            raise FormatError(
                "vocabulary file must start with the special tokens "
                + " ".join(SPECIAL_TOKENS)
            )
        return cls(tokens[4:], lowercase=lowercase)


@dataclass(frozen=True, slots=True)
class Sentence:
    """Immutable sequence of content-token ids; the Markov-chain state.

    Never empty and never contains BOS/EOS/PHD. UNK is allowed: it can
    enter through out-of-vocabulary input words, though it is never
    proposed as a new word.
    """

    ids: tuple[int, ...]

    def __post_init__(self):
        if len(self.ids) < 1:
            raise ValueError("a Sentence holds at least one token")
        for ident in self.ids:
            if ident in _FORBIDDEN_IN_SENTENCE:
                raise ValueError(f"special token id {ident} not allowed in a Sentence")
            if ident < 0:
                raise ValueError("negative token id")

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def __getitem__(self, index):
        return self.ids[index]


def build_vocab(
    corpus: Iterable[str], max_size: int, lowercase: bool = False
) -> Vocabulary:
    """Build a vocabulary of the max_size most frequent corpus tokens.

    Frequency ties break by first occurrence in the corpus, so identical
    input always produces an identical vocabulary.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    n_tokens = 0
    for line in corpus:
        for tok in line.split():
            if lowercase:
                tok = tok.lower()
            n_tokens += 1
            counts[tok] = counts.get(tok, 0) + 1
            if tok not in first_seen:
                first_seen[tok] = n_tokens
    if n_tokens == 0:
        raise CorpusError("corpus contains no tokens")
    ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    kept = [t for t in ranked[:max_size] if t not in SPECIAL_TOKENS]
    return Vocabulary(kept, lowercase=lowercase)


def tokenize(text: str, vocab: Vocabulary) -> Sentence:
    """Whitespace-split text into a Sentence; unknown words become UNK."""
    parts = text.split()
    if not parts:
        raise CorpusError("cannot tokenize empty or whitespace-only text")
    return Sentence(tuple(vocab.lookup(tok) for tok in parts))


def detokenize(sentence: Sentence, vocab: Vocabulary) -> str:
    """Space-join surface forms; inverse of tokenize for in-vocab text."""
    return " ".join(vocab.surface(i) for i in sentence.ids)
