"""Exception types shared across the package.

The CLI maps these onto exit codes: UsageError -> 1, DataError (and
subclasses) -> 2, ContractError -> 3.
"""


class MhtextError(Exception):
    """Base class for all package errors."""


class UsageError(MhtextError):
    """Bad command-line invocation or inconsistent configuration."""


class DataError(MhtextError):
    """Problem with user-supplied data (corpora, model files, inputs)."""


class CorpusError(DataError):
    """Empty or unusable corpus / text input."""


class FormatError(DataError):
    """Malformed serialized artifact (ARPA file, embedding file, vocab file)."""


class OffSupportError(DataError):
    """Initial chain state has zero probability under the target distribution."""


class ContractError(MhtextError):
    """Internal invariant violation; indicates a bug, not bad input."""
