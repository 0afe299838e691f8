"""Exception hierarchy shared by all pipeline stages.

InputError maps to CLI exit code 1, ProtocolError to exit code 2.
"""


class ClaimextError(Exception):
    pass


class InputError(ClaimextError):
    """Bad user input: files, records, labels, configuration."""


class CorpusFormatError(InputError):
    """A corpus/annotation file did not parse or failed validation."""


class UnknownLabelError(InputError):
    """An entity class name outside the declared closed label sets."""


class ProtocolError(ClaimextError):
    """An external scorer/verifier violated the wire protocol."""


class UnreachableError(ProtocolError):
    """An external scorer/verifier endpoint could not be reached."""
