"""Entity-based claim extraction and verdict evaluation for medical posts."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Document,
    EntityClass,
    EntitySpan,
    RelationTriple,
    VerdictLabel,
    load_documents,
    map_entity_label,
    save_documents,
    validate_document,
)
from .claimgen import ClaimCandidate, condense_seq, condense_triple  # noqa: F401
from .errors import ClaimextError, InputError, ProtocolError  # noqa: F401
from .linker import build_index, link, linking_coverage, load_kb, normalize_mention  # noqa: F401
from .ner import Gazetteer, evaluate_ner, recognize  # noqa: F401
from .select import ScorerHandle, select_main_claim, select_random  # noqa: F401
from .verdict import VerdictRecord, VerifierHandle, check, evaluate_verdicts, toy_verifier  # noqa: F401
