"""Static security auditing for LLM agent codebases."""

from .model import (
    Finding,
    Modulation,
    Rule,
    ScanReport,
    SourceSpan,
    Tier,
    tier_of,
)

__version__ = "0.1.0"

__all__ = [
    "Finding",
    "Modulation",
    "Rule",
    "ScanReport",
    "SourceSpan",
    "Tier",
    "tier_of",
    "__version__",
]
