"""Live MCP server inspection: read-only handshake plus tool analysis."""

from .analysis import (
    NamedTool,
    PoisonIndicator,
    PoisonKind,
    analyze_description,
    detect_shadowing,
    poison_findings,
)
from .client import (
    DEFAULT_TIMEOUT,
    InspectionResult,
    InspectorError,
    InspectTimeout,
    ProtocolError,
    SpawnError,
    StdioClient,
    ToolInfo,
    inspect_server,
)

__all__ = [
    "DEFAULT_TIMEOUT",
    "InspectionResult",
    "InspectorError",
    "InspectTimeout",
    "NamedTool",
    "PoisonIndicator",
    "PoisonKind",
    "ProtocolError",
    "SpawnError",
    "StdioClient",
    "ToolInfo",
    "analyze_description",
    "detect_shadowing",
    "inspect_server",
    "poison_findings",
]
