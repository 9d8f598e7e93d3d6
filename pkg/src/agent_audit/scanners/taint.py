"""Intra-procedural taint graphs for Python functions.

Four stages: source classification (parameters, LLM-invocation returns,
HTTP request accessors), dataflow graph construction over the function
AST, sanitizer detection, and BFS sink reachability. The graph algorithms
at the bottom are pure functions over adjacency maps so they can be
checked against an exhaustive path enumerator on synthetic graphs.
"""

from __future__ import annotations

import ast
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from ..catalog import load_data

_PY = load_data("python.json")

PARAMETER = "PARAMETER"
LLM_OUTPUT = "LLM_OUTPUT"
HTTP_INPUT = "HTTP_INPUT"

CODE_EXEC = "CODE_EXEC"
PROCESS_EXEC = "PROCESS_EXEC"
SQL_EXEC = "SQL_EXEC"

_CODE_EXEC_NAMES = set(_PY["sinks"]["CODE_EXEC"]["names"])
_CODE_EXEC_PATTERNS = _PY["sinks"]["CODE_EXEC"]["pattern_ids"]
_PROCESS_PATHS = set(_PY["sinks"]["PROCESS_EXEC"]["names"])
_SUBPROCESS_FUNCTIONS = set(_PY["sinks"]["PROCESS_EXEC"]["subprocess_functions"])
_SQL_METHODS = set(_PY["sinks"]["SQL_EXEC"]["methods"])

_SANITIZER_PATHS = set(
    _PY["sanitizers"]["shell_quote"] + _PY["sanitizers"]["escapes"]
)
_SANITIZER_CASTS = set(_PY["sanitizers"]["casts"])

_LLM_STRONG = set(_PY["llm_output_calls"]["methods_strong"])
_LLM_HINTED = set(_PY["llm_output_calls"]["methods_with_receiver_hint"])
_LLM_RECEIVER_HINTS = tuple(_PY["llm_output_calls"]["receiver_hints"])

_HTTP_RECEIVERS = set(_PY["http_input_sources"]["receivers"])
_HTTP_CALL_ATTRS = set(_PY["http_input_sources"]["call_attrs"])
_HTTP_PLAIN_ATTRS = set(_PY["http_input_sources"]["plain_attrs"])

_STRINGY_ANNOTATIONS = {"str", "Text", "Optional[str]", "str | None", "Any", "AnyStr"}


@dataclass
class TaintNode:
    node_id: str
    kind: str  # param | var | call | attr
    name: str
    line: int
    col: int
    source_kind: Optional[str] = None
    sink_kind: Optional[str] = None
    pattern_id: Optional[str] = None
    is_sanitizer: bool = False


@dataclass
class TaintFlow:
    source_id: str
    source_kind: str
    source_name: str
    sink_id: str
    sink_kind: str
    sink_name: str
    sink_line: int
    sink_col: int
    pattern_id: str
    sanitized: bool
    path: list[str]


@dataclass
class TaintGraph:
    """Dataflow graph for one function body."""

    function_name: str
    nodes: dict[str, TaintNode] = field(default_factory=dict)
    edges: dict[str, set[str]] = field(default_factory=dict)
    # (guarded variable name, line of the isinstance/assert guard)
    guards: list[tuple[str, int]] = field(default_factory=list)

    def add_node(self, node: TaintNode) -> TaintNode:
        existing = self.nodes.get(node.node_id)
        if existing is not None:
            return existing
        self.nodes[node.node_id] = node
        self.edges.setdefault(node.node_id, set())
        return node

    def add_edge(self, src: str, dst: str) -> None:
        if src == dst:
            return
        self.edges.setdefault(src, set()).add(dst)
        self.edges.setdefault(dst, set())

    def sources(self) -> list[TaintNode]:
        return [n for n in self.nodes.values() if n.source_kind is not None]

    def sinks(self) -> list[TaintNode]:
        return [n for n in self.nodes.values() if n.sink_kind is not None]

    def sanitizer_ids(self) -> set[str]:
        return {n.node_id for n in self.nodes.values() if n.is_sanitizer}

    def tainted_ids(self) -> set[str]:
        """Every node reachable from any source, sources included."""
        tainted: set[str] = set()
        for source in self.sources():
            tainted |= bfs_reachable(self.edges, source.node_id)
        return tainted

    def flows(self) -> list[TaintFlow]:
        """All source->sink flows with their sanitized verdicts."""
        results: list[TaintFlow] = []
        sanitizers = self.sanitizer_ids()
        for source in self.sources():
            for sink in self.sinks():
                reaches, sanitized = analyze_flow(
                    self.edges, sanitizers, source.node_id, sink.node_id
                )
                if not reaches:
                    continue
                if not sanitized and self._guard_covers(source, sink):
                    sanitized = True
                path = bfs_path(self.edges, source.node_id, sink.node_id) or []
                results.append(
                    TaintFlow(
                        source_id=source.node_id,
                        source_kind=source.source_kind or "",
                        source_name=source.name,
                        sink_id=sink.node_id,
                        sink_kind=sink.sink_kind or "",
                        sink_name=sink.name,
                        sink_line=sink.line,
                        sink_col=sink.col,
                        pattern_id=sink.pattern_id or "",
                        sanitized=sanitized,
                        path=path,
                    )
                )
        results.sort(key=lambda f: (f.sink_line, f.sink_col, f.source_id))
        return results

    def _guard_covers(self, source: TaintNode, sink: TaintNode) -> bool:
        # An isinstance guard on the source variable above the sink line is
        # a flow-sensitive sanitizer the name-based graph cannot carry.
        if source.kind != "param":
            return False
        return any(
            name == source.name and line <= sink.line for name, line in self.guards
        )


# ---------------------------------------------------------------------------
# Pure graph algorithms. Adjacency maps are node_id -> successor ids.
# ---------------------------------------------------------------------------

def bfs_reachable(adjacency: Mapping[str, Iterable[str]], start: str) -> set[str]:
    """All nodes reachable from start, start included."""
    seen = {start}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        for succ in adjacency.get(current, ()):
            if succ not in seen:
                seen.add(succ)
                queue.append(succ)
    return seen


def bfs_path(
    adjacency: Mapping[str, Iterable[str]], start: str, goal: str
) -> Optional[list[str]]:
    """Shortest path from start to goal, or None. Deterministic: neighbors
    are visited in sorted order."""
    if start == goal:
        return [start]
    parents: dict[str, str] = {}
    seen = {start}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        for succ in sorted(adjacency.get(current, ())):
            if succ in seen:
                continue
            parents[succ] = current
            if succ == goal:
                path = [goal]
                while path[-1] != start:
                    path.append(parents[path[-1]])
                path.reverse()
                return path
            seen.add(succ)
            queue.append(succ)
    return None


def pruned(
    adjacency: Mapping[str, Iterable[str]], removed: set[str]
) -> dict[str, set[str]]:
    """Adjacency with a node set deleted (edges to/from it included)."""
    return {
        node: {succ for succ in succs if succ not in removed}
        for node, succs in adjacency.items()
        if node not in removed
    }


def analyze_flow(
    adjacency: Mapping[str, Iterable[str]],
    sanitizers: set[str],
    source: str,
    sink: str,
) -> tuple[bool, bool]:
    """(reaches, sanitized) for one source/sink pair.

    sanitized means every path from source to sink passes through at least
    one sanitizer node, computed as unreachability once sanitizer nodes are
    deleted. A source or sink that is itself a sanitizer therefore counts
    as sanitizing the whole flow.
    """
    reaches = sink in bfs_reachable(adjacency, source)
    if not reaches:
        return False, False
    clean = pruned(adjacency, sanitizers)
    if source not in clean or sink not in clean:
        return True, True
    unsanitized_path = sink in bfs_reachable(clean, source)
    return True, not unsanitized_path


# ---------------------------------------------------------------------------
# Graph construction from a function AST.
# ---------------------------------------------------------------------------

def stringy_annotation(arg: ast.arg) -> bool:
    """True when a parameter could plausibly carry a string."""
    if arg.annotation is None:
        return True
    try:
        text = ast.unparse(arg.annotation)
    except Exception:  # pragma: no cover - unparse is total on parsed trees
        return True
    return text in _STRINGY_ANNOTATIONS


def dotted_path(node: ast.expr, imports: Mapping[str, str]) -> Optional[str]:
    """Resolve a call target to a dotted path, applying import aliases."""
    parts: list[str] = []
    current = node
    while isinstance(current, ast.Attribute):
        parts.append(current.attr)
        current = current.value
    if isinstance(current, ast.Name):
        parts.append(imports.get(current.id, current.id))
        return ".".join(reversed(parts))
    return None


def receiver_name(node: ast.expr) -> Optional[str]:
    """Leftmost name of an attribute chain, e.g. chain for chain.llm.invoke."""
    current = node
    while isinstance(current, ast.Attribute):
        current = current.value
    if isinstance(current, ast.Name):
        return current.id
    return None


class _GraphBuilder(ast.NodeVisitor):
    def __init__(self, graph: TaintGraph, imports: Mapping[str, str]):
        self.graph = graph
        self.imports = imports

    # -- expression walking ------------------------------------------------

    def atoms(self, expr: ast.expr) -> set[str]:
        """Node ids whose values feed this expression."""
        if isinstance(expr, ast.Name):
            node = self.graph.add_node(
                TaintNode(
                    node_id=f"var:{expr.id}",
                    kind="var",
                    name=expr.id,
                    line=expr.lineno,
                    col=expr.col_offset,
                )
            )
            return {node.node_id}
        if isinstance(expr, ast.Call):
            return {self.call_node(expr)}
        if isinstance(expr, ast.Attribute):
            source_kind = self._http_attr_source(expr)
            if source_kind:
                node = self.graph.add_node(
                    TaintNode(
                        node_id=f"attr:{expr.lineno}:{expr.col_offset}",
                        kind="attr",
                        name=ast.unparse(expr),
                        line=expr.lineno,
                        col=expr.col_offset,
                        source_kind=source_kind,
                    )
                )
                return {node.node_id}
            return self.atoms(expr.value)
        if isinstance(expr, ast.JoinedStr):
            feeds: set[str] = set()
            for value in expr.values:
                if isinstance(value, ast.FormattedValue):
                    feeds |= self.atoms(value.value)
            return feeds
        if isinstance(expr, (ast.BinOp,)):
            return self.atoms(expr.left) | self.atoms(expr.right)
        if isinstance(expr, ast.BoolOp):
            out: set[str] = set()
            for value in expr.values:
                out |= self.atoms(value)
            return out
        if isinstance(expr, (ast.Tuple, ast.List, ast.Set)):
            out = set()
            for element in expr.elts:
                out |= self.atoms(element)
            return out
        if isinstance(expr, ast.Dict):
            out = set()
            for value in expr.values:
                if value is not None:
                    out |= self.atoms(value)
            return out
        if isinstance(expr, ast.Subscript):
            return self.atoms(expr.value)
        if isinstance(expr, ast.IfExp):
            return self.atoms(expr.body) | self.atoms(expr.orelse)
        if isinstance(expr, (ast.UnaryOp,)):
            return self.atoms(expr.operand)
        if isinstance(expr, ast.Compare):
            out = self.atoms(expr.left)
            for comp in expr.comparators:
                out |= self.atoms(comp)
            return out
        if isinstance(expr, ast.FormattedValue):
            return self.atoms(expr.value)
        if isinstance(expr, (ast.Await, ast.Starred)):
            return self.atoms(expr.value)
        return set()

    def _http_attr_source(self, expr: ast.Attribute) -> Optional[str]:
        base = receiver_name(expr)
        if base in _HTTP_RECEIVERS and expr.attr in _HTTP_PLAIN_ATTRS:
            return HTTP_INPUT
        return None

    # -- calls -------------------------------------------------------------

    def call_node(self, call: ast.Call) -> str:
        path = dotted_path(call.func, self.imports)
        attr = call.func.attr if isinstance(call.func, ast.Attribute) else None
        base = receiver_name(call.func) if attr else None
        display = path or (ast.unparse(call.func) if call.func else "<call>")
        node_id = f"call:{call.lineno}:{call.col_offset}:{display}"

        sink_kind, pattern_id, sink_arg_limit = self._classify_sink(path, attr)
        source_kind = self._classify_call_source(path, attr, base)
        is_sanitizer = bool(
            path and (path in _SANITIZER_PATHS or path in _SANITIZER_CASTS)
        )

        node = self.graph.add_node(
            TaintNode(
                node_id=node_id,
                kind="call",
                name=display,
                line=call.lineno,
                col=call.col_offset,
                source_kind=source_kind,
                sink_kind=sink_kind,
                pattern_id=pattern_id,
                is_sanitizer=is_sanitizer,
            )
        )

        positional = call.args if sink_arg_limit is None else call.args[:sink_arg_limit]
        for arg in positional:
            for atom in self.atoms(arg):
                self.graph.add_edge(atom, node.node_id)
        if sink_kind != SQL_EXEC:
            for keyword in call.keywords:
                if keyword.value is not None:
                    for atom in self.atoms(keyword.value):
                        self.graph.add_edge(atom, node.node_id)
        # Method calls propagate taint from their receiver: x.upper(), etc.
        if attr and isinstance(call.func, ast.Attribute) and sink_kind is None:
            for atom in self.atoms(call.func.value):
                self.graph.add_edge(atom, node.node_id)
        return node.node_id

    def _classify_sink(
        self, path: Optional[str], attr: Optional[str]
    ) -> tuple[Optional[str], Optional[str], Optional[int]]:
        """(sink_kind, pattern_id, positional-arg limit) for a call target.

        SQL execute calls only taint through their first positional
        argument: later arguments are bound parameters, which is exactly
        the sanitized channel.
        """
        if path in _CODE_EXEC_NAMES:
            return CODE_EXEC, _CODE_EXEC_PATTERNS[path], None
        if path in _PROCESS_PATHS:
            return PROCESS_EXEC, _PY["sinks"]["PROCESS_EXEC"]["pattern_id"], None
        if path and path.startswith("subprocess."):
            tail = path.split(".", 1)[1]
            if tail in _SUBPROCESS_FUNCTIONS:
                return PROCESS_EXEC, _PY["sinks"]["PROCESS_EXEC"]["pattern_id"], None
        if attr in _SQL_METHODS:
            return SQL_EXEC, _PY["sinks"]["SQL_EXEC"]["pattern_id"], 1
        return None, None, None

    def _classify_call_source(
        self, path: Optional[str], attr: Optional[str], base: Optional[str]
    ) -> Optional[str]:
        if base in _HTTP_RECEIVERS and attr in _HTTP_CALL_ATTRS:
            return HTTP_INPUT
        if attr in _LLM_STRONG:
            return LLM_OUTPUT
        if attr in _LLM_HINTED and path:
            haystack = path.lower()
            if any(hint in haystack for hint in _LLM_RECEIVER_HINTS):
                return LLM_OUTPUT
        return None

    # -- statements ----------------------------------------------------------

    def visit_Assign(self, node: ast.Assign) -> None:
        feeds = self.atoms(node.value)
        for target in node.targets:
            for name in self._target_names(target):
                var = self.graph.add_node(
                    TaintNode(
                        node_id=f"var:{name}",
                        kind="var",
                        name=name,
                        line=node.lineno,
                        col=node.col_offset,
                    )
                )
                for atom in feeds:
                    self.graph.add_edge(atom, var.node_id)
        self.generic_visit(node)

    def visit_AnnAssign(self, node: ast.AnnAssign) -> None:
        if node.value is not None and isinstance(node.target, ast.Name):
            feeds = self.atoms(node.value)
            var = self.graph.add_node(
                TaintNode(
                    node_id=f"var:{node.target.id}",
                    kind="var",
                    name=node.target.id,
                    line=node.lineno,
                    col=node.col_offset,
                )
            )
            for atom in feeds:
                self.graph.add_edge(atom, var.node_id)
        self.generic_visit(node)

    def visit_AugAssign(self, node: ast.AugAssign) -> None:
        if isinstance(node.target, ast.Name):
            feeds = self.atoms(node.value)
            var = self.graph.add_node(
                TaintNode(
                    node_id=f"var:{node.target.id}",
                    kind="var",
                    name=node.target.id,
                    line=node.lineno,
                    col=node.col_offset,
                )
            )
            for atom in feeds:
                self.graph.add_edge(atom, var.node_id)
        self.generic_visit(node)

    def visit_Expr(self, node: ast.Expr) -> None:
        if isinstance(node.value, ast.Call):
            self.call_node(node.value)
        self.generic_visit(node)

    def visit_Return(self, node: ast.Return) -> None:
        if node.value is not None:
            ret = self.graph.add_node(
                TaintNode(
                    node_id="var:__return__",
                    kind="var",
                    name="__return__",
                    line=node.lineno,
                    col=node.col_offset,
                )
            )
            for atom in self.atoms(node.value):
                self.graph.add_edge(atom, ret.node_id)
        self.generic_visit(node)

    def visit_If(self, node: ast.If) -> None:
        self._collect_guards(node.test, node.lineno)
        self.generic_visit(node)

    def visit_Assert(self, node: ast.Assert) -> None:
        self._collect_guards(node.test, node.lineno)
        self.generic_visit(node)

    def _collect_guards(self, test: ast.expr, line: int) -> None:
        for call in ast.walk(test):
            if (
                isinstance(call, ast.Call)
                and isinstance(call.func, ast.Name)
                and call.func.id in _PY["sanitizers"]["guard_calls"]
                and call.args
                and isinstance(call.args[0], ast.Name)
            ):
                self.graph.guards.append((call.args[0].id, line))

    def _target_names(self, target: ast.expr) -> list[str]:
        if isinstance(target, ast.Name):
            return [target.id]
        if isinstance(target, (ast.Tuple, ast.List)):
            names: list[str] = []
            for element in target.elts:
                names.extend(self._target_names(element))
            return names
        return []

    # Nested functions get their own graphs from the scanner.
    def visit_FunctionDef(self, node: ast.FunctionDef) -> None:
        return

    def visit_AsyncFunctionDef(self, node: ast.AsyncFunctionDef) -> None:
        return


def module_imports(tree: ast.Module) -> dict[str, str]:
    """Map local names to dotted module paths for alias resolution."""
    table: dict[str, str] = {}
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                table[alias.asname or alias.name.split(".")[0]] = alias.name
        elif isinstance(node, ast.ImportFrom) and node.module:
            for alias in node.names:
                table[alias.asname or alias.name] = f"{node.module}.{alias.name}"
    return table


def build_taint_graph(
    func: ast.FunctionDef | ast.AsyncFunctionDef,
    imports: Mapping[str, str],
) -> TaintGraph:
    """Construct the dataflow graph for one function."""
    graph = TaintGraph(function_name=func.name)
    args = list(func.args.posonlyargs) + list(func.args.args) + list(func.args.kwonlyargs)
    for arg in args:
        if arg.arg in ("self", "cls"):
            continue
        param = graph.add_node(
            TaintNode(
                node_id=f"param:{arg.arg}",
                kind="param",
                name=arg.arg,
                line=arg.lineno,
                col=arg.col_offset,
                source_kind=PARAMETER,
            )
        )
        var = graph.add_node(
            TaintNode(
                node_id=f"var:{arg.arg}",
                kind="var",
                name=arg.arg,
                line=arg.lineno,
                col=arg.col_offset,
            )
        )
        graph.add_edge(param.node_id, var.node_id)
    builder = _GraphBuilder(graph, imports)
    for statement in func.body:
        builder.visit(statement)
    return graph


def string_params(func: ast.FunctionDef | ast.AsyncFunctionDef) -> set[str]:
    """Parameters that could carry strings (str-annotated or unannotated)."""
    args = list(func.args.posonlyargs) + list(func.args.args) + list(func.args.kwonlyargs)
    return {
        arg.arg
        for arg in args
        if arg.arg not in ("self", "cls") and stringy_annotation(arg)
    }
