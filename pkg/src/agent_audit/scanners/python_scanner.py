"""AST scanner for Python agent code.

Three passes over each module: tool-boundary discovery, per-function
taint flows into dangerous sinks, and a set of structural checks for
prompt construction, network use, and agent-framework configuration.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from typing import Any, Iterable, Optional

from .. import catalog
from ..model import Finding, Modulation, SourceSpan
from . import taint

_PY = catalog.load_data("python.json")
_PHRASES = catalog.load_data("phrases.json")

_PROMPT_NAME_RE = re.compile(_PY["prompt_name_regex"])
_PROMPT_CONTENT_RE = re.compile(_PY["prompt_content_regex"])
_SHELL_NAME_RE = re.compile(_PY["shell_tool_name_regex"])
_CRED_PATH_RE = re.compile(_PY["credential_store_path_regex"])
_TRUST_CLAIM_RES = [re.compile(p, re.IGNORECASE) for p in _PHRASES["trust_claims"]]

_FRAMEWORK_PROMPT_CALLS = set(_PY["framework_prompt_callables"])
_TEMPLATE_ENGINES = set(_PY["template_engines"])
_FETCH_CALLS = set(_PY["fetch_callables"])
_DESTRUCTIVE_CALLS = set(_PY["destructive_file_callables"])
_DESERIALIZATION_CALLS = set(_PY["deserialization_callables"])
_DYNAMIC_IMPORT_CALLS = set(_PY["dynamic_import_callables"])
_MEMORY_WRITE_METHODS = set(_PY["memory_write_methods"])
_RETRIEVAL_METHODS = set(_PY["retrieval_methods"])
_MEMORY_NAME_RE = re.compile(r"(?i)(memory|vector|embedding|index|cache|store|checkpoint)")

_AGENT_CTORS = set(_PY["agent_constructors_with_iteration_bounds"]["names"])
_BOUND_KWARGS = set(_PY["agent_constructors_with_iteration_bounds"]["bound_kwargs"])
_APPROVAL_KWARGS: dict[str, bool] = _PY["approval_disable_kwargs"]
_WILDCARD_KWARGS = set(_PY["wildcard_tool_kwargs"])
_LLM_STRONG = set(_PY["llm_output_calls"]["methods_strong"])

SCANNER_NAME = "python"

FuncDef = ast.FunctionDef | ast.AsyncFunctionDef


@dataclass
class ToolBoundary:
    """A function the model can invoke directly."""

    name: str
    line: int
    end_line: int
    boundary_id: str
    func: FuncDef


def _decorator_dotted(dec: ast.expr) -> Optional[str]:
    parts: list[str] = []
    current = dec
    while isinstance(current, ast.Attribute):
        parts.append(current.attr)
        current = current.value
    if isinstance(current, ast.Name):
        parts.append(current.id)
        return ".".join(reversed(parts))
    return None


def _match_decorator(
    dec: ast.expr,
    extra_names: Iterable[str],
    aliases: Optional[dict[str, str]] = None,
) -> Optional[str]:
    """Boundary pattern id for one decorator expression, or None."""
    target = dec.func if isinstance(dec, ast.Call) else dec
    is_call = isinstance(dec, ast.Call)

    if isinstance(target, ast.Name):
        for spec in _PY["tool_boundary_patterns"]:
            if spec["kind"] == "decorator-name" and target.id in spec["names"]:
                if is_call and target.id == "tool":
                    return "tool-decorator-with-args"
                return spec["id"]
        if target.id in extra_names:
            return "custom-slot"
        return None

    if isinstance(target, ast.Attribute):
        dotted = _decorator_dotted(target)
        root = dotted.split(".")[0] if dotted else None
        if aliases and root in aliases:
            # @lct.tool with `import langchain.tools as lct` is still langchain's decorator
            root = aliases[root].split(".")[0]
        for spec in _PY["tool_boundary_patterns"]:
            if spec["kind"] == "decorator-dotted":
                if root in spec["roots"] and target.attr == spec["attr"]:
                    return spec["id"]
        if target.attr == "tool" and is_call:
            return "server-tool-registration"
        if dotted and dotted in extra_names:
            return "custom-slot"
    return None


def _class_bases(node: ast.ClassDef) -> set[str]:
    names = set()
    for base in node.bases:
        if isinstance(base, ast.Name):
            names.add(base.id)
        elif isinstance(base, ast.Attribute):
            names.add(base.attr)
    return names


def find_tool_boundaries(
    tree: ast.Module, extra_decorators: Iterable[str] = ()
) -> list[ToolBoundary]:
    """All model-invocable functions in a module, in source order."""
    boundaries: list[ToolBoundary] = []
    extra = set(extra_decorators)

    aliases: dict[str, str] = {}
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for name in node.names:
                if name.asname:
                    aliases[name.asname] = name.name
        elif isinstance(node, ast.ImportFrom) and node.module and not node.level:
            for name in node.names:
                aliases[name.asname or name.name] = f"{node.module}.{name.name}"

    def add(func: FuncDef, boundary_id: str) -> None:
        boundaries.append(
            ToolBoundary(
                name=func.name,
                line=func.lineno,
                end_line=getattr(func, "end_lineno", func.lineno),
                boundary_id=boundary_id,
                func=func,
            )
        )

    constructed_funcs: dict[str, str] = {}
    for node in ast.walk(tree):
        if isinstance(node, ast.Call):
            dotted = _decorator_dotted(node.func) if not isinstance(node.func, ast.Name) else node.func.id
            for spec in _PY["tool_boundary_patterns"]:
                if spec["kind"] != "constructor":
                    continue
                if dotted in spec["callables"]:
                    ref: Optional[str] = None
                    for kw in node.keywords:
                        if kw.arg == "func" and isinstance(kw.value, ast.Name):
                            ref = kw.value.id
                    if ref is None and node.args and isinstance(node.args[0], ast.Name):
                        ref = node.args[0].id
                    if ref:
                        constructed_funcs[ref] = spec["id"]

    subclass_methods: dict[int, str] = {}
    for node in ast.walk(tree):
        if isinstance(node, ast.ClassDef):
            bases = _class_bases(node)
            for spec in _PY["tool_boundary_patterns"]:
                if spec["kind"] != "subclass-run":
                    continue
                if bases & set(spec["bases"]):
                    for item in node.body:
                        if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)):
                            if item.name in spec["methods"]:
                                subclass_methods[id(item)] = spec["id"]

    for node in ast.walk(tree):
        if not isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            continue
        boundary_id: Optional[str] = None
        for dec in node.decorator_list:
            boundary_id = _match_decorator(dec, extra, aliases)
            if boundary_id:
                break
        if boundary_id is None and id(node) in subclass_methods:
            boundary_id = subclass_methods[id(node)]
        if boundary_id is None and node.name in constructed_funcs:
            boundary_id = constructed_funcs[node.name]
        if boundary_id:
            add(node, boundary_id)

    boundaries.sort(key=lambda b: b.line)
    return boundaries


# ---------------------------------------------------------------------------
# Scanner
# ---------------------------------------------------------------------------

class _ModuleScan:
    def __init__(self, path: str, text: str, config: Any = None):
        self.path = path
        self.text = text
        self.lines = text.splitlines()
        self.config = config
        self.findings: list[Finding] = []

    # -- helpers -------------------------------------------------------------

    def line_text(self, line: int) -> str:
        if 1 <= line <= len(self.lines):
            return self.lines[line - 1].strip()[:160]
        return ""

    def emit(
        self,
        pattern_id: str,
        line: int,
        message: str,
        end_line: Optional[int] = None,
        col: Optional[int] = None,
        base: Optional[float] = None,
        base_source: str = "rule-default",
        modulations: Optional[list[Modulation]] = None,
        notes: Optional[list[str]] = None,
    ) -> Finding:
        rule = catalog.rule_for_pattern(pattern_id)
        finding = Finding(
            rule_id=rule.rule_id,
            message=message,
            span=SourceSpan(
                file_path=self.path,
                line_start=line,
                line_end=end_line or line,
                col_start=col,
            ),
            scanner=SCANNER_NAME,
            pattern_id=pattern_id,
            base_confidence=base if base is not None else rule.base_confidence,
            base_source=base_source,
            modulations=list(modulations or []),
            snippet=self.line_text(line),
            notes=list(notes or []),
        )
        self.findings.append(finding)
        return finding

    # -- top level -------------------------------------------------------------

    def run(self) -> list[Finding]:
        tree = ast.parse(self.text)
        extra_decorators = getattr(self.config, "tool_decorators", None) or []
        boundaries = find_tool_boundaries(tree, extra_decorators)
        boundary_funcs = {id(b.func): b for b in boundaries}
        imports = taint.module_imports(tree)

        for boundary in boundaries:
            self.check_boundary_shape(boundary)

        for node in ast.walk(tree):
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                boundary = boundary_funcs.get(id(node))
                self.scan_function(node, boundary, imports)

        self.scan_prompts(tree, imports)
        self.scan_structure(tree, imports)
        return self.findings

    # -- boundary-shape checks -------------------------------------------------

    def check_boundary_shape(self, boundary: ToolBoundary) -> None:
        func = boundary.func
        args = list(func.args.posonlyargs) + list(func.args.args) + list(func.args.kwonlyargs)
        untyped = [
            a.arg for a in args if a.arg not in ("self", "cls") and a.annotation is None
        ]
        if untyped:
            self.emit(
                "untyped-tool-params",
                func.lineno,
                f"tool {func.name!r} accepts untyped parameters "
                f"({', '.join(untyped)}); schemas cannot constrain them",
            )
        doc = ast.get_docstring(func)
        if doc and any(rx.search(doc) for rx in _TRUST_CLAIM_RES):
            self.emit(
                "docstring-trust-claims",
                func.lineno,
                f"tool {func.name!r} docstring makes trust or safety claims "
                "the model may repeat to users",
            )

    # -- taint ----------------------------------------------------------------

    def scan_function(
        self,
        func: FuncDef,
        boundary: Optional[ToolBoundary],
        imports: dict[str, str],
    ) -> None:
        graph = taint.build_taint_graph(func, imports)
        flows = graph.flows()
        if flows:
            self.emit_taint_findings(func, boundary, flows)
        self.check_shell_passthrough(func, boundary, flows)
        self.scan_tainted_calls(func, boundary, graph, imports)

    def emit_taint_findings(
        self,
        func: FuncDef,
        boundary: Optional[ToolBoundary],
        flows: list[taint.TaintFlow],
    ) -> None:
        mechs = catalog.mechanisms()
        if boundary is not None:
            base = mechs["tool_boundary_base"]["value"]
            base_source = "tool-boundary"
        else:
            base = mechs["ordinary_function_base"]["value"]
            base_source = "ordinary-function"

        by_sink: dict[tuple[int, int, str], list[taint.TaintFlow]] = {}
        for flow in flows:
            by_sink.setdefault((flow.sink_line, flow.sink_col, flow.sink_id), []).append(flow)

        string_params = taint.string_params(func)
        for (line, col, _sink_id), group in sorted(by_sink.items()):
            sink = group[0]
            unsanitized = [f for f in group if not f.sanitized]
            source_kinds = sorted({f.source_kind for f in (unsanitized or group)})
            where = f"tool {func.name!r}" if boundary else f"function {func.name!r}"
            message = (
                f"{'/'.join(source_kinds)} data reaches {sink.sink_kind} sink "
                f"{sink.sink_name}() in {where}"
            )
            modulations = []
            notes = [f"path: {' -> '.join((unsanitized or group)[0].path)}"]
            if not unsanitized:
                modulations.append(
                    Modulation("sanitization", "multiply", mechs["sanitization"]["value"])
                )
                notes.append("every source path passes a recognized sanitizer")
            self.emit(
                sink.pattern_id,
                line,
                message,
                col=col,
                base=base,
                base_source=base_source,
                modulations=modulations,
                notes=notes,
            )

            if boundary is not None:
                verified = [
                    f
                    for f in unsanitized
                    if f.source_kind == taint.PARAMETER and f.source_name in string_params
                ]
                if verified:
                    params = sorted({f.source_name for f in verified})
                    self.emit(
                        "tool-input-dangerous-flow",
                        line,
                        f"model-controlled parameter {', '.join(params)} of tool "
                        f"{func.name!r} reaches {sink.sink_kind} sink {sink.sink_name}() "
                        "with no sanitization",
                        col=col,
                        notes=[f"path: {verified[0].path}"],
                    )

    def check_shell_passthrough(
        self,
        func: FuncDef,
        boundary: Optional[ToolBoundary],
        flows: list[taint.TaintFlow],
    ) -> None:
        # Only for opaque shells: a direct flow already yields stronger findings.
        if boundary is None or not _SHELL_NAME_RE.search(func.name) or flows:
            return
        params = taint.string_params(func)
        if not params:
            return
        passes_param = any(
            isinstance(node, ast.Call)
            and any(
                isinstance(arg, ast.Name) and arg.id in params
                for arg in ast.walk(node)
            )
            for node in ast.walk(func)
        )
        if passes_param:
            self.emit(
                "shell-passthrough-tool",
                func.lineno,
                f"tool {func.name!r} advertises shell execution and forwards its "
                "input to an opaque callee",
            )

    # -- graph-assisted call checks ---------------------------------------------

    def scan_tainted_calls(
        self,
        func: FuncDef,
        boundary: Optional[ToolBoundary],
        graph: taint.TaintGraph,
        imports: dict[str, str],
    ) -> None:
        tainted_ids = graph.tainted_ids()
        tainted_names = {
            node.name
            for node in graph.nodes.values()
            if node.node_id in tainted_ids and node.kind in ("var", "param")
        }
        llm_tainted = self._llm_tainted_names(graph)
        param_names = taint.string_params(func) | {
            a.arg
            for a in list(func.args.posonlyargs) + list(func.args.args) + list(func.args.kwonlyargs)
            if a.arg not in ("self", "cls")
        }

        def names_in(expr: ast.expr) -> set[str]:
            return {n.id for n in ast.walk(expr) if isinstance(n, ast.Name)}

        def hot(expr: ast.expr) -> bool:
            """expr carries model-reachable data: any LLM-tainted name, or a
            tainted name when the function is a tool boundary."""
            found = names_in(expr)
            if found & llm_tainted:
                return True
            return boundary is not None and bool(found & tainted_names & (param_names | tainted_names))

        for node in ast.walk(func):
            if not isinstance(node, ast.Call):
                continue
            dotted = taint.dotted_path(node.func, imports)
            attr = node.func.attr if isinstance(node.func, ast.Attribute) else None

            if dotted in _FETCH_CALLS:
                url_arg = self._url_argument(node)
                if url_arg is not None and hot(url_arg):
                    self.emit(
                        "ssrf-param-url",
                        node.lineno,
                        f"request target of {dotted}() is model-controlled; the agent "
                        "can be steered to arbitrary hosts",
                        col=node.col_offset,
                    )

            if dotted == "open" or (attr in ("read_text", "read_bytes") and dotted):
                target = node.args[0] if dotted == "open" and node.args else node.func
                probe = node.args[0] if dotted == "open" and node.args else (
                    node.func.value if isinstance(node.func, ast.Attribute) else None
                )
                if probe is not None and hot(probe):
                    self.emit(
                        "tainted-path-read",
                        node.lineno,
                        "file path under model control is opened for reading",
                        col=node.col_offset,
                    )
                del target

            if dotted in _DESTRUCTIVE_CALLS or (
                attr in ("unlink", "rmdir") and isinstance(node.func, ast.Attribute)
            ):
                probe = node.args[0] if node.args else (
                    node.func.value if isinstance(node.func, ast.Attribute) else None
                )
                if probe is not None and hot(probe):
                    self.emit(
                        "tainted-file-destruction",
                        node.lineno,
                        "file removal target is model-controlled",
                        col=node.col_offset,
                    )

            if dotted in _DESERIALIZATION_CALLS:
                memoryish = self._memoryish_context(node)
                if memoryish:
                    self.emit(
                        "memory-unsafe-load",
                        node.lineno,
                        f"agent memory state restored via {dotted}(); a poisoned "
                        "store executes on load",
                        col=node.col_offset,
                    )
                elif boundary is not None or (node.args and hot(node.args[0])):
                    self.emit(
                        "unsafe-deserialization",
                        node.lineno,
                        f"{dotted}() deserializes model-reachable bytes",
                        col=node.col_offset,
                    )

            if dotted in _DYNAMIC_IMPORT_CALLS:
                if node.args and hot(node.args[0]):
                    self.emit(
                        "dynamic-import-taint",
                        node.lineno,
                        f"module name passed to {dotted}() is model-controlled",
                        col=node.col_offset,
                    )

            if attr in _MEMORY_WRITE_METHODS and node.args:
                if any(hot(arg) for arg in node.args):
                    self.emit(
                        "memory-write-tainted",
                        node.lineno,
                        f"unvalidated content written into agent memory via .{attr}()",
                        col=node.col_offset,
                    )

        self._check_model_gated_privilege(func, llm_tainted, imports)

    def _llm_tainted_names(self, graph: taint.TaintGraph) -> set[str]:
        llm_sources = [
            n.node_id
            for n in graph.nodes.values()
            if n.source_kind in (taint.LLM_OUTPUT, taint.HTTP_INPUT)
        ]
        reachable: set[str] = set()
        for source in llm_sources:
            reachable |= taint.bfs_reachable(graph.edges, source)
        return {
            node.name
            for node in graph.nodes.values()
            if node.node_id in reachable and node.kind in ("var", "param")
        }

    def _url_argument(self, call: ast.Call) -> Optional[ast.expr]:
        for kw in call.keywords:
            if kw.arg in ("url", "endpoint"):
                return kw.value
        return call.args[0] if call.args else None

    def _memoryish_context(self, call: ast.Call) -> bool:
        for node in ast.walk(call):
            if isinstance(node, ast.Name) and _MEMORY_NAME_RE.search(node.id):
                return True
            if isinstance(node, ast.Constant) and isinstance(node.value, str):
                if _MEMORY_NAME_RE.search(node.value):
                    return True
        return False

    def _check_model_gated_privilege(
        self, func: FuncDef, llm_tainted: set[str], imports: dict[str, str]
    ) -> None:
        for node in ast.walk(func):
            if not isinstance(node, ast.If):
                continue
            test_names = {n.id for n in ast.walk(node.test) if isinstance(n, ast.Name)}
            if not test_names & llm_tainted:
                continue
            for inner in ast.walk(node):
                if isinstance(inner, ast.Call):
                    dotted = taint.dotted_path(inner.func, imports)
                    if dotted in ("os.setuid", "os.seteuid", "os.setgid") or (
                        dotted
                        and dotted.startswith("subprocess.")
                        and self._mentions_sudo(inner)
                    ):
                        self.emit(
                            "model-gated-privilege",
                            node.lineno,
                            "privileged operation is gated on model output alone",
                        )
                        return

    def _mentions_sudo(self, call: ast.Call) -> bool:
        for node in ast.walk(call):
            if isinstance(node, ast.Constant) and isinstance(node.value, str):
                if node.value == "sudo" or node.value.startswith("sudo "):
                    return True
        return False

    # -- prompt construction ------------------------------------------------------

    def scan_prompts(self, tree: ast.Module, imports: dict[str, str]) -> None:
        retrieval_named: set[str] = set()
        for node in ast.walk(tree):
            if isinstance(node, ast.Assign) and isinstance(node.value, ast.Call):
                callee = node.value.func
                attr = callee.attr if isinstance(callee, ast.Attribute) else None
                if attr in _RETRIEVAL_METHODS:
                    for target in node.targets:
                        if isinstance(target, ast.Name):
                            retrieval_named.add(target.id)

        for node in ast.walk(tree):
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                func_promptish = bool(_PROMPT_NAME_RE.search(node.name))
                for stmt in ast.walk(node):
                    if isinstance(stmt, ast.Return) and stmt.value is not None:
                        self._check_prompt_expr(
                            stmt.value, promptish_target=func_promptish,
                            retrieval_named=retrieval_named,
                        )
            if isinstance(node, ast.Assign):
                target_promptish = any(
                    isinstance(t, ast.Name) and _PROMPT_NAME_RE.search(t.id)
                    for t in node.targets
                )
                self._check_prompt_expr(
                    node.value, promptish_target=target_promptish,
                    retrieval_named=retrieval_named,
                )
            if isinstance(node, ast.AugAssign) and isinstance(node.op, ast.Add):
                if isinstance(node.target, ast.Name) and _PROMPT_NAME_RE.search(node.target.id):
                    if not _is_constant_str(node.value):
                        self.emit(
                            "prompt-augassign",
                            node.lineno,
                            f"dynamic content appended into prompt variable "
                            f"{node.target.id!r}",
                            col=node.col_offset,
                        )
            if isinstance(node, ast.Call):
                self._check_framework_prompt_call(node, retrieval_named)

    def _check_prompt_expr(
        self,
        expr: ast.expr,
        promptish_target: bool,
        retrieval_named: set[str],
    ) -> None:
        if isinstance(expr, ast.JoinedStr):
            static = _static_text(expr)
            dynamic = [
                v.value
                for v in expr.values
                if isinstance(v, ast.FormattedValue) and not _is_constant_str(v.value)
            ]
            if dynamic and (promptish_target or _PROMPT_CONTENT_RE.search(static)):
                pattern = self._prompt_pattern_for(dynamic, retrieval_named, "prompt-fstring")
                self.emit(
                    pattern,
                    expr.lineno,
                    "prompt text interpolates dynamic values via f-string",
                    col=expr.col_offset,
                )
        elif isinstance(expr, ast.Call) and isinstance(expr.func, ast.Attribute):
            if expr.func.attr == "format":
                receiver = expr.func.value
                receiver_promptish = (
                    isinstance(receiver, ast.Constant)
                    and isinstance(receiver.value, str)
                    and bool(_PROMPT_CONTENT_RE.search(receiver.value))
                ) or (
                    isinstance(receiver, ast.Name)
                    and bool(_PROMPT_NAME_RE.search(receiver.id))
                )
                dynamic = [
                    a for a in list(expr.args) + [k.value for k in expr.keywords]
                    if not _is_constant_str(a)
                ]
                if dynamic and (receiver_promptish or promptish_target):
                    pattern = self._prompt_pattern_for(dynamic, retrieval_named, "prompt-format")
                    self.emit(
                        pattern,
                        expr.lineno,
                        "prompt template filled with .format() from dynamic values",
                        col=expr.col_offset,
                    )
        elif isinstance(expr, ast.BinOp) and isinstance(expr.op, ast.Add):
            operands = _flatten_concat(expr)
            promptish_literal = any(
                isinstance(op, ast.Constant)
                and isinstance(op.value, str)
                and _PROMPT_CONTENT_RE.search(op.value)
                for op in operands
            ) or any(
                isinstance(op, ast.Name) and _PROMPT_NAME_RE.search(op.id)
                for op in operands
            )
            dynamic = [op for op in operands if not _is_constant_str(op)]
            if dynamic and (promptish_literal or promptish_target):
                pattern = self._prompt_pattern_for(dynamic, retrieval_named, "prompt-concat")
                self.emit(
                    pattern,
                    expr.lineno,
                    "prompt assembled by string concatenation with dynamic values",
                    col=expr.col_offset,
                )

    def _prompt_pattern_for(
        self, dynamic: list[ast.expr], retrieval_named: set[str], default: str
    ) -> str:
        for expr in dynamic:
            for node in ast.walk(expr):
                if isinstance(node, ast.Name) and node.id in retrieval_named:
                    return "retrieval-into-prompt"
        return default

    def _check_framework_prompt_call(
        self, call: ast.Call, retrieval_named: set[str]
    ) -> None:
        name = None
        if isinstance(call.func, ast.Name):
            name = call.func.id
        elif isinstance(call.func, ast.Attribute):
            name = call.func.attr
        if name not in _FRAMEWORK_PROMPT_CALLS:
            return
        payloads = list(call.args) + [k.value for k in call.keywords if k.value]
        for payload in payloads:
            site = _find_dynamic_string(payload)
            if site is not None:
                self.emit(
                    "prompt-framework-template",
                    call.lineno,
                    f"{name}(...) receives a template built from dynamic values "
                    "instead of placeholder variables",
                    col=call.col_offset,
                )
                return

    # -- structural checks -------------------------------------------------------

    def scan_structure(self, tree: ast.Module, imports: dict[str, str]) -> None:
        assigned_from_fetch: set[str] = set()
        for node in ast.walk(tree):
            if isinstance(node, ast.Assign):
                self._check_instruction_fetch(node, imports)
            if isinstance(node, ast.Call):
                self._check_call_kwargs(node, imports)
                self._check_template_engine(node, imports)
                self._check_self_modification(node, imports)
                self._check_cleartext(node, imports)
            if isinstance(node, ast.While):
                self._check_infinite_loop(node)
        del assigned_from_fetch

    def _check_instruction_fetch(self, node: ast.Assign, imports: dict[str, str]) -> None:
        target_promptish = any(
            isinstance(t, ast.Name) and _PROMPT_NAME_RE.search(t.id)
            for t in node.targets
        )
        if not target_promptish:
            return
        for call in ast.walk(node.value):
            if isinstance(call, ast.Call):
                dotted = taint.dotted_path(call.func, imports)
                if dotted in _FETCH_CALLS:
                    self.emit(
                        "instruction-source-remote",
                        node.lineno,
                        "system instructions are fetched from a remote endpoint at "
                        "runtime",
                        col=node.col_offset,
                    )
                    return

    def _check_call_kwargs(self, call: ast.Call, imports: dict[str, str]) -> None:
        name = None
        if isinstance(call.func, ast.Name):
            name = call.func.id
        elif isinstance(call.func, ast.Attribute):
            name = call.func.attr

        for kw in call.keywords:
            if kw.arg is None:
                continue
            value = kw.value

            if kw.arg == "verify" and _const_equals(value, False):
                self.emit(
                    "tls-verify-disabled",
                    call.lineno,
                    "TLS certificate verification disabled on outbound request",
                    col=call.col_offset,
                )
            if kw.arg == "allow_delegation" and _const_equals(value, True):
                self.emit(
                    "unrestricted-delegation",
                    call.lineno,
                    "agent may delegate to other agents without restriction",
                    col=call.col_offset,
                )
            if kw.arg in _APPROVAL_KWARGS and _const_equals(value, _APPROVAL_KWARGS[kw.arg]):
                self.emit(
                    "disabled-approval-flags",
                    call.lineno,
                    f"human approval disabled via {kw.arg}={_APPROVAL_KWARGS[kw.arg]!r}",
                    col=call.col_offset,
                )
            if kw.arg in _WILDCARD_KWARGS and _is_wildcard(value):
                self.emit(
                    "wildcard-tool-access",
                    call.lineno,
                    f"{kw.arg} grants wildcard access to every registered tool",
                    col=call.col_offset,
                )

        if name in _AGENT_CTORS:
            kwarg_names = {kw.arg for kw in call.keywords if kw.arg}
            configures_agent = bool(kwarg_names & {"tools", "agent", "llm", "tasks", "agents", "role"})
            if configures_agent and not kwarg_names & _BOUND_KWARGS:
                self.emit(
                    "unbounded-iteration-config",
                    call.lineno,
                    f"{name}(...) sets no iteration or time bound; a looping agent "
                    "runs until resources do",
                    col=call.col_offset,
                )

    def _check_template_engine(self, call: ast.Call, imports: dict[str, str]) -> None:
        dotted = taint.dotted_path(call.func, imports)
        attr = call.func.attr if isinstance(call.func, ast.Attribute) else None
        if dotted in _TEMPLATE_ENGINES or attr == "from_string":
            for arg in call.args:
                if _find_dynamic_string(arg) is not None:
                    self.emit(
                        "template-injection",
                        call.lineno,
                        "template source is assembled from dynamic values; template "
                        "syntax in the data will execute",
                        col=call.col_offset,
                    )
                    return

    def _check_self_modification(self, call: ast.Call, imports: dict[str, str]) -> None:
        dotted = taint.dotted_path(call.func, imports)
        attr = call.func.attr if isinstance(call.func, ast.Attribute) else None
        writes_self = False
        if dotted == "open" and call.args:
            writes_self = _mentions_dunder_file(call.args[0]) and any(
                _const_contains(a, ("w", "a")) for a in call.args[1:]
            ) or (
                _mentions_dunder_file(call.args[0])
                and any(
                    kw.arg == "mode" and _const_contains(kw.value, ("w", "a"))
                    for kw in call.keywords
                )
            )
        if attr in ("write_text", "write_bytes") and isinstance(call.func, ast.Attribute):
            writes_self = _mentions_dunder_file(call.func.value)
        if writes_self:
            self.emit(
                "self-modifying-source",
                call.lineno,
                "program writes to its own source file",
                col=call.col_offset,
            )

    def _check_cleartext(self, call: ast.Call, imports: dict[str, str]) -> None:
        dotted = taint.dotted_path(call.func, imports)
        if dotted not in _FETCH_CALLS:
            return
        url_arg = self._url_argument(call)
        if url_arg is None:
            return
        url = _static_prefix(url_arg)
        if url.startswith("http://"):
            modulations = []
            host = url[len("http://"):].split("/", 1)[0].split(":")[0]
            if host in ("localhost", "127.0.0.1", "::1", "0.0.0.0"):
                modulations.append(
                    Modulation(
                        "localhost_discount",
                        "multiply",
                        catalog.mechanism_value("localhost_discount"),
                    )
                )
            self.emit(
                "cleartext-endpoint",
                call.lineno,
                f"agent traffic to {url.split('?')[0]!r} travels over cleartext HTTP",
                col=call.col_offset,
                modulations=modulations,
            )

    def _check_infinite_loop(self, node: ast.While) -> None:
        if not (isinstance(node.test, ast.Constant) and node.test.value is True):
            return
        has_break = any(isinstance(n, ast.Break) for n in ast.walk(node))
        if has_break:
            return
        calls_llm = any(
            isinstance(n, ast.Call)
            and isinstance(n.func, ast.Attribute)
            and n.func.attr in _LLM_STRONG
            for n in ast.walk(node)
        )
        if calls_llm:
            self.emit(
                "infinite-agent-loop",
                node.lineno,
                "while True loop invokes the model with no break or bound",
                col=node.col_offset,
            )


# ---------------------------------------------------------------------------
# expression helpers
# ---------------------------------------------------------------------------

def _is_constant_str(expr: ast.expr) -> bool:
    return isinstance(expr, ast.Constant)


def _static_text(joined: ast.JoinedStr) -> str:
    return "".join(
        v.value
        for v in joined.values
        if isinstance(v, ast.Constant) and isinstance(v.value, str)
    )


def _flatten_concat(expr: ast.BinOp) -> list[ast.expr]:
    parts: list[ast.expr] = []
    stack: list[ast.expr] = [expr]
    while stack:
        current = stack.pop()
        if isinstance(current, ast.BinOp) and isinstance(current.op, ast.Add):
            stack.append(current.left)
            stack.append(current.right)
        else:
            parts.append(current)
    return parts


def _find_dynamic_string(node: ast.expr) -> Optional[ast.expr]:
    """First f-string/concat/format expression with non-constant parts."""
    for sub in ast.walk(node):
        if isinstance(sub, ast.JoinedStr):
            if any(
                isinstance(v, ast.FormattedValue) and not _is_constant_str(v.value)
                for v in sub.values
            ):
                return sub
        if isinstance(sub, ast.BinOp) and isinstance(sub.op, ast.Add):
            operands = _flatten_concat(sub)
            has_str = any(
                isinstance(op, ast.Constant) and isinstance(op.value, str)
                for op in operands
            )
            if has_str and any(not _is_constant_str(op) for op in operands):
                return sub
        if (
            isinstance(sub, ast.Call)
            and isinstance(sub.func, ast.Attribute)
            and sub.func.attr == "format"
            and (sub.args or sub.keywords)
        ):
            return sub
    return None


def _const_equals(expr: ast.expr, value: Any) -> bool:
    return isinstance(expr, ast.Constant) and expr.value is value


def _is_wildcard(expr: ast.expr) -> bool:
    if isinstance(expr, ast.Constant) and expr.value == "*":
        return True
    if isinstance(expr, (ast.List, ast.Tuple, ast.Set)):
        return any(
            isinstance(e, ast.Constant) and e.value == "*" for e in expr.elts
        )
    return False


def _mentions_dunder_file(expr: ast.expr) -> bool:
    return any(
        isinstance(n, ast.Name) and n.id == "__file__" for n in ast.walk(expr)
    )


def _const_contains(expr: ast.expr, prefixes: tuple[str, ...]) -> bool:
    return (
        isinstance(expr, ast.Constant)
        and isinstance(expr.value, str)
        and expr.value.startswith(prefixes)
    )


def _static_prefix(expr: ast.expr) -> str:
    """Leading constant text of a string expression, for URL scheme checks."""
    if isinstance(expr, ast.Constant) and isinstance(expr.value, str):
        return expr.value
    if isinstance(expr, ast.JoinedStr) and expr.values:
        first = expr.values[0]
        if isinstance(first, ast.Constant) and isinstance(first.value, str):
            return first.value
    if isinstance(expr, ast.BinOp) and isinstance(expr.op, ast.Add):
        return _static_prefix(expr.left)
    return ""


def scan(path: str, text: str, config: Any = None) -> list[Finding]:
    """Scan one Python module. Raises SyntaxError for unparseable input."""
    return _ModuleScan(path, text, config).run()
