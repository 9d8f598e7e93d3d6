"""Read-only MCP server inspection over stdio.

Speaks newline-delimited JSON-RPC 2.0: initialize, the initialized
notification, then tools/list. That is the entire conversation; the
client has no code path that issues tools/call or any other method, so
inspection can never trigger server-side effects. Every message in both
directions is recorded in the transcript for auditing.
"""

from __future__ import annotations

import json
import os
import queue
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Optional

PROTOCOL_VERSION = "2024-11-05"
DEFAULT_TIMEOUT = 10.0

CLIENT_INFO = {"name": "agent-audit", "version": "0.1.0"}


class InspectorError(Exception):
    """Base for inspection failures; maps to CLI exit code 2."""

    exit_code = 2


class SpawnError(InspectorError):
    """Server process could not be started or died immediately."""


class ProtocolError(InspectorError):
    """Server responded with something other than valid JSON-RPC."""


class InspectTimeout(InspectorError):
    """Server did not answer within the deadline."""


@dataclass
class ToolInfo:
    name: str
    description: str = ""
    input_schema: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "ToolInfo":
        return cls(
            name=str(payload.get("name", "")),
            description=str(payload.get("description") or ""),
            input_schema=payload.get("inputSchema") or {},
        )


@dataclass
class InspectionResult:
    command: list[str]
    server_info: dict[str, Any]
    protocol_version: str
    tools: list[ToolInfo]
    transcript: list[dict[str, Any]]

    def sent_methods(self) -> list[str]:
        return [
            entry["payload"].get("method")
            for entry in self.transcript
            if entry["direction"] == "sent" and "method" in entry["payload"]
        ]


class _LineReader(threading.Thread):
    """Pulls stdout lines into a queue so reads can honor a deadline."""

    def __init__(self, stream):
        super().__init__(daemon=True)
        self.stream = stream
        self.lines: queue.Queue = queue.Queue()

    def run(self) -> None:
        try:
            for line in self.stream:
                self.lines.put(line)
        except ValueError:
            pass
        self.lines.put(None)


class StdioClient:
    """One inspection session against a spawned server process."""

    def __init__(
        self,
        command: list[str],
        timeout: float = DEFAULT_TIMEOUT,
        env: Optional[dict[str, str]] = None,
    ):
        self.command = list(command)
        self.timeout = timeout
        self.transcript: list[dict[str, Any]] = []
        self._next_id = 1
        spawn_env = None
        if env:
            spawn_env = dict(os.environ)
            spawn_env.update({k: os.path.expandvars(v) for k, v in env.items()})
        try:
            self.process = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
                env=spawn_env,
            )
        except OSError as exc:
            raise SpawnError(f"could not start {self.command[0]!r}: {exc}") from exc
        self._reader = _LineReader(self.process.stdout)
        self._reader.start()
        self._deadline = time.monotonic() + timeout

    # -- wire ------------------------------------------------------------------

    def _send(self, payload: dict[str, Any]) -> None:
        self.transcript.append({"direction": "sent", "payload": payload})
        try:
            assert self.process.stdin is not None
            self.process.stdin.write(json.dumps(payload) + "\n")
            self.process.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SpawnError(f"server closed stdin: {exc}") from exc

    def _receive(self) -> dict[str, Any]:
        remaining = self._deadline - time.monotonic()
        if remaining <= 0:
            raise InspectTimeout(f"no response within {self.timeout:.1f}s")
        try:
            line = self._reader.lines.get(timeout=remaining)
        except queue.Empty:
            raise InspectTimeout(f"no response within {self.timeout:.1f}s") from None
        if line is None:
            code = self.process.poll()
            raise SpawnError(f"server exited (code {code}) before responding")
        line = line.strip()
        if not line:
            return self._receive()
        try:
            payload = json.loads(line)
        except ValueError as exc:
            raise ProtocolError(f"non-JSON line from server: {line[:120]!r}") from exc
        if not isinstance(payload, dict):
            raise ProtocolError(f"JSON-RPC message must be an object: {line[:120]!r}")
        self.transcript.append({"direction": "received", "payload": payload})
        return payload

    def request(self, method: str, params: Optional[dict[str, Any]] = None) -> dict[str, Any]:
        request_id = self._next_id
        self._next_id += 1
        payload: dict[str, Any] = {"jsonrpc": "2.0", "id": request_id, "method": method}
        if params is not None:
            payload["params"] = params
        self._send(payload)
        while True:
            message = self._receive()
            if message.get("id") == request_id:
                if "error" in message:
                    error = message["error"]
                    raise ProtocolError(
                        f"{method} failed: {error.get('message', error)}"
                    )
                result = message.get("result")
                if not isinstance(result, dict):
                    raise ProtocolError(f"{method} returned no result object")
                return result
            # Server-initiated notifications are recorded and skipped.

    def notify(self, method: str, params: Optional[dict[str, Any]] = None) -> None:
        payload: dict[str, Any] = {"jsonrpc": "2.0", "method": method}
        if params is not None:
            payload["params"] = params
        self._send(payload)

    def close(self) -> None:
        try:
            if self.process.stdin is not None:
                self.process.stdin.close()
        except OSError:
            pass
        try:
            self.process.terminate()
            self.process.wait(timeout=2)
        except (OSError, subprocess.TimeoutExpired):
            self.process.kill()


def inspect_server(
    command: list[str],
    timeout: float = DEFAULT_TIMEOUT,
    env: Optional[dict[str, str]] = None,
) -> InspectionResult:
    """Handshake with a server and list its tools. Never calls any tool."""
    client = StdioClient(command, timeout=timeout, env=env)
    try:
        init = client.request(
            "initialize",
            {
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {},
                "clientInfo": dict(CLIENT_INFO),
            },
        )
        client.notify("notifications/initialized")
        listing = client.request("tools/list")
        tools_payload = listing.get("tools")
        if not isinstance(tools_payload, list):
            raise ProtocolError("tools/list result carries no tools array")
        tools = [ToolInfo.from_payload(t) for t in tools_payload if isinstance(t, dict)]
        return InspectionResult(
            command=list(command),
            server_info=init.get("serverInfo") or {},
            protocol_version=str(init.get("protocolVersion") or ""),
            tools=tools,
            transcript=client.transcript,
        )
    finally:
        client.close()
