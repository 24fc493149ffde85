"""JSON-RPC 2.0 wire layer.

Codec and framing, the capability/task server runtime, the directory
service, stdio and TCP transports, and the clients the orchestrator uses.

Framing: newline-delimited JSON objects on stdio; on TCP each message is
length-prefixed HTTP-style (decimal byte count, CRLF CRLF, body).

Servers handle requests sequentially per connection; connections are served
concurrently. Directory writes are serialized by the service.
"""

from __future__ import annotations

import io
import json
import socket
import socketserver
import sys
import threading
from dataclasses import dataclass, field
from typing import Any, Callable

from . import directory as directory_ops
from .atdp import TaskDeclaration, parse_task
from .canonical import canonical_bytes, sorted_map
from .capabilities import (
    Capability,
    CapabilityId,
    capability_id_problems,
    is_identifier,
    load_document,
    parse_capability,
    validate_capability,
)
from .directory import DirectorySnapshot, parse_agent_record, snapshot_to_json
from .errors import (
    BindFailure,
    ConfigInvalid,
    DaliaError,
    EndpointUnreachable,
    InvalidCapabilityId,
    InvalidRecord,
    InvalidServerId,
    MalformedDocument,
    ProtocolError,
    UnknownAgent,
    ValidationError,
    WireError,
)

JSONRPC_VERSION = "2.0"

# JSON-RPC reserved codes
PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603

# Application codes (-32000..-32099, clear of the reserved range)
UNKNOWN_CAPABILITY = -32001
MISSING_INPUT = -32002
HANDLER_FAULT = -32003
DIR_INVALID_RECORD = -32010
DIR_UNKNOWN_AGENT = -32011
DIR_INVALID_CAPABILITY_ID = -32012
DIR_INVALID_SERVER_ID = -32013
DIR_MALFORMED = -32014

# Methods that constitute discovery; planning and execution must never call
# them (the closed-world contract).
DISCOVERY_CLASS_METHODS = frozenset(
    {
        "dalia/server_info",
        "dalia/list_capabilities",
        "atdp/list_tasks",
        "directory/list_agents",
        "directory/register_agent",
        "directory/remove_agent",
        "directory/bind_server",
        "directory/resolve",
        "directory/snapshot",
    }
)


# -- codec ---------------------------------------------------------------------


@dataclass(frozen=True)
class WireRequest:
    id: int
    method: str
    params: dict


@dataclass(frozen=True)
class WireResponse:
    id: int | None
    result: Any = None
    error: dict | None = None

    @property
    def is_error(self) -> bool:
        return self.error is not None


def encode_request(request: WireRequest) -> dict:
    return {
        "jsonrpc": JSONRPC_VERSION,
        "id": request.id,
        "method": request.method,
        "params": request.params,
    }


def decode_request(obj: Any) -> WireRequest:
    if not isinstance(obj, dict):
        raise ProtocolError("request must be an object")
    if obj.get("jsonrpc") != JSONRPC_VERSION:
        raise ProtocolError("request is not JSON-RPC 2.0")
    request_id = obj.get("id")
    if type(request_id) is not int:
        raise ProtocolError("request id must be an integer")
    method = obj.get("method")
    if not isinstance(method, str):
        raise ProtocolError("request method must be a string")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ProtocolError("request params must be an object")
    unknown = set(obj) - {"jsonrpc", "id", "method", "params"}
    if unknown:
        raise ProtocolError(f"unexpected request members: {sorted(unknown)}")
    return WireRequest(id=request_id, method=method, params=params)


def encode_response(response: WireResponse) -> dict:
    encoded: dict[str, Any] = {"jsonrpc": JSONRPC_VERSION, "id": response.id}
    if response.error is not None:
        encoded["error"] = response.error
    else:
        encoded["result"] = response.result
    return encoded


def decode_response(obj: Any) -> WireResponse:
    if not isinstance(obj, dict):
        raise ProtocolError("response must be an object")
    if obj.get("jsonrpc") != JSONRPC_VERSION:
        raise ProtocolError("response is not JSON-RPC 2.0")
    response_id = obj.get("id")
    if response_id is not None and type(response_id) is not int:
        raise ProtocolError("response id must be an integer or null")
    has_result = "result" in obj
    has_error = "error" in obj
    if has_result == has_error:
        raise ProtocolError("response must carry exactly one of result/error")
    if has_error:
        error = obj["error"]
        if (
            not isinstance(error, dict)
            or type(error.get("code")) is not int
            or not isinstance(error.get("message"), str)
            or set(error) != {"code", "message"}
        ):
            raise ProtocolError("error member must be {code: int, message: str}")
        return WireResponse(id=response_id, error=error)
    unknown = set(obj) - {"jsonrpc", "id", "result"}
    if unknown:
        raise ProtocolError(f"unexpected response members: {sorted(unknown)}")
    return WireResponse(id=response_id, result=obj["result"])


# -- framing --------------------------------------------------------------------


def frame_line(obj: dict) -> bytes:
    """One message per line (stdio transport)."""
    return canonical_bytes(obj) + b"\n"


def frame_block(obj: dict) -> bytes:
    """Length-prefixed message (TCP transport): decimal byte count, CRLF CRLF, body."""
    body = canonical_bytes(obj)
    return str(len(body)).encode("ascii") + b"\r\n\r\n" + body


def read_block(reader: io.BufferedIOBase) -> dict | None:
    """Read one length-prefixed message; None on clean EOF."""
    header = bytearray()
    while not header.endswith(b"\r\n\r\n"):
        byte = reader.read(1)
        if not byte:
            if header:
                raise ProtocolError("connection closed mid-frame")
            return None
        header += byte
        if len(header) > 32:
            raise ProtocolError("oversized frame header")
    try:
        length = int(header[:-4].decode("ascii"))
    except ValueError as exc:
        raise ProtocolError(f"bad frame length: {header[:-4]!r}") from exc
    body = reader.read(length)
    if body is None or len(body) != length:
        raise ProtocolError("connection closed mid-frame")
    try:
        return json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"frame body is not JSON: {exc}") from exc


# -- server configuration --------------------------------------------------------


@dataclass(frozen=True)
class HandlerSpec:
    """Scripted behavior for one capability.

    ``script`` holds output maps replayed in invocation order (the last
    entry repeats once exhausted); ``fail_on`` holds 1-based invocation
    indices that fault instead.
    """

    script: tuple[dict, ...] = ()
    fail_on: tuple[int, ...] = ()


@dataclass(frozen=True)
class ServerConfig:
    server_id: str
    capabilities: tuple[Capability, ...]
    tasks: tuple[TaskDeclaration, ...]
    handlers: dict[CapabilityId, HandlerSpec] = field(default_factory=dict)


def config_problems(config: ServerConfig) -> list[str]:
    """Semantic defects in a server configuration (empty when startable)."""
    problems: list[str] = []
    if not is_identifier(config.server_id):
        problems.append(f"server_id is not a lowercase identifier: {config.server_id!r}")
    declared = {cap.capability_id for cap in config.capabilities}
    if len(declared) != len(config.capabilities):
        problems.append("duplicate capability ids declared by this server")
    for cap in config.capabilities:
        report = validate_capability(cap)
        problems += [f"capability {cap.capability_id}: {v}" for v in report.violations]
    for task in config.tasks:
        for cid in task.capabilities:
            if cid not in declared:
                problems.append(
                    f"task {task.task_id} references undeclared capability {cid}"
                )
    for cid, spec in config.handlers.items():
        if cid not in declared:
            problems.append(f"handler for undeclared capability {cid}")
        if any(not isinstance(entry, dict) for entry in spec.script):
            problems.append(f"handler script for {cid} must be a list of output maps")
        if any(type(k) is not int or k < 1 for k in spec.fail_on):
            problems.append(f"handler fail_on for {cid} must be positive integers")
    return problems


def parse_server_config(document: Any) -> ServerConfig:
    """Parse and validate a server configuration; raises ConfigInvalid."""
    try:
        data = load_document(document, "server config")
    except MalformedDocument as exc:
        raise ConfigInvalid(exc.violations) from exc

    problems: list[str] = []
    server_id = data.get("server_id")
    if not isinstance(server_id, str):
        problems.append("server_id must be a string")
        server_id = ""

    unknown = set(data) - {"server_id", "capabilities", "tasks", "handlers"}
    if unknown:
        problems.append(f"unexpected config fields: {sorted(unknown)}")

    capabilities: list[Capability] = []
    for index, doc in enumerate(data.get("capabilities", [])):
        try:
            capabilities.append(parse_capability(doc))
        except ValidationError as exc:
            problems += [f"capabilities[{index}]: {v}" for v in exc.violations]

    tasks: list[TaskDeclaration] = []
    for index, doc in enumerate(data.get("tasks", [])):
        try:
            tasks.append(parse_task(doc))
        except ValidationError as exc:
            problems += [f"tasks[{index}]: {v}" for v in exc.violations]

    handlers: dict[CapabilityId, HandlerSpec] = {}
    raw_handlers = data.get("handlers", {})
    if not isinstance(raw_handlers, dict):
        problems.append("handlers must be an object")
        raw_handlers = {}
    for key, spec in raw_handlers.items():
        id_problems = capability_id_problems(key, label="handler key")
        if id_problems:
            problems += id_problems
            continue
        if not isinstance(spec, dict) or not set(spec) <= {"script", "fail_on"}:
            problems.append(f"handler for {key} must be {{script?, fail_on?}}")
            continue
        script = spec.get("script", [])
        fail_on = spec.get("fail_on", [])
        if not isinstance(script, list):
            problems.append(f"handler script for {key} must be a list of output maps")
            script = []
        if not isinstance(fail_on, list):
            problems.append(f"handler fail_on for {key} must be a list of integers")
            fail_on = []
        handlers[CapabilityId.parse(key)] = HandlerSpec(
            script=tuple(script), fail_on=tuple(fail_on)
        )

    config = ServerConfig(
        server_id=server_id,
        capabilities=tuple(capabilities),
        tasks=tuple(tasks),
        handlers=handlers,
    )
    problems += config_problems(config)
    if problems:
        raise ConfigInvalid(sorted(set(problems), key=problems.index))
    return config


def server_config_to_json(config: ServerConfig) -> dict:
    return {
        "server_id": config.server_id,
        "capabilities": [cap.to_json() for cap in config.capabilities],
        "tasks": [task.to_json() for task in config.tasks],
        "handlers": {
            cid.render(): _handler_to_json(spec)
            for cid, spec in sorted(config.handlers.items())
        },
    }


def _handler_to_json(spec: HandlerSpec) -> dict:
    doc: dict[str, Any] = {}
    if spec.script:
        doc["script"] = list(spec.script)
    if spec.fail_on:
        doc["fail_on"] = list(spec.fail_on)
    return doc


# -- dispatch ------------------------------------------------------------------


def _error_response(request_id: int | None, code: int, message: str) -> dict:
    return encode_response(
        WireResponse(id=request_id, error={"code": code, "message": message})
    )


class _Dispatcher:
    """Shared request plumbing: decode, route, map errors to codes."""

    #: method name -> handler(params) -> result
    _methods: dict[str, Callable[[dict], Any]]

    _ERROR_CODES = (
        (InvalidRecord, DIR_INVALID_RECORD),
        (UnknownAgent, DIR_UNKNOWN_AGENT),
        (InvalidCapabilityId, DIR_INVALID_CAPABILITY_ID),
        (InvalidServerId, DIR_INVALID_SERVER_ID),
        (MalformedDocument, DIR_MALFORMED),
    )

    def handle(self, obj: Any) -> dict:
        """Process one decoded request object into a response object."""
        try:
            request = decode_request(obj)
        except ProtocolError as exc:
            request_id = obj.get("id") if isinstance(obj, dict) else None
            if type(request_id) is not int:
                request_id = None
            return _error_response(request_id, INVALID_REQUEST, str(exc))
        handler = self._methods.get(request.method)
        if handler is None:
            return _error_response(
                request.id, METHOD_NOT_FOUND, f"unknown method {request.method!r}"
            )
        try:
            result = handler(request.params)
        except WireError as exc:
            return _error_response(request.id, exc.code, exc.message)
        except DaliaError as exc:
            for error_type, code in self._ERROR_CODES:
                if isinstance(exc, error_type):
                    return _error_response(request.id, code, str(exc))
            return _error_response(request.id, INTERNAL_ERROR, str(exc))
        except Exception as exc:  # defensive: never leak a traceback on the wire
            return _error_response(request.id, INTERNAL_ERROR, str(exc))
        return encode_response(WireResponse(id=request.id, result=result))

    def handle_text(self, line: str) -> dict:
        """Process one raw text frame (stdio transport)."""
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            return _error_response(None, PARSE_ERROR, f"parse error: {exc}")
        return self.handle(obj)


class WireServer(_Dispatcher):
    """Serves one server configuration: capability, task, and invoke methods.

    Startup validates the configuration and refuses to serve a broken one.
    """

    def __init__(self, config: ServerConfig):
        problems = config_problems(config)
        if problems:
            raise ConfigInvalid(problems)
        self.config = config
        self._lock = threading.Lock()
        self._invocations: dict[CapabilityId, int] = {}
        self._capabilities = {cap.capability_id: cap for cap in config.capabilities}
        self._methods = {
            "dalia/server_info": self._server_info,
            "dalia/list_capabilities": self._list_capabilities,
            "atdp/list_tasks": self._list_tasks,
            "dalia/invoke": self._invoke,
        }

    def _server_info(self, params: dict) -> dict:
        return {"server_id": self.config.server_id}

    def _list_capabilities(self, params: dict) -> list[dict]:
        return [cap.to_json() for cap in self.config.capabilities]

    def _list_tasks(self, params: dict) -> list[dict]:
        return [task.to_json() for task in self.config.tasks]

    def _invoke(self, params: dict) -> dict:
        raw_id = params.get("capability_id")
        if capability_id_problems(raw_id):
            raise WireError(UNKNOWN_CAPABILITY, f"unknown capability: {raw_id!r}")
        cid = CapabilityId.parse(raw_id)
        cap = self._capabilities.get(cid)
        if cap is None:
            raise WireError(UNKNOWN_CAPABILITY, f"unknown capability: {cid}")
        inputs = params.get("inputs", {})
        if not isinstance(inputs, dict):
            raise WireError(INVALID_PARAMS, "inputs must be an object")
        for slot in cap.inputs:
            if slot not in inputs:
                raise WireError(MISSING_INPUT, f"missing input slot: {slot}")
        with self._lock:
            self._invocations[cid] = self._invocations.get(cid, 0) + 1
            count = self._invocations[cid]
        spec = self.config.handlers.get(cid)
        if spec is not None and count in spec.fail_on:
            raise WireError(
                HANDLER_FAULT, f"scripted fault on invocation {count} of {cid}"
            )
        if spec is not None and spec.script:
            return dict(spec.script[min(count - 1, len(spec.script) - 1)])
        return {slot: f"{slot} produced by {cid}" for slot in cap.outputs}


class DirectoryService(_Dispatcher):
    """Serves directory methods over the current snapshot; writes serialized."""

    def __init__(self, snapshot: DirectorySnapshot | None = None):
        self._snapshot = snapshot if snapshot is not None else directory_ops.empty_snapshot()
        self._lock = threading.Lock()
        self._methods = {
            "directory/list_agents": self._list_agents,
            "directory/register_agent": self._register_agent,
            "directory/remove_agent": self._remove_agent,
            "directory/bind_server": self._bind_server,
            "directory/resolve": self._resolve,
            "directory/snapshot": self._snapshot_doc,
        }

    @property
    def snapshot(self) -> DirectorySnapshot:
        return self._snapshot

    def _list_agents(self, params: dict) -> list[dict]:
        snapshot = self._snapshot
        return [snapshot.agents[aid].to_json() for aid in sorted(snapshot.agents)]

    def _register_agent(self, params: dict) -> dict:
        record = parse_agent_record(params.get("record"))
        with self._lock:
            self._snapshot = directory_ops.register_agent(self._snapshot, record)
        return {"agent_id": record.agent_id}

    def _remove_agent(self, params: dict) -> dict:
        agent_id = params.get("agent_id")
        if not isinstance(agent_id, str):
            raise WireError(INVALID_PARAMS, "agent_id must be a string")
        with self._lock:
            self._snapshot = directory_ops.remove_agent(self._snapshot, agent_id)
        return {"agent_id": agent_id}

    def _bind_server(self, params: dict) -> dict:
        server_id = params.get("server_id")
        capability_ids = params.get("capability_ids")
        if not isinstance(server_id, str):
            raise InvalidServerId(server_id)
        if not isinstance(capability_ids, list):
            raise WireError(INVALID_PARAMS, "capability_ids must be a list")
        with self._lock:
            self._snapshot = directory_ops.bind_server_capabilities(
                self._snapshot, server_id, capability_ids
            )
        return {"server_id": server_id, "capability_ids": list(capability_ids)}

    def _resolve(self, params: dict) -> list[str]:
        raw_id = params.get("capability_id")
        problems = capability_id_problems(raw_id)
        if problems:
            raise InvalidCapabilityId("; ".join(problems))
        return directory_ops.resolve_capability(self._snapshot, CapabilityId.parse(raw_id))

    def _snapshot_doc(self, params: dict) -> dict:
        return snapshot_to_json(self._snapshot)


# -- transports ------------------------------------------------------------------


def serve_stdio(dispatcher: _Dispatcher, stdin=None, stdout=None) -> None:
    """Answer newline-delimited requests until EOF. stdout carries protocol only."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        response = dispatcher.handle_text(line)
        stdout.write(canonical_bytes(response).decode("utf-8") + "\n")
        stdout.flush()


class _TcpHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        while True:
            try:
                obj = read_block(self.rfile)
            except ProtocolError as exc:
                self.wfile.write(frame_block(_error_response(None, PARSE_ERROR, str(exc))))
                return
            if obj is None:
                return
            self.wfile.write(frame_block(self.server.dispatcher.handle(obj)))  # type: ignore[attr-defined]


class _ThreadingTcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class TcpServerHandle:
    """A running TCP wire server; ``shutdown()`` stops it."""

    def __init__(self, dispatcher: _Dispatcher, address: str):
        host, port = parse_tcp_address(address)
        try:
            self._server = _ThreadingTcpServer((host, port), _TcpHandler)
        except OSError as exc:
            raise BindFailure(address, str(exc)) from exc
        self._server.dispatcher = dispatcher  # type: ignore[attr-defined]
        self.dispatcher = dispatcher
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def address(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)


def parse_tcp_address(address: str) -> tuple[str, int]:
    host, _, port_text = address.rpartition(":")
    if not host or not port_text.isdigit():
        raise BindFailure(address, "expected host:port")
    return host, int(port_text)


def serve(config: ServerConfig, transport: str) -> TcpServerHandle | None:
    """Start a server for ``config``.

    ``transport`` is ``"stdio"`` (blocks until EOF) or a ``host:port``
    address (returns a running handle). Startup validation refuses any
    configuration with declaration defects (ConfigInvalid).
    """
    server = WireServer(config)
    if transport == "stdio":
        serve_stdio(server)
        return None
    return TcpServerHandle(server, transport)


# -- clients ---------------------------------------------------------------------


class LocalClient:
    """In-process client over any dispatcher; useful for tests and local runs."""

    def __init__(self, dispatcher: _Dispatcher, endpoint: str = "local"):
        self._dispatcher = dispatcher
        self.endpoint = endpoint
        self._next_id = 0
        self._lock = threading.Lock()

    def call(self, method: str, params: dict | None = None) -> Any:
        with self._lock:
            self._next_id += 1
            request_id = self._next_id
        request = WireRequest(id=request_id, method=method, params=params or {})
        response = decode_response(self._dispatcher.handle(encode_request(request)))
        return _unwrap(response, request_id)


class TcpClient:
    """One-connection-per-call client for ``host:port`` endpoints."""

    def __init__(self, address: str):
        self.endpoint = address
        self._address = parse_tcp_address(address)
        self._next_id = 0
        self._lock = threading.Lock()

    def call(self, method: str, params: dict | None = None) -> Any:
        with self._lock:
            self._next_id += 1
            request_id = self._next_id
        request = WireRequest(id=request_id, method=method, params=params or {})
        try:
            with socket.create_connection(self._address, timeout=10) as conn:
                conn.sendall(frame_block(encode_request(request)))
                with conn.makefile("rb") as reader:
                    obj = read_block(reader)
        except OSError as exc:
            raise EndpointUnreachable(self.endpoint, str(exc)) from exc
        if obj is None:
            raise ProtocolError(f"{self.endpoint}: connection closed without a response")
        response = decode_response(obj)
        return _unwrap(response, request_id)


def _unwrap(response: WireResponse, request_id: int) -> Any:
    if response.is_error:
        assert response.error is not None
        raise WireError(response.error["code"], response.error["message"])
    if response.id != request_id:
        raise ProtocolError(
            f"response id {response.id!r} does not match request id {request_id}"
        )
    return response.result


class CountingClient:
    """Wraps a client and counts calls per method (test instrumentation)."""

    def __init__(self, inner):
        self._inner = inner
        self.endpoint = getattr(inner, "endpoint", "counting")
        self.calls: dict[str, int] = {}

    def call(self, method: str, params: dict | None = None) -> Any:
        self.calls[method] = self.calls.get(method, 0) + 1
        return self._inner.call(method, params)

    def discovery_call_count(self) -> int:
        return sum(
            count for method, count in self.calls.items()
            if method in DISCOVERY_CLASS_METHODS
        )


def connect_server(endpoint: Any):
    """Resolve a capability-server endpoint to a client.

    Accepts ``tcp:host:port``, ``local:<config.json path>`` (spins up an
    in-process server from the file), or an already-built client object.
    """
    if hasattr(endpoint, "call"):
        return endpoint
    if not isinstance(endpoint, str):
        raise EndpointUnreachable(repr(endpoint), "not an endpoint")
    if endpoint.startswith("tcp:"):
        return TcpClient(endpoint[len("tcp:"):])
    if endpoint.startswith("local:"):
        path = endpoint[len("local:"):]
        try:
            with open(path, "rb") as handle:
                config = parse_server_config(handle.read())
        except (OSError, ConfigInvalid) as exc:
            raise EndpointUnreachable(endpoint, str(exc)) from exc
        return LocalClient(WireServer(config), endpoint=endpoint)
    raise EndpointUnreachable(endpoint, "unknown endpoint scheme")


def connect_directory(endpoint: Any):
    """Resolve a directory endpoint to a client.

    ``local:`` endpoints name a persisted snapshot file served in-process.
    """
    if hasattr(endpoint, "call"):
        return endpoint
    if not isinstance(endpoint, str):
        raise EndpointUnreachable(repr(endpoint), "not an endpoint")
    if endpoint.startswith("tcp:"):
        return TcpClient(endpoint[len("tcp:"):])
    if endpoint.startswith("local:"):
        path = endpoint[len("local:"):]
        try:
            with open(path, "rb") as handle:
                snapshot = directory_ops.load_snapshot(handle.read())
        except (OSError, MalformedDocument) as exc:
            raise EndpointUnreachable(endpoint, str(exc)) from exc
        return LocalClient(DirectoryService(snapshot), endpoint=endpoint)
    raise EndpointUnreachable(endpoint, "unknown endpoint scheme")


class Invoker:
    """Routes capability invocations to the client serving each server id.

    This is the only wire surface planning and execution may touch.
    """

    def __init__(self, clients_by_server: dict[str, Any]):
        self._clients = dict(clients_by_server)

    def invoke(self, server_id: str, capability_id: CapabilityId, inputs: dict) -> dict:
        client = self._clients.get(server_id)
        if client is None:
            raise WireError(UNKNOWN_CAPABILITY, f"no route to server {server_id!r}")
        result = client.call(
            "dalia/invoke",
            {
                "capability_id": capability_id.render(),
                "inputs": sorted_map(inputs),
            },
        )
        if not isinstance(result, dict):
            raise ProtocolError("invoke result must be an object of output slots")
        return result
