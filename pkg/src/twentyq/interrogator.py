"""Live sequential equality test between two model oracles.

Both models are asked the same questions in order; the first disagreement
rejects "same model", and exhausting the budget without one accepts it.
Oracles either replay a matrix row or talk to a remote endpoint with
newline-delimited JSON::

    -> {"id": 1, "question_id": "q7", "text": "..."}
    <- {"id": 1, "answer": 0}
"""

from __future__ import annotations

import itertools
import json
import socket
import socketserver
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

from .heuristics import OrderedQuestionList
from .matrix import ResponseMatrix

__all__ = [
    "ACCEPT",
    "REJECT",
    "ABORTED",
    "DEFAULT_BUDGET",
    "DEFAULT_TIMEOUT",
    "OracleError",
    "ModelOracle",
    "MatrixOracle",
    "Endpoint",
    "RemoteOracle",
    "Verdict",
    "matrix_oracle",
    "remote_oracle",
    "ordered_question_ids",
    "sequential_test",
    "OracleServer",
]

ACCEPT = "accept_h0"
REJECT = "reject_h0"
ABORTED = "aborted"
DEFAULT_BUDGET = 20
DEFAULT_TIMEOUT = 30.0


class OracleError(RuntimeError):
    """The oracle could not produce a valid binary answer."""


class ModelOracle(Protocol):
    def answer(self, question_id: str) -> int: ...


class MatrixOracle:
    """Answers from one stored row of a response matrix."""

    def __init__(self, matrix: ResponseMatrix, m: int):
        if not 0 <= m < matrix.n_models:
            raise IndexError(f"model index {m} out of range 0..{matrix.n_models - 1}")
        self.matrix = matrix
        self.m = m

    def answer(self, question_id: str) -> int:
        return int(self.matrix.bits[self.m, self.matrix.question_index(question_id)])

    def __repr__(self):
        return f"MatrixOracle({self.matrix.model_ids[self.m]!r})"


def matrix_oracle(matrix: ResponseMatrix, m: int) -> MatrixOracle:
    return MatrixOracle(matrix, m)


@dataclass(frozen=True)
class Endpoint:
    host: str
    port: int
    timeout: float = DEFAULT_TIMEOUT
    retries: int = 0  # at most one retry, on transport failures only

    def __post_init__(self):
        if self.retries not in (0, 1):
            raise ValueError("retries must be 0 or 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @classmethod
    def parse(cls, spec: str, timeout: float = DEFAULT_TIMEOUT, retries: int = 0) -> "Endpoint":
        host, sep, port = spec.rpartition(":")
        if not sep or not host or not port.isdigit():
            raise ValueError(f"endpoint must look like HOST:PORT, got {spec!r}")
        return cls(host, int(port), timeout, retries)


class RemoteOracle:
    """Remote model reached over the JSON-lines protocol, one request per question.

    Answers are cached for the lifetime of the oracle, so a repeated question
    never goes back on the wire.
    """

    def __init__(self, endpoint: Endpoint, texts: Mapping[str, str] | None = None):
        self.endpoint = endpoint
        self.texts = dict(texts or {})
        self.requests_sent = 0
        self._cache: dict[str, int] = {}
        self._ids = itertools.count(1)
        self._sock: socket.socket | None = None
        self._reader = None
        self._lock = threading.Lock()

    def _connect(self):
        self._sock = socket.create_connection((self.endpoint.host, self.endpoint.port),
                                              timeout=self.endpoint.timeout)
        self._sock.settimeout(self.endpoint.timeout)
        self._reader = self._sock.makefile("rb")

    def close(self):
        if self._reader is not None:
            self._reader.close()
        if self._sock is not None:
            self._sock.close()
        self._sock = self._reader = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _roundtrip(self, question_id: str) -> int:
        if self._sock is None:
            self._connect()
        req_id = next(self._ids)
        request = {"id": req_id, "question_id": question_id}
        if question_id in self.texts:
            request["text"] = self.texts[question_id]
        self._sock.sendall((json.dumps(request) + "\n").encode("utf-8"))
        self.requests_sent += 1
        line = self._reader.readline()
        if not line:
            raise ConnectionError("endpoint closed the connection")
        try:
            response = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise OracleError(f"malformed response: {exc}") from None
        if not isinstance(response, dict) or response.get("id") != req_id:
            raise OracleError(f"response does not match request id {req_id}")
        answer = response.get("answer")
        if isinstance(answer, bool) or answer not in (0, 1):
            raise OracleError(f"non-binary answer {answer!r} to {question_id!r}")
        return int(answer)

    def answer(self, question_id: str) -> int:
        with self._lock:
            if question_id in self._cache:
                return self._cache[question_id]
            attempts = 1 + self.endpoint.retries
            for attempt in range(attempts):
                try:
                    value = self._roundtrip(question_id)
                    break
                except (OSError, ConnectionError) as exc:
                    self.close()
                    if attempt + 1 == attempts:
                        kind = "timeout" if isinstance(exc, (socket.timeout, TimeoutError)) else "transport"
                        raise OracleError(f"{kind} error on {question_id!r}: {exc}") from None
                except OracleError:
                    self.close()
                    raise
            self._cache[question_id] = value
            return value


def remote_oracle(endpoint: Endpoint, texts: Mapping[str, str] | None = None) -> RemoteOracle:
    return RemoteOracle(endpoint, texts)


@dataclass
class Verdict:
    decision: str
    queries_used: int
    budget: int
    first_disagreement: str | None = None
    transcript: list[tuple[str, int, int]] = field(default_factory=list)
    error: str | None = None

    @property
    def advisory_confidence(self) -> float | None:
        """1 - 2**-k after k agreements; only meaningful for ideally balanced questions."""
        if self.decision != ACCEPT:
            return None
        return 1.0 - 0.5**self.queries_used

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "queries_used": self.queries_used,
            "budget": self.budget,
            "first_disagreement": self.first_disagreement,
            "advisory_confidence": self.advisory_confidence,
            "error": self.error,
            "transcript": [{"question_id": q, "answer_a": a, "answer_b": b} for q, a, b in self.transcript],
        }


def ordered_question_ids(matrix: ResponseMatrix, ordered: OrderedQuestionList | Sequence[int]) -> list[str]:
    return [matrix.question_ids[int(q)] for q in ordered]


def sequential_test(a: ModelOracle, b: ModelOracle, questions: Sequence[str],
                    budget: int = DEFAULT_BUDGET) -> Verdict:
    """Ask both oracles each question in turn, stopping at the first disagreement."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not questions:
        raise ValueError("no questions to ask")
    verdict = Verdict(ACCEPT, 0, budget)
    with ThreadPoolExecutor(max_workers=2) as pool:
        for qid in list(questions)[:budget]:
            fa = pool.submit(a.answer, qid)
            fb = pool.submit(b.answer, qid)
            try:
                ans_a, ans_b = int(fa.result()), int(fb.result())
            except Exception as exc:  # noqa: BLE001 - any oracle failure aborts
                verdict.decision = ABORTED
                verdict.error = f"{type(exc).__name__}: {exc}"
                return verdict
            verdict.transcript.append((qid, ans_a, ans_b))
            verdict.queries_used += 1
            if ans_a != ans_b:
                verdict.decision = REJECT
                verdict.first_disagreement = qid
                return verdict
    return verdict


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server = self.server
        for raw in self.rfile:
            try:
                request = json.loads(raw.decode("utf-8"))
                qid = request["question_id"]
                req_id = request["id"]
            except (ValueError, KeyError, TypeError):
                return
            with server.lock:
                server.requests.append(qid)
            if server.delay:
                threading.Event().wait(server.delay)
            reply = {"id": req_id, "answer": server.respond(qid)}
            try:
                self.wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
                self.wfile.flush()
            except OSError:
                return


class OracleServer(socketserver.ThreadingTCPServer):
    """Serve a fixed answer function over the JSON-lines protocol.

    ``respond`` maps a question id to the value sent back as ``answer``.
    Meant for local testing and for exposing a stored row as an endpoint.
    """

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, respond: Callable[[str], object] | Mapping[str, int],
                 host: str = "127.0.0.1", port: int = 0, delay: float = 0.0):
        super().__init__((host, port), _Handler)
        self.respond = respond.__getitem__ if isinstance(respond, Mapping) else respond
        self.delay = delay
        self.requests: list[str] = []
        self.lock = threading.Lock()
        self._thread: threading.Thread | None = None

    @classmethod
    def for_row(cls, matrix: ResponseMatrix, m: int, **kwargs) -> "OracleServer":
        row = {q: int(v) for q, v in zip(matrix.question_ids, matrix.bits[m])}
        return cls(row, **kwargs)

    @property
    def endpoint(self) -> Endpoint:
        host, port = self.server_address[:2]
        return Endpoint(host, port)

    def __enter__(self):
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.shutdown()
        self.server_close()
