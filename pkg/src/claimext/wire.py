"""Line-delimited JSON clients for external scorers and verifiers.

One request object per line on the transport, one response line back, in
order. Endpoints starting with http:// or https:// are called with a POST
whose body is the request line; anything else is treated as a command to
spawn, speaking the protocol over its standard streams.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import urllib.error
import urllib.request

from .errors import ProtocolError, UnreachableError


class _StdioTransport:
    def __init__(self, command: str):
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise UnreachableError(f"cannot start scorer/verifier command {command!r}: {exc}") from None

    def request(self, payload: dict) -> dict:
        if self._proc.poll() is not None:
            raise UnreachableError("external process already exited")
        assert self._proc.stdin and self._proc.stdout
        self._proc.stdin.write(json.dumps(payload) + "\n")
        self._proc.stdin.flush()
        line = self._proc.stdout.readline()
        if not line:
            raise UnreachableError("external process closed its output stream")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable response line: {exc}") from None

    def close(self) -> None:
        if self._proc.poll() is None:
            if self._proc.stdin:
                self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


class _HttpTransport:
    def __init__(self, url: str):
        self._url = url

    def request(self, payload: dict) -> dict:
        req = urllib.request.Request(
            self._url,
            data=(json.dumps(payload) + "\n").encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=30) as resp:
                body = resp.read().decode("utf-8")
        except urllib.error.URLError as exc:
            raise UnreachableError(f"endpoint {self._url} unreachable: {exc}") from None
        try:
            return json.loads(body.splitlines()[0])
        except (IndexError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"unparseable response body: {exc}") from None

    def close(self) -> None:
        pass


def open_transport(endpoint: str):
    if endpoint.startswith(("http://", "https://")):
        return _HttpTransport(endpoint)
    return _StdioTransport(endpoint)


class ScorerClient:
    """Batching client for the scorer protocol.

    Request line:  {"id": str, "texts": [str, ...]}
    Response line: {"id": same, "scores": [float in [0,1], same length]}
    """

    def __init__(self, endpoint: str, batch_size: int = 32):
        if batch_size <= 0:
            raise ProtocolError(f"batch size must be positive, got {batch_size}")
        self._transport = open_transport(endpoint)
        self._batch_size = batch_size
        self._counter = 0

    def score_texts(self, texts: list[str]) -> list[float]:
        scores: list[float] = []
        for lo in range(0, len(texts), self._batch_size):
            batch = texts[lo : lo + self._batch_size]
            request_id = f"batch-{self._counter:06d}"
            self._counter += 1
            try:
                response = self._transport.request({"id": request_id, "texts": batch})
            except ProtocolError as exc:
                raise type(exc)(f"scorer batch {request_id}: {exc}") from None
            scores.extend(self._validate(request_id, batch, response))
        return scores

    @staticmethod
    def _validate(request_id: str, batch: list[str], response: dict) -> list[float]:
        if response.get("id") != request_id:
            raise ProtocolError(
                f"scorer batch {request_id}: response id mismatch ({response.get('id')!r})"
            )
        raw = response.get("scores")
        if not isinstance(raw, list) or len(raw) != len(batch):
            raise ProtocolError(f"scorer batch {request_id}: expected {len(batch)} scores")
        out = []
        for value in raw:
            if not isinstance(value, (int, float)) or not 0.0 <= float(value) <= 1.0:
                raise ProtocolError(f"scorer batch {request_id}: score {value!r} outside [0, 1]")
            out.append(float(value))
        return out

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class VerifierClient:
    """Client for the verifier protocol.

    Request line:  {"id": str, "claim": str, "evidence": str}
    Response line: {"id": same, "label": "SUPPORTS" | "REFUTES" | "NEI"}
    """

    _LABELS = ("SUPPORTS", "REFUTES", "NEI")

    def __init__(self, endpoint: str):
        self._transport = open_transport(endpoint)
        self._counter = 0

    def verify(self, claim: str, evidence: str) -> str:
        request_id = f"check-{self._counter:06d}"
        self._counter += 1
        try:
            response = self._transport.request(
                {"id": request_id, "claim": claim, "evidence": evidence}
            )
        except ProtocolError as exc:
            raise type(exc)(f"verifier request {request_id}: {exc}") from None
        if response.get("id") != request_id:
            raise ProtocolError(f"verifier request {request_id}: response id mismatch")
        label = response.get("label")
        if label not in self._LABELS:
            raise ProtocolError(f"verifier request {request_id}: bad label {label!r}")
        return label

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
