"""Image embedding clients: deterministic reference embedder and sidecar.

The wire protocol is newline-delimited JSON over child-process stdio or
TCP.  Handshake: ``{"op": "hello"}`` -> ``{"dim": d, "model": name}``.
Embed: ``{"id": n, "op": "embed", "png_b64": data}`` ->
``{"id": n, "embedding": [...]}`` or ``{"id": n, "error": msg}``.
Requests are multiplexed by id; responses may arrive out of order.

The reference embedder is NOT neural: grayscale 16x16 box downsample via
integer arithmetic, mean-subtract, L2-normalize, dim 256.  It exists so
the whole pipeline runs and tests deterministically with no sidecar; its
scores are never comparable to published encoder scores.
"""

from __future__ import annotations

import base64
import json
import os
import shlex
import socket
import subprocess
import threading
from dataclasses import dataclass

import numpy as np

from .errors import ProtocolError, ScorerCrashed, ScorerTimeout
from .images import RasterImage
from .metrics import cosine

REFERENCE_DIM = 256
REFERENCE_GRID = 16
DEFAULT_TIMEOUT_S = 30.0
DEFAULT_INFLIGHT = 32


class ReferenceEmbedder:
    """Deterministic non-neural embedder; identical across platforms."""

    dim = REFERENCE_DIM
    model_name = "reference-gray16-v1"

    def embed(self, image: RasterImage) -> np.ndarray:
        gray = image.to_gray_array().astype(np.uint64)
        h, w = gray.shape
        g = REFERENCE_GRID
        # integer box sums over the 16x16 partition; exact on any size
        cells = np.zeros((g, g), dtype=np.float64)
        row_edges = [i * h // g for i in range(g + 1)]
        col_edges = [j * w // g for j in range(g + 1)]
        for i in range(g):
            r0, r1 = row_edges[i], max(row_edges[i + 1], row_edges[i] + 1)
            r1 = min(r1, h) if h else r1
            for j in range(g):
                c0, c1 = col_edges[j], max(col_edges[j + 1], col_edges[j] + 1)
                c1 = min(c1, w) if w else c1
                block = gray[r0:r1, c0:c1]
                if block.size == 0:
                    cells[i, j] = 0.0
                else:
                    cells[i, j] = float(int(block.sum())) / block.size
        vec = cells.reshape(-1)
        vec = vec - vec.mean()
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            # constant image: fall back to a fixed unit direction so the
            # vector stays usable for cosine
            vec = np.zeros(self.dim)
            vec[0] = 1.0
            return vec
        return vec / norm

    def pair_score(self, a: RasterImage, b: RasterImage) -> float:
        return cosine(self.embed(a), self.embed(b))


@dataclass
class _Pending:
    event: threading.Event
    response: dict | None = None
    failed: str | None = None


class SidecarEmbedder:
    """Client for an external embedding service speaking the NDJSON protocol.

    One automatic restart is attempted after a crash; only in-flight
    requests fail, later calls go to the fresh process.
    """

    def __init__(
        self,
        command: list[str] | str | None = None,
        address: str | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        max_inflight: int = DEFAULT_INFLIGHT,
    ):
        if command is None and address is None:
            command = os.environ.get("SCORER_CMD") or None
            address = os.environ.get("SCORER_ADDR") or None
        if command is None and address is None:
            raise ProtocolError("no sidecar configured (SCORER_CMD or SCORER_ADDR)")
        self._command = shlex.split(command) if isinstance(command, str) else command
        self._address = address
        self.timeout_s = timeout_s
        self._window = threading.BoundedSemaphore(max_inflight)
        self._lock = threading.Lock()
        self._pending: dict[int, _Pending] = {}
        self._next_id = 0
        self._proc: subprocess.Popen | None = None
        self._sock_file = None
        self._writer = None
        self._restarted = False
        self.dim = 0
        self.model_name = ""
        self._start()

    # -- connection management

    def _start(self) -> None:
        if self._command:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
            self._reader_stream = self._proc.stdout
            self._writer = self._proc.stdin
        else:
            host, _, port = self._address.rpartition(":")
            sock = socket.create_connection((host, int(port)), timeout=self.timeout_s)
            self._sock_file = sock.makefile("rwb")
            self._reader_stream = self._sock_file
            self._writer = self._sock_file
        self._reader_thread = threading.Thread(target=self._read_loop, daemon=True)
        self._reader_thread.start()
        hello = self._call({"op": "hello"})
        dim = hello.get("dim")
        if not isinstance(dim, int) or dim <= 0:
            raise ProtocolError(f"bad handshake: {hello}")
        if self.dim and dim != self.dim:
            raise ProtocolError(f"dim changed across restart: {self.dim} -> {dim}")
        self.dim = dim
        self.model_name = str(hello.get("model", "unknown"))

    def _read_loop(self) -> None:
        stream = self._reader_stream
        try:
            for raw in stream:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    continue  # garbage line: protocol noise, skip
                key = msg.get("id", -1)
                with self._lock:
                    waiter = self._pending.pop(key, None)
                if waiter:
                    waiter.response = msg
                    waiter.event.set()
        except (OSError, ValueError):
            pass
        # EOF or broken pipe: fail everything in flight
        with self._lock:
            pending = list(self._pending.values())
            self._pending.clear()
        for waiter in pending:
            waiter.failed = "sidecar stream closed"
            waiter.event.set()

    def _alive(self) -> bool:
        if self._proc is not None:
            return self._proc.poll() is None
        return self._sock_file is not None

    def _restart_once(self) -> None:
        if self._restarted:
            raise ScorerCrashed("sidecar crashed again after restart")
        self._restarted = True
        self.close()
        self._pending = {}
        self._start()

    def close(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None
        if self._sock_file is not None:
            self._sock_file.close()
            self._sock_file = None

    # -- protocol

    def _call(self, payload: dict) -> dict:
        with self._lock:
            payload = dict(payload)
            payload["id"] = self._next_id
            self._next_id += 1
            waiter = _Pending(event=threading.Event())
            self._pending[payload["id"]] = waiter
            try:
                self._writer.write((json.dumps(payload) + "\n").encode("utf-8"))
                self._writer.flush()
            except (OSError, ValueError) as exc:
                self._pending.pop(payload["id"], None)
                raise ScorerCrashed(f"sidecar write failed: {exc}")
        if not waiter.event.wait(self.timeout_s):
            with self._lock:
                self._pending.pop(payload["id"], None)
            raise ScorerTimeout(f"no response within {self.timeout_s}s")
        if waiter.failed:
            raise ScorerCrashed(waiter.failed)
        return waiter.response

    def embed(self, image: RasterImage) -> np.ndarray:
        png_b64 = base64.b64encode(image.to_png_bytes()).decode("ascii")
        request = {"op": "embed", "png_b64": png_b64}
        with self._window:
            try:
                response = self._call(request)
            except ScorerCrashed:
                self._restart_once()
                response = self._call(request)
        if "error" in response:
            raise ProtocolError(f"sidecar error: {response['error']}")
        embedding = response.get("embedding")
        if not isinstance(embedding, list) or len(embedding) != self.dim:
            raise ProtocolError(
                f"embedding length {len(embedding) if embedding else None} != dim {self.dim}"
            )
        vec = np.asarray(embedding, dtype=np.float64)
        if not np.isfinite(vec).all():
            raise ProtocolError("non-finite embedding")
        return vec

    def pair_score(self, a: RasterImage, b: RasterImage) -> float:
        return cosine(self.embed(a), self.embed(b))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_embedder(
    command: str | None = None,
    address: str | None = None,
    timeout_s: float | None = None,
    use_reference: bool = False,
):
    """Pick the sidecar when configured, the reference embedder otherwise."""
    if use_reference:
        return ReferenceEmbedder()
    command = command or os.environ.get("SCORER_CMD") or None
    address = address or os.environ.get("SCORER_ADDR") or None
    if command is None and address is None:
        return ReferenceEmbedder()
    if timeout_s is None:
        timeout_s = float(os.environ.get("SCORER_TIMEOUT_S", DEFAULT_TIMEOUT_S))
    return SidecarEmbedder(command=command, address=address, timeout_s=timeout_s)
