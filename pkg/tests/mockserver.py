"""Instrumented OpenAI-compatible mock server for tests.

Runs a real ThreadingHTTPServer on localhost. Counts calls per path, tracks
peak concurrent requests, and can inject delays, failures and out-of-order
completion.
"""

from __future__ import annotations

import io
import json
import re
import threading
import time
import zlib
from collections import Counter
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
from scipy.io import wavfile


def dominant_hz(samples: np.ndarray, rate: int) -> float:
    samples = np.asarray(samples, dtype=np.float64)
    spec = np.abs(np.fft.rfft(samples))
    return float(np.argmax(spec) * rate / len(samples))


def parse_multipart(body: bytes, content_type: str) -> dict:
    # split on the boundary directly; the email parser is ~40 ms per 1 MB clip
    boundary = re.search(r'boundary="?([^";]+)"?', content_type).group(1).encode()
    parts = {}
    for chunk in body.split(b"--" + boundary)[1:-1]:
        head, _, data = chunk.partition(b"\r\n\r\n")
        name = re.search(rb'name="([^"]*)"', head).group(1).decode()
        parts[name] = data[:-2] if data.endswith(b"\r\n") else data
    return parts


def decode_wav(data: bytes) -> tuple[np.ndarray, int]:
    rate, samples = wavfile.read(io.BytesIO(data))
    return samples.astype(np.float64) / 32768.0, rate


def hash_embedding(token: str, dim: int = 16) -> list[float]:
    rng = np.random.default_rng(zlib.crc32(token.encode("utf-8")))
    return rng.standard_normal(dim).tolist()


class MockState:
    def __init__(self):
        self.lock = threading.Lock()
        self.calls: Counter[str] = Counter()
        self.in_flight = 0
        self.peak = 0
        self.intervals: list[tuple[float, float]] = []
        self.fail_next: Counter[str] = Counter()  # path -> remaining 503s
        self.fail_always: set[str] = set()
        self.asr_fn = lambda samples, rate: "transcript"
        self.mt_fn = lambda messages: "translation"
        self.grade_fn = None
        self.delay_fn = lambda path, payload: 0.0
        self.usage_tokens = None  # callable(text) -> int, or None to omit usage
        self.requests: list[tuple[str, object]] = []


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    disable_nagle_algorithm = True
    wbufsize = 1 << 16

    def log_message(self, *args):
        pass

    def _send(self, status: int, doc: dict):
        body = json.dumps(doc, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        st: MockState = self.server.state
        path = self.path.strip("/").split("/", 1)[-1] if self.path.startswith("/v1/") else self.path.strip("/")
        raw = self.rfile.read(int(self.headers.get("Content-Length", 0)))
        start = time.perf_counter()
        with st.lock:
            st.calls[path] += 1
            st.in_flight += 1
            st.peak = max(st.peak, st.in_flight)
            failing = path in st.fail_always or st.fail_next[path] > 0
            if st.fail_next[path] > 0:
                st.fail_next[path] -= 1
        try:
            if path == "audio/transcriptions":
                parts = parse_multipart(raw, self.headers["Content-Type"])
                samples, rate = decode_wav(parts["file"])
                payload = {"samples": samples, "rate": rate,
                           "model": parts.get("model", b"").decode()}
            else:
                payload = json.loads(raw.decode("utf-8"))
            with st.lock:
                st.requests.append((path, payload))
            delay = st.delay_fn(path, payload)
            if delay:
                time.sleep(delay)
            if failing:
                self._send(503, {"error": "injected failure"})
                return
            if path == "audio/transcriptions":
                self._send(200, {"text": st.asr_fn(payload["samples"], payload["rate"])})
            elif path == "chat/completions":
                fn = st.grade_fn if st.grade_fn and _is_grading(payload) else st.mt_fn
                text = fn(payload["messages"])
                doc = {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}
                if st.usage_tokens is not None:
                    doc["usage"] = {"completion_tokens": st.usage_tokens(text)}
                self._send(200, doc)
            elif path == "embeddings":
                inputs = payload["input"]
                self._send(200, {"data": [{"index": i, "embedding": hash_embedding(t)}
                                          for i, t in enumerate(inputs)]})
            else:
                self._send(404, {"error": f"no route {path}"})
        finally:
            with st.lock:
                st.in_flight -= 1
                st.intervals.append((start, time.perf_counter()))


def _is_grading(payload) -> bool:
    return any("Reference" in m.get("content", "") for m in payload.get("messages", []))


class MockServer:
    """Context manager; ``url`` is the base URL to put in an EndpointConfig."""

    def __init__(self):
        self.state = MockState()
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self._httpd.daemon_threads = True
        self._httpd.state = self.state
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}/v1"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._httpd.shutdown()
        self._httpd.server_close()


def source_of(messages) -> str:
    """The source sentence in a rendered translation prompt."""
    return messages[-1]["content"].rsplit("\n\n", 1)[-1]
