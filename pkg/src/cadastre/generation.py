"""Image synthesis behind a pluggable backend, with a content-addressed cache.

``generate`` renders one 512x512 image for a prompt and files it as a pending
synthetic record; identical (prompt text, seed, backend kind) requests hit
the cache instead of the backend. ``generate_batch`` fans requests out with
bounded concurrency and keeps partial successes.

The local stub backend draws procedural textures and deliberately emits an
off-label texture at a configurable rate per label, so the review loop can
be exercised against realistic irrelevance statistics.
"""

from __future__ import annotations

import hashlib
import io
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from . import textures
from .prompts import PromptPool, record_generation, sample_prompt
from .schema import CadastreError, ImageRecord, ValidationError
from .store import ImageStore

IMAGE_SIZE = 512


class GenerationError(CadastreError):
    pass


class TransportError(GenerationError):
    """Retryable backend failure."""


class ContentPolicyError(GenerationError):
    """Terminal rejection by the remote service; retrying wastes quota."""


@dataclass(frozen=True)
class GenerationRequest:
    prompt_id: str
    prompt_text: str
    target_label: str
    seed: int
    size: int = IMAGE_SIZE

    def __post_init__(self) -> None:
        if self.size != IMAGE_SIZE:
            raise ValidationError(f"generation size is fixed at {IMAGE_SIZE}")
        if not self.prompt_text:
            raise ValidationError("empty prompt text")


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    initial_backoff: float = 1.0
    multiplier: float = 2.0

    def delays(self) -> list[float]:
        return [self.initial_backoff * self.multiplier**i
                for i in range(self.max_attempts - 1)]


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # "remote_api" | "local_stub"
    endpoint: Optional[str] = None
    credential_env: Optional[str] = None
    max_in_flight: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self) -> None:
        if self.kind not in ("remote_api", "local_stub"):
            raise ValidationError(f"unknown backend kind {self.kind!r}")
        if self.max_in_flight < 1:
            raise ValidationError("max_in_flight must be >= 1")
        if self.kind == "remote_api" and not (self.endpoint and self.credential_env):
            raise ValidationError("remote_api backend requires endpoint and credential")


class Backend:
    """Renders PNG bytes for a request; subclasses implement ``render``."""

    def __init__(self, descriptor: BackendDescriptor):
        self.descriptor = descriptor
        self.calls = 0
        self._calls_lock = threading.Lock()
        self._gate = threading.BoundedSemaphore(descriptor.max_in_flight)

    def render(self, req: GenerationRequest) -> bytes:
        raise NotImplementedError

    def render_gated(self, req: GenerationRequest) -> bytes:
        """Apply the in-flight gate and the retry policy around ``render``.

        ``calls`` counts logical backend calls (one per request reaching the
        backend); transparent retries do not inflate it.
        """
        with self._gate:
            with self._calls_lock:
                self.calls += 1
            delays = self.descriptor.retry.delays()
            attempt = 0
            while True:
                try:
                    return self.render(req)
                except TransportError:
                    if attempt >= len(delays):
                        raise
                    time.sleep(delays[attempt])
                    attempt += 1


@dataclass(frozen=True)
class IrrelevanceProfile:
    """Probability that the stub renders a texture other than the target.

    ``overall`` is the rate averaged over ``labels`` under an equal label
    mix; explicit per-label ``overrides`` are honored and the remaining
    labels share a base rate solved to keep that average.
    """

    overall: float = 0.24
    overrides: tuple[tuple[str, float], ...] = (("stucco", 0.45),)
    labels: tuple[str, ...] = textures.TEXTURE_LABELS

    def rate_for(self, label: str) -> float:
        overrides = dict(self.overrides)
        if label in overrides:
            return overrides[label]
        plain = [l for l in self.labels if l not in overrides]
        if not plain:
            return self.overall
        base = (self.overall * len(self.labels) - sum(overrides.values())) / len(plain)
        if not 0.0 <= base <= 1.0:
            raise ValidationError(
                f"irrelevance profile unsatisfiable: base rate {base:.3f}"
            )
        return base

    @classmethod
    def none(cls) -> "IrrelevanceProfile":
        return cls(overall=0.0, overrides=(), labels=textures.TEXTURE_LABELS)


class StubBackend(Backend):
    """Deterministic procedural texture generator standing in for the API."""

    def __init__(self, descriptor: Optional[BackendDescriptor] = None,
                 irrelevance: Optional[IrrelevanceProfile] = None):
        super().__init__(descriptor or BackendDescriptor(kind="local_stub"))
        self.irrelevance = irrelevance or IrrelevanceProfile()

    def _rng_for(self, req: GenerationRequest) -> np.random.Generator:
        digest = hashlib.sha256(
            f"stub\n{req.prompt_text}\n{req.seed}".encode()
        ).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "big"))

    def rendered_label(self, req: GenerationRequest) -> str:
        """Which texture this request actually draws (the review oracle)."""
        rng = self._rng_for(req)
        rate = self.irrelevance.rate_for(req.target_label)
        if rng.random() < rate:
            others = [l for l in self.irrelevance.labels if l != req.target_label]
            return others[rng.integers(len(others))]
        return req.target_label

    def render(self, req: GenerationRequest) -> bytes:
        rng = self._rng_for(req)
        rate = self.irrelevance.rate_for(req.target_label)
        label = req.target_label
        if rng.random() < rate:
            others = [l for l in self.irrelevance.labels if l != req.target_label]
            label = others[rng.integers(len(others))]
        img = textures.texture_image(label, req.size, req.size, rng)
        buf = io.BytesIO()
        img.save(buf, format="PNG", compress_level=3)
        return buf.getvalue()


def content_address(backend_kind: str, prompt_text: str, seed: int) -> str:
    digest = hashlib.sha256(
        f"{backend_kind}\n{prompt_text}\n{seed}".encode()
    ).hexdigest()
    return digest


class _InFlightKeys:
    """Insert-if-absent coordination so one key renders at most once."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._events: dict[str, threading.Event] = {}

    def claim(self, key: str) -> Optional[threading.Event]:
        """None if the caller owns the key; else an event to wait on."""
        with self._lock:
            event = self._events.get(key)
            if event is None:
                self._events[key] = threading.Event()
                return None
            return event

    def release(self, key: str) -> None:
        with self._lock:
            event = self._events.pop(key, None)
        if event is not None:
            event.set()


_inflight = _InFlightKeys()


def generate(req: GenerationRequest, backend: Backend, store: ImageStore,
             pool: Optional[PromptPool] = None) -> ImageRecord:
    """Render one image (or hit the cache) and file a pending record."""
    digest = content_address(backend.descriptor.kind, req.prompt_text, req.seed)
    relpath = f"images/{digest}.png"
    claim_key = f"{store.root}::{relpath}"
    existing = store.by_relpath(relpath)
    if existing is not None:
        return existing
    waiter = _inflight.claim(claim_key)
    if waiter is not None:
        waiter.wait()
        existing = store.by_relpath(relpath)
        if existing is None:
            raise GenerationError(f"concurrent generation failed for {relpath}")
        return existing
    try:
        existing = store.by_relpath(relpath)
        if existing is not None:
            return existing
        payload = _checked_payload(backend, req)
        return _file_record(digest, req, payload, store, pool)
    finally:
        _inflight.release(claim_key)


def _checked_payload(backend: Backend, req: GenerationRequest) -> bytes:
    payload = backend.render_gated(req)
    width, height = _decode_size(payload)
    if (width, height) != (req.size, req.size):
        raise GenerationError(
            f"malformed image payload: expected {req.size}x{req.size}, "
            f"got {width}x{height}"
        )
    return payload


def _file_record(digest: str, req: GenerationRequest, payload: bytes,
                 store: ImageStore, pool: Optional[PromptPool]) -> ImageRecord:
    city = None
    if pool is not None:
        city = pool.get(req.prompt_id).slots_used.get("city")
    rec = ImageRecord(
        id=f"syn-{digest[:16]}", path=f"images/{digest}.png",
        width=req.size, height=req.size, label=req.target_label,
        provenance="synthetic", review_status="pending",
        prompt_id=req.prompt_id, city_keyword=city,
    )
    store.add(rec, payload)
    if pool is not None:
        record_generation(pool, req.prompt_id)
    return rec


def _decode_size(payload: bytes) -> tuple[int, int]:
    try:
        with Image.open(io.BytesIO(payload)) as img:
            return img.size
    except Exception as exc:
        raise GenerationError(f"malformed image payload: {exc}") from None


@dataclass
class BatchFailure:
    request: GenerationRequest
    error: str


@dataclass
class BatchResult:
    completed: list[tuple[GenerationRequest, ImageRecord]]
    failures: list[BatchFailure]

    @property
    def records(self) -> list[ImageRecord]:
        return [rec for _, rec in self.completed]

    @property
    def ok(self) -> bool:
        return not self.failures


def generate_batch(pool: PromptPool, labels: Sequence[str], n_per_label: int,
                   backend: Backend, store: ImageStore, seed: int) -> BatchResult:
    """Generate ``n_per_label`` pending records per label.

    Prompts are sampled sequentially (the pool RNG stays deterministic),
    then rendered concurrently up to the backend's in-flight limit.
    Failures are collected per request; successes are kept. Records are
    filed in request order regardless of render timing, so the store's
    row order (and anything seeded off it downstream) is reproducible.
    """
    if n_per_label < 1:
        raise ValidationError("n_per_label must be >= 1")
    if len(pool) == 0:
        raise ValidationError("empty prompt pool")
    seed_rng = random.Random(seed)
    requests: list[GenerationRequest] = []
    for label in labels:
        for _ in range(n_per_label):
            prompt = sample_prompt(pool, material=label)
            requests.append(GenerationRequest(
                prompt_id=prompt.id, prompt_text=prompt.text,
                target_label=label, seed=seed_rng.getrandbits(32),
            ))

    relpaths = [
        f"images/{content_address(backend.descriptor.kind, r.prompt_text, r.seed)}.png"
        for r in requests
    ]
    payloads: list[Optional[bytes]] = [None] * len(requests)
    errors: list[Optional[BatchFailure]] = [None] * len(requests)

    def _render(index: int, req: GenerationRequest) -> None:
        # Each slot is written by exactly one worker; no lock needed.
        if store.by_relpath(relpaths[index]) is not None:
            return
        try:
            payloads[index] = _checked_payload(backend, req)
        except CadastreError as exc:
            errors[index] = BatchFailure(request=req, error=str(exc))

    workers = backend.descriptor.max_in_flight
    with ThreadPoolExecutor(max_workers=workers) as executor:
        for i, req in enumerate(requests):
            executor.submit(_render, i, req)

    completed: list[tuple[GenerationRequest, ImageRecord]] = []
    failures: list[BatchFailure] = []
    for i, req in enumerate(requests):
        if errors[i] is not None:
            failures.append(errors[i])
            continue
        existing = store.by_relpath(relpaths[i])
        if existing is not None:
            completed.append((req, existing))
            continue
        payload = payloads[i]
        if payload is None:
            failures.append(BatchFailure(
                request=req,
                error=f"cache entry vanished for {relpaths[i]}",
            ))
            continue
        digest = content_address(backend.descriptor.kind, req.prompt_text, req.seed)
        completed.append((req, _file_record(digest, req, payload, store, pool)))
    failures.sort(key=lambda f: f.request.prompt_id)
    return BatchResult(completed=completed, failures=failures)
