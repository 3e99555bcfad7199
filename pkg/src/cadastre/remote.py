"""HTTP adapter for a remote text-to-image service.

POSTs ``{prompt, size: "512x512", n: 1}`` with a bearer token read from the
environment variable named in the backend descriptor; the response carries
the image either base64-inline or behind a URL.
"""

from __future__ import annotations

import base64
import os

import httpx

from .generation import (
    Backend,
    BackendDescriptor,
    ContentPolicyError,
    GenerationError,
    GenerationRequest,
    TransportError,
)
from .schema import ValidationError


class RemoteApiBackend(Backend):
    def __init__(self, descriptor: BackendDescriptor,
                 client: httpx.Client | None = None):
        if descriptor.kind != "remote_api":
            raise ValidationError("RemoteApiBackend needs a remote_api descriptor")
        super().__init__(descriptor)
        self._client = client or httpx.Client(timeout=120.0)

    def _token(self) -> str:
        env = self.descriptor.credential_env or ""
        token = os.environ.get(env, "")
        if not token:
            raise GenerationError(
                f"remote credential missing: environment variable {env!r} is unset"
            )
        return token

    def render(self, req: GenerationRequest) -> bytes:
        body = {"prompt": req.prompt_text, "size": f"{req.size}x{req.size}", "n": 1}
        headers = {"Authorization": f"Bearer {self._token()}"}
        try:
            resp = self._client.post(self.descriptor.endpoint, json=body,
                                     headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"image request failed: {exc}") from exc
        if resp.status_code == 400 and "content_policy" in resp.text:
            raise ContentPolicyError(
                f"prompt rejected by content policy: {req.prompt_text!r}"
            )
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"backend returned {resp.status_code}")
        if resp.status_code != 200:
            raise GenerationError(
                f"backend returned {resp.status_code}: {resp.text[:200]}"
            )
        try:
            data = resp.json()["data"][0]
        except (KeyError, IndexError, ValueError) as exc:
            raise GenerationError(f"unexpected response shape: {exc}") from None
        if "b64_json" in data:
            try:
                return base64.b64decode(data["b64_json"])
            except Exception as exc:
                raise GenerationError(f"bad base64 payload: {exc}") from None
        if "url" in data:
            return self._fetch(data["url"])
        raise GenerationError("response carries neither b64_json nor url")

    def _fetch(self, url: str) -> bytes:
        try:
            resp = self._client.get(url)
        except httpx.HTTPError as exc:
            raise TransportError(f"image download failed: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"image download returned {resp.status_code}")
        return resp.content
