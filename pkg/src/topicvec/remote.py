"""Client for OpenAI-style embedding endpoints: batching, retries, ordering."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import requests

from .errors import RemoteProviderError

_TRANSIENT_STATUS = {429}


@dataclass(frozen=True)
class RemoteEmbeddingConfig:
    endpoint_url: str
    model_name: str
    api_key_env_var: str = "EMBEDDINGS_API_KEY"
    batch_size: int = 64
    timeout: float = 30.0
    max_attempts: int = 3
    backoff_base: float = 0.5

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


def _is_transient(status: int) -> bool:
    return status in _TRANSIENT_STATUS or status >= 500


def _parse_batch(payload: object, expected: int) -> list[np.ndarray]:
    if not isinstance(payload, dict) or not isinstance(payload.get("data"), list):
        raise RemoteProviderError("response is missing the 'data' list")
    items = payload["data"]
    if len(items) != expected:
        raise RemoteProviderError(
            f"response count mismatch: requested {expected} embeddings, got {len(items)}"
        )
    if all(isinstance(item, dict) and isinstance(item.get("index"), int) for item in items):
        items = sorted(items, key=lambda item: item["index"])
    out: list[np.ndarray] = []
    for pos, item in enumerate(items):
        if not isinstance(item, dict) or not isinstance(item.get("embedding"), list):
            raise RemoteProviderError(f"response item {pos} is missing 'embedding'")
        values = item["embedding"]
        if not values or not all(
            isinstance(x, (int, float)) and math.isfinite(x) for x in values
        ):
            raise RemoteProviderError(f"response item {pos} has a non-finite or empty embedding")
        out.append(np.asarray(values, dtype=np.float32))
    return out


def fetch_remote_embeddings(
    cfg: RemoteEmbeddingConfig, texts: Sequence[str]
) -> list[np.ndarray]:
    """Embed ``texts`` through the configured endpoint, order preserved.

    Requests go out in batches of ``cfg.batch_size`` as
    ``POST {"model": ..., "input": [...]}`` with a bearer token taken from
    ``cfg.api_key_env_var``. Connection errors, timeouts, HTTP 429 and 5xx
    are retried with exponential backoff up to ``cfg.max_attempts`` tries;
    anything else fails immediately.
    """
    if not texts:
        return []
    api_key = os.environ.get(cfg.api_key_env_var)
    if not api_key:
        raise RemoteProviderError(
            f"API key environment variable {cfg.api_key_env_var!r} is not set"
        )
    headers = {"Authorization": f"Bearer {api_key}"}
    results: list[np.ndarray] = []
    for start in range(0, len(texts), cfg.batch_size):
        batch = list(texts[start : start + cfg.batch_size])
        payload = {"model": cfg.model_name, "input": batch}
        last_error = ""
        for attempt in range(cfg.max_attempts):
            if attempt:
                time.sleep(cfg.backoff_base * 2 ** (attempt - 1))
            try:
                response = requests.post(
                    cfg.endpoint_url, json=payload, headers=headers, timeout=cfg.timeout
                )
            except requests.RequestException as exc:
                last_error = f"request failed: {exc}"
                continue
            if response.status_code == 200:
                try:
                    body = response.json()
                except ValueError as exc:
                    raise RemoteProviderError(f"response is not JSON: {exc}") from exc
                results.extend(_parse_batch(body, len(batch)))
                break
            if _is_transient(response.status_code):
                last_error = f"HTTP {response.status_code}"
                continue
            raise RemoteProviderError(
                f"endpoint returned HTTP {response.status_code}: {response.text[:200]}"
            )
        else:
            raise RemoteProviderError(
                f"giving up after {cfg.max_attempts} attempts: {last_error}"
            )
    dims = {vec.shape[0] for vec in results}
    if len(dims) > 1:
        raise RemoteProviderError(f"endpoint returned mixed dimensions: {sorted(dims)}")
    return results
