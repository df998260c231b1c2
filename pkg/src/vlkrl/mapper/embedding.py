"""Embedding providers and cosine similarity.

Two built-ins cover the two run modes: a deterministic character-trigram
hash embedding for fully offline tests, and a client for a remote
sentence-embedding endpoint for live runs.
"""

from __future__ import annotations

import zlib
from typing import Protocol

import numpy as np


class EmbeddingError(ValueError):
    """Bad embedding input (dimension mismatch, zero vector, unknown text)."""


class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Standard cosine similarity in [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EmbeddingError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise EmbeddingError("cosine undefined for zero vectors")
    # clamp away float drift so downstream [0, 1] checks on identical
    # vectors never trip
    return float(min(1.0, max(-1.0, np.dot(u, v) / (nu * nv))))


class TrigramEmbeddingProvider:
    """L2-normalized character-trigram hash vectors.

    Deterministic across runs and platforms (crc32-based hashing), so
    every similarity in the test suite is reproducible offline without
    model weights.
    """

    def __init__(self, dimension: int = 256):
        self.dimension = dimension
        self._cache: dict[str, np.ndarray] = {}

    def _trigrams(self, text: str) -> list[str]:
        normalized = " ".join(text.lower().replace(".", " ").replace("_", " ").split())
        padded = f"##{normalized}#"
        return [padded[i:i + 3] for i in range(len(padded) - 2)]

    def embed(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        vector = np.zeros(self.dimension, dtype=np.float64)
        for gram in self._trigrams(text):
            index = zlib.crc32(gram.encode("utf-8")) % self.dimension
            vector[index] += 1.0
        norm = np.linalg.norm(vector)
        if norm > 0:
            vector /= norm
        vector.setflags(write=False)
        self._cache[text] = vector
        return vector


class StubEmbeddingProvider:
    """Fixture provider with declared vectors per text; unknown text errors.

    Lets tests stage semantic relationships ("NYC downtown" near
    "Manhattan") that no surface-form embedding could produce.
    """

    def __init__(self, vectors: dict[str, list[float] | np.ndarray]):
        self._vectors = {
            text: np.asarray(vec, dtype=np.float64) for text, vec in vectors.items()
        }
        dims = {v.shape[0] for v in self._vectors.values()}
        if len(dims) != 1:
            raise EmbeddingError("stub vectors must share one dimension")
        self.dimension = dims.pop()

    def embed(self, text: str) -> np.ndarray:
        try:
            return self._vectors[text]
        except KeyError:
            raise EmbeddingError(f"no stub vector for {text!r}") from None


class RemoteEmbeddingProvider:
    """Client for an embeddings HTTP endpoint (live runs only)."""

    def __init__(self, base_url: str, model: str, api_key: str = "",
                 dimension: int = 384, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.dimension = dimension
        self.timeout = timeout
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        import httpx

        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        response = httpx.post(
            f"{self.base_url}/embeddings",
            json={"model": self.model, "input": text},
            headers=headers,
            timeout=self.timeout,
        )
        response.raise_for_status()
        vector = np.asarray(response.json()["data"][0]["embedding"], dtype=np.float64)
        if vector.shape[0] != self.dimension:
            raise EmbeddingError(
                f"endpoint returned dimension {vector.shape[0]}, expected {self.dimension}"
            )
        self._cache[text] = vector
        return vector
