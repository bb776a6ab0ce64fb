"""Overpass API client: query building, fetching, disk cache.

Queries request everything intersecting the boundary's bounding box (the
engine clips to the exact boundary later), padded by the largest configured
buffer radius so obstacles just outside the boundary whose buffer intrudes
are included. Responses are cached on disk keyed by a digest of
(query text, endpoint, schema version); fetches for the same key are
coalesced to a single in-flight request.
"""

from __future__ import annotations

import hashlib
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from . import geometry
from .classify import default_table

# Bumped whenever the query template or parser expectations change;
# invalidates cache entries from older schema generations.
SCHEMA_VERSION = 1

DEFAULT_ENDPOINT_ENV = "WALKCAP_OVERPASS_ENDPOINT"
DEFAULT_ENDPOINT = "https://overpass-api.de/api/interpreter"
DEFAULT_TTL_S = 24 * 3600
DEFAULT_TIMEOUT_S = 180

_RETRY_STATUSES = (429, 504)
_BACKOFF_S = (1.0, 2.0, 4.0)

_QUERY_TEMPLATE = """[out:json][timeout:{timeout}];
(
  node({bbox});
  way({bbox});
  relation({bbox});
);
(._;>;);
out body;
"""


class OverpassError(RuntimeError):
    """Fetch failed: bad query, exhausted retries, or unreachable endpoint."""


@dataclass(frozen=True)
class OverpassQuery:
    text: str
    bbox: tuple[float, float, float, float]  # south, west, north, east


def default_endpoint() -> str:
    return os.environ.get(DEFAULT_ENDPOINT_ENV, DEFAULT_ENDPOINT)


def build_query(boundary, pad_m: float | None = None,
                timeout_s: int = DEFAULT_TIMEOUT_S) -> OverpassQuery:
    """Deterministic bbox query for a boundary, padded by pad_m meters.

    pad_m defaults to the largest buffer radius in the classification table.
    """
    boundary = geometry.validate_boundary(boundary)
    west, south, east, north = boundary.bounds
    if west >= east or south >= north:
        raise geometry.GeometryError("degenerate boundary bbox")
    if east - west > 180:
        raise geometry.GeometryError(
            "boundary appears to cross the antimeridian, which is not supported")
    if pad_m is None:
        pad_m = default_table().max_buffer_radius_m()
    frame = geometry.make_local_frame(boundary)
    pad_lat = pad_m / frame.meters_per_deg_lat
    pad_lon = pad_m / frame.meters_per_deg_lon
    south, north = south - pad_lat, north + pad_lat
    west, east = west - pad_lon, east + pad_lon
    bbox = (south, west, north, east)
    text = _QUERY_TEMPLATE.format(
        timeout=timeout_s,
        bbox=",".join(f"{v:.7f}" for v in bbox),
    )
    return OverpassQuery(text=text, bbox=bbox)


def cache_key(query: OverpassQuery, endpoint: str) -> str:
    digest = hashlib.sha256()
    digest.update(query.text.encode())
    digest.update(b"\x00")
    digest.update(endpoint.encode())
    digest.update(b"\x00")
    digest.update(str(SCHEMA_VERSION).encode())
    return digest.hexdigest()


class DiskCache:
    """File-per-entry response cache with mtime-based expiry."""

    def __init__(self, directory: str | Path, ttl_s: float = DEFAULT_TTL_S):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.ttl_s = ttl_s
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.osm.json"

    def get(self, key: str) -> bytes | None:
        path = self._path(key)
        with self._lock:
            try:
                if time.time() - path.stat().st_mtime > self.ttl_s:
                    return None
                return path.read_bytes()
            except FileNotFoundError:
                return None

    def put(self, key: str, body: bytes) -> None:
        path = self._path(key)
        with self._lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(body)
            tmp.replace(path)


class OverpassClient:
    """Fetches Overpass responses with retry, caching, and coalescing."""

    def __init__(self, endpoint: str | None = None, cache: DiskCache | None = None,
                 session=None, sleep=time.sleep):
        self.endpoint = endpoint or default_endpoint()
        self.cache = cache
        self.session = session or requests.Session()
        self.sleep = sleep
        self._inflight: dict[str, threading.Lock] = {}
        self._inflight_guard = threading.Lock()

    def _key_lock(self, key: str) -> threading.Lock:
        with self._inflight_guard:
            return self._inflight.setdefault(key, threading.Lock())

    def fetch(self, query: OverpassQuery) -> bytes:
        """Response body for a query; cache first, then network with retry.

        Holding the per-key lock across the network call means concurrent
        callers of the same query wait and then hit the cache: one in-flight
        request per distinct key.
        """
        key = cache_key(query, self.endpoint)
        with self._key_lock(key):
            if self.cache is not None:
                cached = self.cache.get(key)
                if cached is not None:
                    return cached
            body = self._fetch_network(query)
            if self.cache is not None:
                self.cache.put(key, body)
            return body

    def _fetch_network(self, query: OverpassQuery) -> bytes:
        last_error = "unknown error"
        for attempt in range(len(_BACKOFF_S) + 1):
            try:
                response = self.session.post(
                    self.endpoint, data={"data": query.text},
                    timeout=DEFAULT_TIMEOUT_S + 30)
            except requests.RequestException as exc:
                last_error = f"network failure: {exc}"
            else:
                if response.status_code == 200:
                    return response.content
                if response.status_code == 400:
                    raise OverpassError(
                        f"Overpass rejected the query (HTTP 400): "
                        f"{response.text[:500]}")
                if response.status_code not in _RETRY_STATUSES:
                    raise OverpassError(
                        f"Overpass returned HTTP {response.status_code}")
                last_error = f"HTTP {response.status_code}"
            if attempt < len(_BACKOFF_S):
                self.sleep(_BACKOFF_S[attempt])
        raise OverpassError(
            f"Overpass fetch failed after {len(_BACKOFF_S) + 1} attempts: {last_error}")


def fetch(query: OverpassQuery, endpoint: str, **kwargs) -> bytes:
    """One-shot fetch; kwargs forward to OverpassClient (cache, session, sleep)."""
    return OverpassClient(endpoint=endpoint, **kwargs).fetch(query)
