"""Image manifests and the binary feature cache.

A manifest is a CSV file with header image_path,person_id,camera_id;
relative image paths resolve against the manifest's directory. The feature
cache holds one float32 vector per image, keyed by person and camera, plus
the 32-byte digest of the feature configuration that produced it. Features
are stored as float32; consumers that accumulate covariances convert to
float64 first.
"""

from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError

MAGIC = b"LOMO"
VERSION = 1
_HEADER = ["image_path", "person_id", "camera_id"]


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    person_id: str
    camera_id: str


def read_manifest(path: str) -> list[ManifestEntry]:
    """Read and validate a manifest CSV; paths are returned resolved."""
    base = os.path.dirname(os.path.abspath(path))
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read manifest {path!r}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != _HEADER:
        raise DataError(f"manifest {path!r} must start with header {','.join(_HEADER)}")
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3 or any(not c.strip() for c in row):
            raise DataError(f"manifest {path!r} line {lineno}: expected three non-empty fields")
        image_path = row[0].strip()
        if not os.path.isabs(image_path):
            image_path = os.path.join(base, image_path)
        if image_path in seen:
            raise DataError(f"manifest {path!r} line {lineno}: duplicate image path {image_path!r}")
        seen.add(image_path)
        entries.append(ManifestEntry(image_path, row[1].strip(), row[2].strip()))
    if not entries:
        raise DataError(f"manifest {path!r} lists no images")
    return entries


@dataclass(frozen=True)
class FeatureCache:
    dim: int
    geometry: tuple[int, int]  # (height, width)
    config_digest: bytes
    person_ids: np.ndarray  # (n,) str
    camera_ids: np.ndarray  # (n,) str
    features: np.ndarray  # (n, dim) float32

    def __post_init__(self) -> None:
        if self.features.shape != (len(self.person_ids), self.dim):
            raise ValueError("feature matrix shape disagrees with ids and dim")
        if len(self.camera_ids) != len(self.person_ids):
            raise ValueError("person and camera id counts differ")
        if len(self.config_digest) != 32:
            raise ValueError("config digest must be 32 bytes")


def write_feature_cache(path: str, cache: FeatureCache) -> None:
    height, width = cache.geometry
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(
            struct.pack(
                "<HIIHH", VERSION, cache.dim, len(cache.person_ids), width, height
            )
        )
        fh.write(cache.config_digest)
        for person, camera, row in zip(cache.person_ids, cache.camera_ids, cache.features):
            for text in (str(person), str(camera)):
                encoded = text.encode("utf-8")
                fh.write(struct.pack("<H", len(encoded)))
                fh.write(encoded)
            fh.write(np.ascontiguousarray(row, dtype="<f4").tobytes())


def read_feature_cache(path: str) -> FeatureCache:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read feature cache {path!r}: {exc}") from exc
    if len(raw) < 4 + struct.calcsize("<HIIHH") + 32 or raw[:4] != MAGIC:
        raise DataError(f"not a feature cache: {path!r}")
    pos = 4
    version, dim, count, width, height = struct.unpack_from("<HIIHH", raw, pos)
    pos += struct.calcsize("<HIIHH")
    if version != VERSION:
        raise DataError(f"unsupported cache version {version} in {path!r}")
    digest = raw[pos : pos + 32]
    pos += 32

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise DataError(f"truncated feature cache {path!r}")
        chunk = raw[pos : pos + n]
        pos += n
        return chunk

    persons: list[str] = []
    cameras: list[str] = []
    features = np.empty((count, dim), dtype=np.float32)
    for i in range(count):
        for bucket in (persons, cameras):
            (length,) = struct.unpack("<H", take(2))
            bucket.append(take(length).decode("utf-8"))
        features[i] = np.frombuffer(take(dim * 4), dtype="<f4")
    if pos != len(raw):
        raise DataError(f"trailing bytes in feature cache {path!r}")
    return FeatureCache(
        dim=dim,
        geometry=(height, width),
        config_digest=digest,
        person_ids=np.array(persons),
        camera_ids=np.array(cameras),
        features=features,
    )


def require_cross_view(cache: FeatureCache) -> None:
    """Check that every person was seen under at least two cameras."""
    pairs = {}
    for person, camera in zip(cache.person_ids, cache.camera_ids):
        pairs.setdefault(person, set()).add(camera)
    lonely = sorted(p for p, cams in pairs.items() if len(cams) < 2)
    if lonely:
        raise DataError(
            f"cross-view run needs every person under >= 2 cameras; single-camera: {lonely[:10]}"
        )
