"""Binary model files.

All multi-byte values are little-endian; matrices are stored column-major
as float64. Every file starts with the magic "XQDA" and a u16 version that
selects the layout:

* version 1 (projection metric): u32 d, u32 r, f64 regularizer, then W
  (d x r), the kernel (r x r), and the r eigenvalues;
* version 2 (baseline metric): a method tag byte (1 = kissme,
  2 = mahalanobis), a has-pca byte, u32 d, u32 p, f64 regularizer, then
  when PCA is present its mean (d), basis (d x p), and p eigenvalues,
  followed by the p x p kernel.
"""

from __future__ import annotations

import struct

import numpy as np

from .baselines import MetricModel, PcaModel
from .errors import DataError
from .xqda import XqdaModel

MAGIC = b"XQDA"
_TAGS = {"kissme": 1, "mahalanobis": 2}
_NAMES = {v: k for k, v in _TAGS.items()}


def _matrix_bytes(arr: np.ndarray) -> bytes:
    return np.asarray(arr, dtype="<f8").tobytes(order="F")


class _Reader:
    def __init__(self, raw: bytes, path: str) -> None:
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.raw):
            raise DataError(f"truncated model file {self.path!r}")
        chunk = self.raw[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def matrix(self, rows: int, cols: int) -> np.ndarray:
        flat = np.frombuffer(self.take(rows * cols * 8), dtype="<f8")
        return flat.reshape((rows, cols), order="F").astype(np.float64)

    def expect_end(self) -> None:
        if self.pos != len(self.raw):
            raise DataError(f"trailing bytes in model file {self.path!r}")


def save_xqda_model(path: str, model: XqdaModel) -> None:
    d, r = model.w.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HIId", 1, d, r, model.regularizer))
        fh.write(_matrix_bytes(model.w))
        fh.write(_matrix_bytes(model.m))
        fh.write(np.asarray(model.eigenvalues, dtype="<f8").tobytes())


def save_metric_model(path: str, model: MetricModel) -> None:
    if model.name not in _TAGS:
        raise ValueError(f"cannot serialize metric {model.name!r}")
    p = model.kernel.shape[0]
    d = model.pca.mean.shape[0] if model.pca is not None else p
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HBBIId", 2, _TAGS[model.name], int(model.pca is not None), d, p, model.regularizer))
        if model.pca is not None:
            fh.write(np.asarray(model.pca.mean, dtype="<f8").tobytes())
            fh.write(_matrix_bytes(model.pca.basis))
            fh.write(np.asarray(model.pca.eigenvalues, dtype="<f8").tobytes())
        fh.write(_matrix_bytes(model.kernel))


def load_model(path: str) -> XqdaModel | MetricModel:
    """Load either model kind, dispatching on the version field."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read model file {path!r}: {exc}") from exc
    reader = _Reader(raw, path)
    if reader.take(4) != MAGIC:
        raise DataError(f"not a model file: {path!r}")
    (version,) = reader.unpack("<H")
    if version == 1:
        d, r, reg = reader.unpack("<IId")
        w = reader.matrix(d, r)
        kernel = reader.matrix(r, r)
        eigenvalues = np.frombuffer(reader.take(r * 8), dtype="<f8").astype(np.float64)
        reader.expect_end()
        return XqdaModel(w=w, m=kernel, eigenvalues=eigenvalues, regularizer=reg)
    if version == 2:
        tag, has_pca, d, p, reg = reader.unpack("<BBIId")
        if tag not in _NAMES:
            raise DataError(f"unknown method tag {tag} in {path!r}")
        pca = None
        if has_pca:
            mean = np.frombuffer(reader.take(d * 8), dtype="<f8").astype(np.float64)
            basis = reader.matrix(d, p)
            eigenvalues = np.frombuffer(reader.take(p * 8), dtype="<f8").astype(np.float64)
            pca = PcaModel(mean=mean, basis=basis, eigenvalues=eigenvalues)
        kernel = reader.matrix(p, p)
        reader.expect_end()
        return MetricModel(name=_NAMES[tag], pca=pca, kernel=kernel, regularizer=reg)
    raise DataError(f"unsupported model version {version} in {path!r}")
