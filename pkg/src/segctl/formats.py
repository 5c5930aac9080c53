"""Image codecs: binary 8-bit PGM (P5) / PPM (P6) input and the RAWF float
format used for everything else.

RAWF is one ASCII header line ``RAWF v1 <d> <dim0> ... <dim{d-1}> <channels>``
terminated by a single newline, followed by the raw little-endian float32
payload in C order (last axis fastest, channel axis innermost).  Label maps
are exported as RAWF with channels=1 and integer values cast to float.
"""
from __future__ import annotations

import os

import numpy as np

from .errors import (
    MalformedHeaderError,
    TruncatedPayloadError,
    UnreadableFileError,
    UnsupportedBitDepthError,
)
from .grid import ImageVolume


def _read_bytes(path: str | os.PathLike) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise UnreadableFileError(f"cannot read {path!r}: {exc}") from exc


def _netpbm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Pull `count` whitespace-separated integer tokens after the magic,
    skipping '#' comments; returns (tokens, offset of raster start)."""
    tokens: list[int] = []
    i = 2  # past the 2-byte magic
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise MalformedHeaderError("incomplete netpbm header")
        try:
            tokens.append(int(data[start:i]))
        except ValueError as exc:
            raise MalformedHeaderError(f"bad netpbm header token {data[start:i]!r}") from exc
    if i >= n or not data[i : i + 1].isspace():
        raise MalformedHeaderError("netpbm header not terminated")
    return tokens, i + 1  # single whitespace separates header from raster


def _load_netpbm(data: bytes, channels: int) -> ImageVolume:
    (width, height, maxval), offset = _netpbm_tokens(data, 3)
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"bad raster size {width}x{height}")
    if maxval <= 0:
        raise MalformedHeaderError(f"bad maxval {maxval}")
    if maxval > 255:
        raise UnsupportedBitDepthError(f"only 8-bit rasters supported, maxval={maxval}")
    need = width * height * channels
    raster = data[offset : offset + need]
    if len(raster) < need:
        raise TruncatedPayloadError(f"raster needs {need} bytes, found {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    arr = arr.reshape(height, width, channels)
    if maxval != 255:
        arr *= 255.0 / maxval  # rescale integer formats onto [0, 255]
    return ImageVolume(arr)


def _load_rawf(data: bytes) -> ImageVolume:
    nl = data.find(b"\n")
    if nl < 0:
        raise MalformedHeaderError("RAWF header line missing newline")
    try:
        fields = data[:nl].decode("ascii").split()
    except UnicodeDecodeError as exc:
        raise MalformedHeaderError("RAWF header is not ASCII") from exc
    if len(fields) < 3 or fields[0] != "RAWF" or fields[1] != "v1":
        raise MalformedHeaderError(f"bad RAWF magic in {fields[:2]!r}")
    try:
        d = int(fields[2])
        rest = [int(tok) for tok in fields[3:]]
    except ValueError as exc:
        raise MalformedHeaderError("non-integer RAWF header field") from exc
    if d not in (2, 3) or len(rest) != d + 1:
        raise MalformedHeaderError(f"RAWF header promises {d} dims, fields {rest}")
    *dims, channels = rest
    if any(n < 1 for n in dims) or channels < 1:
        raise MalformedHeaderError(f"degenerate RAWF geometry {dims} x{channels}")
    count = int(np.prod(dims)) * channels
    payload = data[nl + 1 :]
    if len(payload) < count * 4:
        raise TruncatedPayloadError(
            f"RAWF payload needs {count * 4} bytes, found {len(payload)}"
        )
    if len(payload) > count * 4:
        raise MalformedHeaderError(
            f"RAWF payload has {len(payload) - count * 4} trailing bytes"
        )
    arr = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return ImageVolume(arr.reshape(*dims, channels))


def load_image(path: str | os.PathLike, fmt: str | None = None) -> ImageVolume:
    """Load an image; integer formats come back rescaled onto [0, 255].

    ``fmt`` is one of ``"pgm"``, ``"ppm"``, ``"rawf"`` or None to sniff the
    magic bytes.
    """
    data = _read_bytes(path)
    if fmt is None:
        if data[:2] == b"P5":
            fmt = "pgm"
        elif data[:2] == b"P6":
            fmt = "ppm"
        elif data[:4] == b"RAWF":
            fmt = "rawf"
        else:
            raise MalformedHeaderError(f"unrecognized magic {data[:4]!r}")
    if fmt == "pgm":
        if data[:2] != b"P5":
            raise MalformedHeaderError(f"not a binary PGM: magic {data[:2]!r}")
        return _load_netpbm(data, channels=1)
    if fmt == "ppm":
        if data[:2] != b"P6":
            raise MalformedHeaderError(f"not a binary PPM: magic {data[:2]!r}")
        return _load_netpbm(data, channels=3)
    if fmt == "rawf":
        return _load_rawf(data)
    raise MalformedHeaderError(f"unknown format {fmt!r}")


def rawf_bytes(values: np.ndarray) -> bytes:
    """Serialize an array of shape dims+(channels,) to RAWF bytes."""
    arr = np.ascontiguousarray(values, dtype=np.float32)
    if arr.ndim not in (3, 4):
        raise MalformedHeaderError(f"RAWF wants dims+(channels,), got rank {arr.ndim}")
    d = arr.ndim - 1
    header = "RAWF v1 {} {} {}\n".format(d, " ".join(str(n) for n in arr.shape[:-1]), arr.shape[-1])
    return header.encode("ascii") + arr.tobytes()


def save_image(img: ImageVolume, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(rawf_bytes(img.values))


def save_labels(labels: np.ndarray, path: str | os.PathLike) -> None:
    """Export a label map as RAWF with channels=1 (ints cast to float32)."""
    with open(path, "wb") as fh:
        fh.write(rawf_bytes(np.asarray(labels, dtype=np.float32)[..., np.newaxis]))


def load_labels(path: str | os.PathLike) -> np.ndarray:
    img = load_image(path, fmt="rawf")
    if img.channels != 1:
        raise MalformedHeaderError(f"label map must be single-channel, got {img.channels}")
    return np.rint(img.values[..., 0]).astype(np.int64)
