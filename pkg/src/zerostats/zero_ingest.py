"""Reading zero tables and caching sequences on disk.

Two text dialects are understood.  ``plain`` has one ordinate per line in
increasing order.  ``columnar`` has whitespace-separated fields with the
ordinate in a chosen column, and rows may be signed.  Both skip lines starting
with '#'.  ``skip_rows`` counts raw lines from the top of the file, as R's
``read.table(skip=...)`` does.

The binary cache is a fixed little-endian header followed by the ordinates as
float64::

    magic   4s   b"ZSEQ"
    version H
    flags   H    bit 0: signed
    count   Q
    max     d    largest |ordinate|
    sha256  32s  digest of the payload bytes
"""

from __future__ import annotations

import hashlib
import io
import os
import struct
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .zeta_engine import MERGE_TOL, ZeroSequence

MAGIC = b"ZSEQ"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sHHQd32s")
FLAG_SIGNED = 1


class ZeroFileError(ValueError):
    def __init__(self, msg, line: Optional[int] = None, path=None):
        where = ":".join(str(x) for x in (path, line) if x is not None)
        super().__init__(f"{where}: {msg}" if where else msg)
        self.line = line
        self.path = path


class CacheError(ValueError):
    pass


class CacheVersionError(CacheError):
    pass


class CacheIntegrityError(CacheError):
    pass


@dataclass(frozen=True)
class ZeroFileSpec:
    path: Union[str, Path]
    dialect: str = "plain"
    skip_rows: int = 0
    max_rows: Optional[int] = None
    column: int = 1
    offset: float = 0.0

    def __post_init__(self):
        if self.dialect not in ("plain", "columnar"):
            raise ValueError(f"unknown dialect {self.dialect!r}")
        if self.dialect == "plain" and self.column != 1:
            raise ValueError("plain dialect has a single column")
        if self.skip_rows < 0 or (self.max_rows is not None and self.max_rows < 0):
            raise ValueError("skip_rows and max_rows must be >= 0")
        if self.column < 1:
            raise ValueError("column is 1-based")
        if not np.isfinite(self.offset):
            raise ValueError("offset must be finite")


@dataclass(frozen=True)
class CacheHeader:
    magic: bytes
    version: int
    count: int
    signed: bool
    max_ordinate: float
    checksum: bytes

    def pack(self) -> bytes:
        return _HEADER.pack(self.magic, self.version, FLAG_SIGNED if self.signed else 0,
                            self.count, self.max_ordinate, self.checksum)

    @classmethod
    def unpack(cls, raw: bytes) -> "CacheHeader":
        magic, version, flags, count, mx, digest = _HEADER.unpack(raw)
        return cls(magic, version, count, bool(flags & FLAG_SIGNED), mx, digest)


# ---------------------------------------------------------------------------
# text tables

def _locate_bad_line(path, spec: ZeroFileSpec) -> tuple:
    """Scan like loadtxt does and return (line number, message) of the first bad row."""
    seen = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if lineno <= spec.skip_rows:
                continue
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if spec.max_rows is not None and seen >= spec.max_rows:
                break
            seen += 1
            fields = body.split()
            if spec.dialect == "plain" and len(fields) != 1:
                return lineno, f"expected one value, found {len(fields)} fields"
            if spec.column > len(fields):
                return lineno, f"column {spec.column} out of range ({len(fields)} fields)"
            try:
                float(fields[spec.column - 1])
            except ValueError:
                return lineno, f"cannot parse {fields[spec.column - 1]!r} as a number"
    return None, "malformed table"


def _line_of_row(path, spec: ZeroFileSpec, row: int) -> int:
    seen = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if lineno <= spec.skip_rows or not line.split("#", 1)[0].strip():
                continue
            seen += 1
            if seen == row:
                return lineno
    return -1


def _load_column(spec: ZeroFileSpec) -> np.ndarray:
    path = Path(spec.path)
    if spec.max_rows == 0:
        return np.empty(0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)   # empty input
            kw = {} if spec.dialect == "plain" else {"usecols": spec.column - 1}
            vals = np.loadtxt(path, dtype=np.float64, comments="#", skiprows=spec.skip_rows,
                              max_rows=spec.max_rows, ndmin=1, encoding="utf-8", **kw)
    except (ValueError, IndexError) as exc:
        line, msg = _locate_bad_line(path, spec)
        raise ZeroFileError(msg if line is not None else str(exc), line, path) from None
    if vals.ndim != 1:
        line, msg = _locate_bad_line(path, spec)
        raise ZeroFileError(msg, line, path)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise ZeroFileError("non-finite value", _line_of_row(path, spec, bad), path)
    return vals


def parse_zero_file(spec: ZeroFileSpec) -> ZeroSequence:
    """Read ordinates from a text table according to ``spec``."""
    vals = _load_column(spec)
    if spec.offset:
        vals = vals + spec.offset
    src = {"kind": "ingested", "path": str(spec.path), "dialect": spec.dialect,
           "skip_rows": spec.skip_rows, "max_rows": spec.max_rows, "column": spec.column,
           "offset": spec.offset, "rows": int(vals.size)}
    if spec.dialect == "plain":
        if vals.size > 1:
            dec = np.flatnonzero(np.diff(vals) < 0)
            if dec.size:
                raise ZeroFileError("values decrease (plain tables must be ascending)",
                                    _line_of_row(spec.path, spec, int(dec[0]) + 1), spec.path)
        if vals.size and vals[0] <= 0:
            raise ZeroFileError("plain tables hold positive ordinates", _line_of_row(spec.path, spec, 0),
                                spec.path)
        vals, dropped = _dedupe(vals)
        src["duplicates_dropped"] = dropped
        return ZeroSequence(vals, False, src)
    vals = np.sort(vals[vals != 0.0], kind="stable")
    vals, dropped = _dedupe(vals)
    src["duplicates_dropped"] = dropped
    return ZeroSequence(vals, True, src)


def _dedupe(vals: np.ndarray):
    if vals.size < 2:
        return vals, 0
    keep = np.concatenate([[True], np.diff(vals) > MERGE_TOL])
    return vals[keep], int(vals.size - keep.sum())


def write_plain(seq: ZeroSequence, path, precision: int = 17) -> None:
    """One ordinate per line; ``precision`` significant digits (17 round-trips float64)."""
    if seq.signed and seq.ordinates.size and seq.ordinates[0] < 0:
        raise ValueError("plain dialect cannot hold negative ordinates; split the sequence first")
    buf = io.StringIO()
    np.savetxt(buf, seq.ordinates, fmt=f"%.{precision}g")
    _atomic_write(path, buf.getvalue().encode("utf-8"))


def split_signed(seq: ZeroSequence):
    """(positive branch, absolute values of the negative branch), both ascending and unsigned."""
    if not seq.signed:
        raise ValueError("split_signed needs a signed sequence")
    o = seq.ordinates
    pos = o[o > 0]
    neg = -o[o < 0][::-1]
    return (ZeroSequence(pos, False, {**seq.source, "branch": "pos"}),
            ZeroSequence(neg, False, {**seq.source, "branch": "neg"}))


# ---------------------------------------------------------------------------
# binary cache

def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_cache(seq: ZeroSequence, path) -> CacheHeader:
    payload = seq.ordinates.astype("<f8", copy=False).tobytes()
    header = CacheHeader(MAGIC, CACHE_VERSION, len(seq), seq.signed, seq.max_ordinate,
                         hashlib.sha256(payload).digest())
    _atomic_write(path, header.pack() + payload)
    return header


def read_cache_header(path) -> CacheHeader:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise CacheIntegrityError(f"{path}: truncated header")
    header = CacheHeader.unpack(raw)
    if header.magic != MAGIC:
        raise CacheIntegrityError(f"{path}: not a zero cache (magic {header.magic!r})")
    if header.version != CACHE_VERSION:
        raise CacheVersionError(f"{path}: cache version {header.version}, expected {CACHE_VERSION}")
    return header


def read_cache(path, mmap: bool = False, verify: bool = True) -> ZeroSequence:
    """Load a cache file; ``mmap`` maps the payload instead of reading it into memory."""
    header = read_cache_header(path)
    expected = _HEADER.size + 8 * header.count
    size = os.path.getsize(path)
    if size != expected:
        raise CacheIntegrityError(f"{path}: size {size} bytes, header implies {expected}")
    if mmap and header.count:
        data = np.memmap(path, dtype="<f8", mode="r", offset=_HEADER.size, shape=(header.count,))
    else:
        with open(path, "rb") as fh:
            fh.seek(_HEADER.size)
            data = np.frombuffer(fh.read(), dtype="<f8")
    if verify and hashlib.sha256(memoryview(np.ascontiguousarray(data)).cast("B")).digest() != header.checksum:
        raise CacheIntegrityError(f"{path}: checksum mismatch")
    seq = ZeroSequence(np.asarray(data, dtype=np.float64), header.signed,
                       {"kind": "cache", "path": str(path)})
    if seq.max_ordinate != header.max_ordinate:
        raise CacheIntegrityError(f"{path}: header max_ordinate disagrees with payload")
    return seq


def cache_roundtrip(seq: ZeroSequence, path=None) -> ZeroSequence:
    """Write ``seq`` to a cache file and read it back."""
    if path is not None:
        write_cache(seq, path)
        return read_cache(path)
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "seq.zseq"
        write_cache(seq, p)
        return read_cache(p)


def load_sequence(path, **spec_kw) -> ZeroSequence:
    """Cache files by magic bytes, text tables otherwise."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_cache(path)
    return parse_zero_file(ZeroFileSpec(path, **spec_kw))
