"""Byte-exact encodings of matrices and protocol frames.

Frame layout (all integers little-endian)::

    magic "CBPIR" | version u8 | type u8 | session 16 bytes | payload_len u64 | payload

Matrix layout::

    tag u8 (0 prime, 1 binary) | q or b u64 | s u16 | rows u32 | cols u32 | body

The body lists entries row by row, each entry as ``s`` coordinates of
8 bytes (prime fields) or ``ceil(b/8)`` bytes (binary fields).
"""
from __future__ import annotations

import enum
import json
import struct

import numpy as np

from .field import BinaryField, ExtField, PrimeField, base_field, ext_field_build

__all__ = [
    "MAGIC",
    "VERSION",
    "FRAME_HEADER",
    "MATRIX_HEADER",
    "MsgType",
    "ErrorCode",
    "WireError",
    "BadMagic",
    "BadVersion",
    "UnknownMessageType",
    "CoordOutOfRange",
    "TruncatedBody",
    "Frame",
    "encode_frame",
    "decode_header",
    "read_frame",
    "serialize_matrix",
    "deserialize_matrix",
    "matrix_nbytes",
    "encode_round_query",
    "decode_round_query",
    "encode_error",
    "decode_error",
    "encode_params",
    "decode_params",
    "save_database",
    "load_database",
]

MAGIC = b"CBPIR"
VERSION = 1
_FRAME = struct.Struct("<5sBB16sQ")
_MATRIX = struct.Struct("<BQHII")
FRAME_HEADER = _FRAME.size  # 31
MATRIX_HEADER = _MATRIX.size  # 19
MAX_PAYLOAD = 1 << 40


class MsgType(enum.IntEnum):
    PARAMS = 1
    QUERY = 2
    ANSWER = 3
    ROUND_QUERY = 4
    ROUND_ACK = 5
    FINAL_DB = 6
    ERROR = 7
    DATABASE = 8


class ErrorCode(enum.IntEnum):
    MALFORMED = 1
    DIMENSION = 2
    OUT_OF_ORDER = 3
    UNKNOWN_SESSION = 4


class WireError(ValueError):
    code = ErrorCode.MALFORMED


class BadMagic(WireError):
    pass


class BadVersion(WireError):
    pass


class UnknownMessageType(WireError):
    pass


class CoordOutOfRange(WireError):
    pass


class TruncatedBody(WireError):
    pass


class Frame:
    __slots__ = ("type", "session", "payload")

    def __init__(self, type, session: bytes = bytes(16), payload: bytes = b""):
        self.type = MsgType(type)
        if len(session) != 16:
            raise ValueError("session id must be 16 bytes")
        self.session = bytes(session)
        self.payload = bytes(payload)

    def __repr__(self) -> str:
        return f"Frame({self.type.name}, {self.session.hex()}, {len(self.payload)} bytes)"

    def __eq__(self, other) -> bool:
        return isinstance(other, Frame) and (self.type, self.session, self.payload) == (
            other.type,
            other.session,
            other.payload,
        )

    def encode(self) -> bytes:
        return encode_frame(self.type, self.session, self.payload)

    def __len__(self) -> int:
        return FRAME_HEADER + len(self.payload)


def encode_frame(mtype, session: bytes, payload: bytes) -> bytes:
    return _FRAME.pack(MAGIC, VERSION, int(mtype), bytes(session), len(payload)) + payload


def decode_header(hdr: bytes):
    """Parse a 31-byte header into ``(type, session, payload_len)``.

    The length is returned even when the header is otherwise invalid, so a
    reader can skip the payload; validation errors carry it as
    ``exc.payload_len``.
    """
    if len(hdr) != FRAME_HEADER:
        raise TruncatedBody("short frame header")
    magic, ver, mtype, session, plen = _FRAME.unpack(hdr)
    err = None
    if magic != MAGIC:
        err = BadMagic(f"bad magic {magic!r}")
    elif ver != VERSION:
        err = BadVersion(f"unsupported version {ver}")
    elif mtype not in MsgType._value2member_map_:
        err = UnknownMessageType(f"unknown message type {mtype}")
    if err is not None:
        err.payload_len = plen
        raise err
    return MsgType(mtype), session, plen


def _read_exact(stream, n: int) -> bytes:
    chunks, got = [], 0
    while got < n:
        b = stream.read(n - got) if hasattr(stream, "read") else stream.recv(n - got)
        if not b:
            break
        chunks.append(b)
        got += len(b)
    return b"".join(chunks)


def read_frame(stream) -> Frame | None:
    """Read one frame from a binary stream; ``None`` at a clean EOF."""
    hdr = _read_exact(stream, FRAME_HEADER)
    if not hdr:
        return None
    if len(hdr) < FRAME_HEADER:
        raise EOFError("connection closed inside a frame header")
    try:
        mtype, session, plen = decode_header(hdr)
    except WireError as e:
        plen = getattr(e, "payload_len", 0)
        if plen <= MAX_PAYLOAD:
            _read_exact(stream, plen)
        raise
    if plen > MAX_PAYLOAD:
        raise WireError("payload too large")
    payload = _read_exact(stream, plen)
    if len(payload) < plen:
        raise EOFError("connection closed inside a frame payload")
    return Frame(mtype, session, payload)


# -- matrices -----------------------------------------------------------------


def _field_parts(F):
    """``(base, s)`` for a base or extension field."""
    if isinstance(F, ExtField):
        return F.base, F.s
    return F, 1


def _coord_width(base) -> int:
    return base.coord_bytes


def matrix_nbytes(F, rows: int, cols: int) -> int:
    base, s = _field_parts(F)
    return MATRIX_HEADER + rows * cols * s * _coord_width(base)


def serialize_matrix(F, a) -> bytes:
    """Encode a base-field ``(rows, cols)`` or extension ``(rows, cols, s)`` matrix."""
    base, s = _field_parts(F)
    a = np.asarray(a)
    if a.ndim != (3 if s > 1 else 2) or (s > 1 and a.shape[2] != s):
        raise ValueError(f"array of shape {a.shape} does not match the field")
    rows, cols = a.shape[:2]
    if isinstance(base, BinaryField):
        tag, qb = 1, base.b
    else:
        tag, qb = 0, base.p
    head = _MATRIX.pack(tag, qb, s, rows, cols)
    flat = np.ascontiguousarray(a).reshape(-1)
    if isinstance(base, PrimeField):
        body = np.asarray(flat.astype(np.uint64), dtype="<u8").tobytes()
    else:
        w = _coord_width(base)
        u4 = np.asarray(flat.astype(np.uint32), dtype="<u4")
        body = u4.view(np.uint8).reshape(-1, 4)[:, :w].tobytes()
    return head + body


def deserialize_matrix(data: bytes, expect_field=None):
    """Decode bytes from :func:`serialize_matrix`; returns ``(field, array)``.

    The field is rebuilt from the header (``ext_field_build`` for ``s > 1``),
    so only the canonical modulus round-trips.
    """
    if len(data) < MATRIX_HEADER:
        raise TruncatedBody("short matrix header")
    tag, qb, s, rows, cols = _MATRIX.unpack_from(data)
    if tag == 0:
        base = base_field(qb) if qb != 2 else PrimeField(2)
        if not isinstance(base, PrimeField):
            raise WireError(f"prime tag with non-prime modulus {qb}")
    elif tag == 1:
        if not 1 <= qb <= 32:
            raise WireError(f"binary field degree {qb} out of range")
        base = BinaryField(qb) if qb > 1 else PrimeField(2)
    else:
        raise WireError(f"unknown field tag {tag}")
    if s < 1:
        raise WireError("extension degree must be positive")
    F = ext_field_build(base, s) if s > 1 else base
    if expect_field is not None and F != expect_field:
        raise WireError(f"field {F!r} does not match the expected {expect_field!r}")
    w = _coord_width(base)
    count = rows * cols * s
    need = MATRIX_HEADER + count * w
    if len(data) < need:
        raise TruncatedBody(f"matrix body has {len(data) - MATRIX_HEADER} of {count * w} bytes")
    if len(data) > need:
        raise WireError("trailing bytes after matrix body")
    body = memoryview(data)[MATRIX_HEADER:need]
    if isinstance(base, PrimeField):
        vals = np.frombuffer(body, dtype="<u8")
        if np.any(vals >= np.uint64(base.p)) if base.p < 2**64 else False:
            raise CoordOutOfRange("coordinate not reduced modulo q")
        vals = vals.astype(np.int64) if base.dtype is np.int64 else np.array(vals.tolist(), dtype=object)
    else:
        raw = np.frombuffer(body, dtype=np.uint8).reshape(-1, w)
        pad = np.zeros((raw.shape[0], 4), dtype=np.uint8)
        pad[:, :w] = raw
        vals = pad.view("<u4").reshape(-1).astype(np.int64)
        if np.any(vals >= base.order):
            raise CoordOutOfRange("coordinate outside GF(2^b)")
    shape = (rows, cols, s) if s > 1 else (rows, cols)
    return F, vals.reshape(shape)


# -- payload helpers ----------------------------------------------------------

_ROUND = struct.Struct("<HHH")


def encode_round_query(r: int, t: int, omega: int, matrix_bytes: bytes) -> bytes:
    return _ROUND.pack(r, t, omega) + matrix_bytes


def decode_round_query(payload: bytes):
    if len(payload) < _ROUND.size:
        raise TruncatedBody("short round header")
    r, t, omega = _ROUND.unpack_from(payload)
    return r, t, omega, payload[_ROUND.size :]


def encode_error(code: int, message: str) -> bytes:
    return bytes([int(code)]) + message.encode("utf-8")


def decode_error(payload: bytes):
    if not payload:
        raise TruncatedBody("empty error payload")
    return ErrorCode(payload[0]), payload[1:].decode("utf-8", errors="replace")


def encode_params(params, shape=None) -> bytes:
    doc = {"params": params.to_dict()}
    if shape is not None:
        doc["cube"] = {"t": shape.t, "x": shape.x, "omega": shape.omega}
    return json.dumps(doc, sort_keys=True).encode("utf-8")


def decode_params(payload: bytes):
    from .hypercube import CubeShape
    from .scheme import Params

    doc = json.loads(payload.decode("utf-8"))
    p = Params.from_dict(doc["params"])
    cube = doc.get("cube")
    return p, (CubeShape(cube["t"], cube["x"], cube["omega"]) if cube else None)


# -- database files -------------------------------------------------------------


def save_database(path, F, x) -> int:
    """Write ``x`` as a DATABASE frame; returns the byte count."""
    data = encode_frame(MsgType.DATABASE, bytes(16), serialize_matrix(F, x))
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load_database(path):
    """Read a DATABASE frame; returns ``(field, array)``."""
    with open(path, "rb") as fh:
        frame = read_frame(fh)
    if frame is None or frame.type is not MsgType.DATABASE:
        raise WireError("not a database file")
    return deserialize_matrix(frame.payload)
