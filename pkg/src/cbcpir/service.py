"""Loopback-ready TCP server and client speaking the framed protocol.

The server publishes its parameters in a PARAMS frame on every new
connection, then answers frames until the peer hangs up.  Malformed or
rejected frames produce an ERROR frame and the connection stays open.
"""
from __future__ import annotations

import logging
import socket
import socketserver
import threading
from dataclasses import dataclass

import numpy as np

from .hypercube import (
    CubeShape,
    IterativeClient,
    IterativeServer,
    OutOfOrderRound,
    UnknownSession,
    round_params,
)
from .scheme import Database, Params, Query, answer, build_query, recover
from .wire import (
    FRAME_HEADER,
    MATRIX_HEADER,
    ErrorCode,
    Frame,
    MsgType,
    WireError,
    decode_error,
    decode_params,
    decode_round_query,
    deserialize_matrix,
    encode_error,
    encode_frame,
    encode_params,
    encode_round_query,
    read_frame,
    serialize_matrix,
)

__all__ = [
    "TransportError",
    "ProtocolError",
    "PirServer",
    "serve",
    "start_server",
    "parse_endpoint",
    "Retrieval",
    "client_retrieve",
    "framing_overhead",
    "ROUND_HEADER",
]

log = logging.getLogger(__name__)

ROUND_HEADER = 6
_NO_SESSION = bytes(16)


class TransportError(ConnectionError):
    """The byte stream failed: refused, reset or closed early."""


class ProtocolError(RuntimeError):
    """The server answered with an ERROR frame."""

    def __init__(self, code, message: str):
        super().__init__(f"server error {int(code)}: {message}")
        self.code = ErrorCode(code)
        self.message = message


def parse_endpoint(endpoint: str):
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {endpoint!r}")
    return host, int(port)


class _Reject(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Handler(socketserver.StreamRequestHandler):
    server: "PirServer"

    def _send(self, mtype, session, payload=b""):
        self.wfile.write(encode_frame(mtype, session, payload))
        self.wfile.flush()

    def handle(self):
        srv = self.server
        try:
            self._send(MsgType.PARAMS, _NO_SESSION, srv.params_payload)
            while True:
                try:
                    frame = read_frame(self.rfile)
                except WireError as e:
                    self._send(MsgType.ERROR, _NO_SESSION, encode_error(ErrorCode.MALFORMED, str(e)))
                    continue
                if frame is None:
                    return
                try:
                    mtype, payload = srv.dispatch(frame)
                except _Reject as e:
                    mtype, payload = MsgType.ERROR, encode_error(e.code, str(e))
                except WireError as e:
                    mtype, payload = MsgType.ERROR, encode_error(ErrorCode.MALFORMED, str(e))
                self._send(mtype, frame.session, payload)
        except (EOFError, ConnectionError, BrokenPipeError):
            return


class PirServer(socketserver.ThreadingTCPServer):
    """Flat and iterative PIR service over one read-only database."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, db, p: Params, endpoint: str = "127.0.0.1:0", shape: CubeShape | None = None):
        self.db = db if isinstance(db, Database) else Database(np.asarray(db), p.delta)
        if self.db.x.shape != (p.L, p.m * p.delta):
            raise ValueError(f"database shape {self.db.x.shape} does not match the parameters")
        self.p, self.shape = p, shape
        self.iterative = IterativeServer(self.db, p, shape) if shape is not None else None
        self.params_payload = encode_params(p, shape)
        super().__init__(parse_endpoint(endpoint), _Handler)

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def dispatch(self, frame: Frame):
        p, ext = self.p, self.p.ext()
        if frame.type is MsgType.QUERY:
            _, q = deserialize_matrix(frame.payload, expect_field=ext)
            if q.shape[:2] != (p.m * p.delta, p.blocks * p.n):
                raise _Reject(ErrorCode.DIMENSION, f"query shape {q.shape[:2]} does not match the parameters")
            return MsgType.ANSWER, serialize_matrix(ext, answer(self.db, Query((q,), ext)))
        if frame.type is MsgType.ROUND_QUERY:
            return self._round(frame)
        raise _Reject(ErrorCode.MALFORMED, f"unexpected message type {frame.type.name}")

    def _round(self, frame: Frame):
        if self.iterative is None:
            raise _Reject(ErrorCode.MALFORMED, "server runs in flat mode")
        r, t, omega, body = decode_round_query(frame.payload)
        sh = self.shape
        if (t, omega) != (sh.t, sh.omega):
            raise _Reject(ErrorCode.DIMENSION, f"cube (t={t}, omega={omega}) does not match the server")
        if not 1 <= r <= sh.omega:
            raise _Reject(ErrorCode.OUT_OF_ORDER, f"round {r} outside [1, {sh.omega}]")
        ext = self.p.ext()
        _, q = deserialize_matrix(body, expect_field=ext)
        rp = round_params(self.p, sh, r)
        if q.shape[:2] != (rp.m * rp.delta, rp.blocks * rp.n):
            raise _Reject(ErrorCode.DIMENSION, f"round query shape {q.shape[:2]} is wrong")
        try:
            self.iterative.round(frame.session, r, Query((q,), ext))
            if r < sh.omega:
                return MsgType.ROUND_ACK, b""
            files = self.iterative.final(frame.session)
        except UnknownSession as e:
            raise _Reject(ErrorCode.UNKNOWN_SESSION, str(e)) from None
        except OutOfOrderRound as e:
            raise _Reject(ErrorCode.OUT_OF_ORDER, str(e)) from None
        except ValueError as e:
            raise _Reject(ErrorCode.DIMENSION, str(e)) from None
        return MsgType.FINAL_DB, serialize_matrix(ext.base, files.reshape(-1, self.p.delta))


def start_server(db, p: Params, endpoint: str = "127.0.0.1:0", shape: CubeShape | None = None) -> PirServer:
    """Start a server on a background thread; stop it with ``shutdown()``."""
    srv = PirServer(db, p, endpoint, shape)
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    return srv


def serve(db, p: Params, endpoint: str, shape: CubeShape | None = None) -> None:
    """Serve on ``endpoint`` until interrupted."""
    with PirServer(db, p, endpoint, shape) as srv:
        log.info("serving on %s", srv.endpoint)
        try:
            srv.serve_forever()
        except KeyboardInterrupt:
            pass


# -- client --------------------------------------------------------------------


class _Counted:
    def __init__(self, sock):
        self.sock, self.sent, self.received = sock, 0, 0

    def send(self, data: bytes):
        try:
            self.sock.sendall(data)
        except OSError as e:
            raise TransportError(str(e)) from e
        self.sent += len(data)

    def read(self, n: int) -> bytes:
        try:
            b = self.sock.recv(n)
        except OSError as e:
            raise TransportError(str(e)) from e
        self.received += len(b)
        return b

    def frame(self) -> Frame:
        try:
            fr = read_frame(self)
        except EOFError as e:
            raise TransportError(str(e)) from e
        if fr is None:
            raise TransportError("server closed the connection")
        if fr.type is MsgType.ERROR:
            raise ProtocolError(*decode_error(fr.payload))
        return fr


@dataclass
class Retrieval:
    file: np.ndarray
    upload_bytes: int
    download_bytes: int
    params: Params
    shape: CubeShape | None
    params_bytes: int  # size of the PARAMS frame, part of the download

    @property
    def rate(self) -> float:
        """File bits over total bytes moved, at full coordinate width."""
        p = self.params
        width = p.base().coord_bytes
        return p.L * p.delta * width / (self.upload_bytes + self.download_bytes)


def framing_overhead(p: Params, shape: CubeShape | None, params_bytes: int):
    """``(upload, download)`` bytes that are not matrix coordinates."""
    if shape is None:
        return FRAME_HEADER + MATRIX_HEADER, params_bytes + FRAME_HEADER + MATRIX_HEADER
    om = shape.omega
    up = om * (FRAME_HEADER + ROUND_HEADER + MATRIX_HEADER)
    down = params_bytes + (om - 1) * FRAME_HEADER + FRAME_HEADER + MATRIX_HEADER
    return up, down


def _expect(fr: Frame, mtype: MsgType):
    if fr.type is not mtype:
        raise ProtocolError(ErrorCode.MALFORMED, f"expected {mtype.name}, got {fr.type.name}")


def client_retrieve(endpoint: str, i: int, p: Params | None = None, shape: CubeShape | None = None, rng=None, timeout: float = 60.0) -> Retrieval:
    """Retrieve file ``i``; ``p`` and ``shape`` default to what the server publishes."""
    rng = rng if rng is not None else np.random.default_rng()
    host, port = parse_endpoint(endpoint)
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except OSError as e:
        raise TransportError(f"cannot reach {endpoint}: {e}") from e
    with sock:
        conn = _Counted(sock)
        hello = conn.frame()
        _expect(hello, MsgType.PARAMS)
        params_bytes = len(hello)
        sp, sshape = decode_params(hello.payload)
        if p is not None and p != sp:
            raise ValueError("requested parameters differ from the server's")
        if shape is not None and shape != sshape:
            raise ValueError("requested cube differs from the server's")
        p, shape = sp, sshape
        if not 0 <= i < p.m:
            raise IndexError(f"file index {i} outside [0, {p.m})")
        ext = p.ext()
        if shape is None:
            query, qs = build_query(p, i, rng)
            conn.send(encode_frame(MsgType.QUERY, _NO_SESSION, serialize_matrix(ext, query.matrix)))
            fr = conn.frame()
            _expect(fr, MsgType.ANSWER)
            _, a = deserialize_matrix(fr.payload, expect_field=ext)
            out = recover(a, qs, p)
        else:
            sid = bytes(rng.integers(0, 256, 16, dtype=np.uint8))
            client = IterativeClient(p, shape, i, rng)
            for r in range(1, shape.omega + 1):
                q = client.query(r).matrix
                body = encode_round_query(r, shape.t, shape.omega, serialize_matrix(ext, q))
                conn.send(encode_frame(MsgType.ROUND_QUERY, sid, body))
                fr = conn.frame()
                _expect(fr, MsgType.ROUND_ACK if r < shape.omega else MsgType.FINAL_DB)
            _, flat = deserialize_matrix(fr.payload, expect_field=ext.base)
            groups = shape.x ** (shape.t - shape.omega)
            out = client.decode(flat.reshape(groups, -1, p.delta))
        return Retrieval(out, conn.sent, conn.received, p, shape, params_bytes)
