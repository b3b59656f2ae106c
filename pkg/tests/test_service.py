import socket

import numpy as np
import pytest

from cbcpir.costs import cbcpir_cost
from cbcpir.hypercube import CubeShape, IterativeClient
from cbcpir.scheme import TOY, Database, Params, Variant, build_query
from cbcpir.service import (
    ProtocolError,
    TransportError,
    client_retrieve,
    framing_overhead,
    start_server,
)
from cbcpir.wire import (
    ErrorCode,
    MsgType,
    decode_error,
    encode_frame,
    encode_round_query,
    read_frame,
    serialize_matrix,
)


@pytest.fixture
def flat_server(rng):
    p = Params(**TOY)
    db = Database.random(p, rng)
    srv = start_server(db, p)
    yield srv, db, p
    srv.shutdown()
    srv.server_close()


@pytest.fixture
def cube_server(rng):
    p = Params(**TOY).with_(m=8, L=2)
    shape = CubeShape(3, 2, 2)
    db = Database.random(p, rng)
    srv = start_server(db, p, shape=shape)
    yield srv, db, p, shape
    srv.shutdown()
    srv.server_close()


class Raw:
    def __init__(self, endpoint):
        host, port = endpoint.rsplit(":", 1)
        self.sock = socket.create_connection((host, int(port)), timeout=10)
        self.f = self.sock.makefile("rb")
        assert read_frame(self.f).type is MsgType.PARAMS

    def ask(self, raw: bytes):
        self.sock.sendall(raw)
        return read_frame(self.f)

    def close(self):
        self.f.close()
        self.sock.close()


def test_retrieve_every_file(flat_server, rng):
    srv, db, p = flat_server
    for i in range(p.m):
        res = client_retrieve(srv.endpoint, i, rng=rng)
        assert np.array_equal(res.file, db.file(i))


def test_measured_bytes_equal_formula_plus_framing(flat_server, rng):
    srv, db, p = flat_server
    res = client_retrieve(srv.endpoint, 1, p, rng=rng)
    c = cbcpir_cost(p)
    up, down = framing_overhead(p, None, res.params_bytes)
    assert res.upload_bytes == c.upload_symbols * 8 + up
    assert res.download_bytes == c.download_symbols * 8 + down


def test_iterative_over_the_wire(cube_server, rng):
    srv, db, p, shape = cube_server
    for i in range(p.m):
        res = client_retrieve(srv.endpoint, i, rng=rng)
        assert np.array_equal(res.file, db.file(i))
    c = cbcpir_cost(p, shape)
    up, down = framing_overhead(p, shape, res.params_bytes)
    assert res.upload_bytes == c.upload_symbols * 8 + up
    assert res.download_bytes == c.download_symbols * 8 + down


def test_interleaved_sessions_over_the_wire(cube_server, rng):
    srv, db, p, shape = cube_server
    ext = p.ext()
    conns = [Raw(srv.endpoint), Raw(srv.endpoint)]
    clients = [IterativeClient(p, shape, 2, rng), IterativeClient(p, shape, 5, rng)]
    sids = [b"a" * 16, b"b" * 16]
    finals = [None, None]
    for r in (1, 2):
        for j in (1, 0):
            body = encode_round_query(r, shape.t, shape.omega, serialize_matrix(ext, clients[j].query(r).matrix))
            finals[j] = conns[j].ask(encode_frame(MsgType.ROUND_QUERY, sids[j], body))
    from cbcpir.wire import deserialize_matrix

    for j, d in ((0, 2), (1, 5)):
        assert finals[j].type is MsgType.FINAL_DB
        _, flat = deserialize_matrix(finals[j].payload)
        got = clients[j].decode(flat.reshape(shape.x, -1, p.delta))
        assert np.array_equal(got, db.file(d))
        conns[j].close()


def _err(frame):
    assert frame.type is MsgType.ERROR
    return decode_error(frame.payload)[0]


def test_error_codes_and_connection_survives(cube_server, rng):
    srv, db, p, shape = cube_server
    ext = p.ext()
    c = Raw(srv.endpoint)
    cl = IterativeClient(p, shape, 0, rng)
    good = serialize_matrix(ext, cl.query(1).matrix)
    # truncated matrix body
    assert _err(c.ask(encode_frame(MsgType.ROUND_QUERY, b"x" * 16, encode_round_query(1, 3, 2, good[:-5])))) == ErrorCode.MALFORMED
    # unknown session
    assert _err(c.ask(encode_frame(MsgType.ROUND_QUERY, b"y" * 16, encode_round_query(2, 3, 2, serialize_matrix(ext, cl.query(2).matrix))))) == ErrorCode.UNKNOWN_SESSION
    # wrong cube
    assert _err(c.ask(encode_frame(MsgType.ROUND_QUERY, b"x" * 16, encode_round_query(1, 2, 1, good)))) == ErrorCode.DIMENSION
    # a well-formed round is still served
    assert c.ask(encode_frame(MsgType.ROUND_QUERY, b"x" * 16, encode_round_query(1, 3, 2, good))).type is MsgType.ROUND_ACK
    # replaying round 1 restarts; asking round 3 is out of order
    assert _err(c.ask(encode_frame(MsgType.ROUND_QUERY, b"x" * 16, encode_round_query(3, 3, 2, good)))) == ErrorCode.OUT_OF_ORDER
    # bad magic
    bad = b"NOPE!" + encode_frame(MsgType.QUERY, bytes(16), b"")[5:]
    assert _err(c.ask(bad)) == ErrorCode.MALFORMED
    c.close()


def test_flat_errors(flat_server, rng):
    srv, db, p = flat_server
    ext = p.ext()
    c = Raw(srv.endpoint)
    q, _ = build_query(p.with_(m=3), 0, rng)
    assert _err(c.ask(encode_frame(MsgType.QUERY, bytes(16), serialize_matrix(ext, q.matrix)))) == ErrorCode.DIMENSION
    q, _ = build_query(p, 0, rng)
    good = serialize_matrix(ext, q.matrix)
    assert _err(c.ask(encode_frame(MsgType.QUERY, bytes(16), good[:-1]))) == ErrorCode.MALFORMED
    first = c.ask(encode_frame(MsgType.QUERY, bytes(16), good))
    assert first.type is MsgType.ANSWER
    # an opaque query gets the same bytes back regardless of history
    assert c.ask(encode_frame(MsgType.QUERY, b"z" * 16, good)).payload == first.payload
    assert _err(c.ask(encode_frame(MsgType.ROUND_QUERY, bytes(16), b"\1\0\1\0\1\0"))) == ErrorCode.MALFORMED
    c.close()


def test_protocol_error_surfaces(flat_server, rng):
    srv, db, p = flat_server
    with pytest.raises(ValueError):
        client_retrieve(srv.endpoint, 0, p.with_(L=6), rng=rng)
    with pytest.raises(IndexError):
        client_retrieve(srv.endpoint, 9, rng=rng)


def test_server_absent_is_transport_error(rng):
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    with pytest.raises(TransportError):
        client_retrieve(f"127.0.0.1:{port}", 0, rng=rng)
    assert not issubclass(TransportError, ProtocolError)


@pytest.mark.parametrize("variant", [Variant.HHW, Variant.CB_BETA])
def test_other_variants_over_the_wire(variant, rng):
    p = Params(**TOY, variant=variant)
    db = Database.random(p, rng)
    srv = start_server(db, p)
    try:
        res = client_retrieve(srv.endpoint, 3, rng=rng)
        assert np.array_equal(res.file, db.file(3))
    finally:
        srv.shutdown()
        srv.server_close()
