import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbcpir.cli import UsageError, main, pack_bytes, parse_params, unpack_bytes
from cbcpir.costs import cbcpir_cost
from cbcpir.scheme import Database, Params
from cbcpir.service import start_server
from cbcpir.wire import load_database


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=200), st.sampled_from([3, 5, 32, 2**32 - 5, 2**61 - 1]))
def test_pack_unpack_round_trip(data, q):
    c = q.bit_length() - 1
    count = -(-8 * len(data) // c) + 2
    sym = pack_bytes(data, q, count)
    assert np.all(sym < q)
    assert unpack_bytes(sym, q, len(data)) == data


def test_pack_msb_first():
    assert list(pack_bytes(b"\xa0", 5, 4)) == [2, 2, 0, 0]  # 10 10 00 00


def test_pack_too_large():
    with pytest.raises(ValueError):
        pack_bytes(b"abc", 3, 5)


def test_parse_params():
    p = parse_params("table1-row6")
    assert (p.q, p.s, p.v, p.n, p.k, p.delta) == (2**61 - 1, 6, 2, 100, 50, 200)
    assert parse_params("3,4,2,8,4,8", files=2).m == 2
    with pytest.raises(UsageError):
        parse_params("nope")
    with pytest.raises(UsageError):
        parse_params("3,4,2,8,4,99")


def test_dbgen_random_round_trips(tmp_path, capsys):
    out = tmp_path / "db.bin"
    assert main(["--seed", "4", "dbgen", "--files", "4", "--rows", "3", "--out", str(out)]) == 0
    F, x = load_database(out)
    assert x.shape == (3, 32)
    meta = json.loads((tmp_path / "db.bin.json").read_text())
    assert Params.from_dict(meta["params"]).m == 4


def test_dbgen_rejects_zero_files(tmp_path):
    assert main(["dbgen", "--files", "0", "--rows", "3", "--out", str(tmp_path / "x")]) == 2


def test_dbgen_file_too_large(tmp_path):
    d = tmp_path / "in"
    d.mkdir()
    (d / "a").write_bytes(b"x" * 100)
    assert main(["dbgen", "--from-dir", str(d), "--rows", "1", "--out", str(tmp_path / "db")]) == 2


def _packed_db(tmp_path):
    d = tmp_path / "in"
    d.mkdir()
    blobs = {"a.bin": bytes(range(256)) * 2, "b.txt": b"hello world\n", "c": b"", "d": b"\xff" * 33}
    for k, v in blobs.items():
        (d / k).write_bytes(v)
    out = tmp_path / "db.bin"
    assert main(["dbgen", "--from-dir", str(d), "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "db.bin.json").read_text())
    p = Params.from_dict(meta["params"])
    _, x = load_database(out)
    return blobs, out, p, Database(x, p.delta)


def test_packed_files_unpack_identically(tmp_path):
    blobs, out, p, db = _packed_db(tmp_path)
    names = sorted(blobs)
    for j, name in enumerate(names):
        assert unpack_bytes(db.file(j), p.q, len(blobs[name])) == blobs[name]


def test_get_over_loopback(tmp_path, capsys):
    blobs, out, p, db = _packed_db(tmp_path)
    srv = start_server(db, p)
    try:
        dest = tmp_path / "got"
        rc = main(["get", "--endpoint", srv.endpoint, "--name", "a.bin", "--manifest", str(out) + ".json", "--out", str(dest)])
        assert rc == 0
        assert dest.read_bytes() == blobs["a.bin"]
        text = capsys.readouterr().out
        assert f"formula {float(cbcpir_cost(p).rate):.6f}" in text
        assert main(["get", "--endpoint", srv.endpoint, "--index", "7"]) == 2
        assert main(["get", "--endpoint", srv.endpoint, "--name", "zz", "--manifest", str(out) + ".json"]) == 2
    finally:
        srv.shutdown()
        srv.server_close()


def test_get_without_server(tmp_path):
    import socket

    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    dest = tmp_path / "never"
    assert main(["get", "--endpoint", f"127.0.0.1:{port}", "--index", "0", "--out", str(dest)]) == 1
    assert not dest.exists()


def test_attack_hhw(capsys):
    assert main(["--seed", "9", "attack", "--variant", "hhw", "--files", "5", "--trials", "30"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["success_rate"] >= 0.99
    assert "hhw_bound" in rec


def test_attack_matrix_s_near_chance(capsys):
    assert main(["attack", "--variant", "matrix-s", "--trials", "40"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["pvalue_above_chance"] > 0.05
    assert rec["chance"] == 0.25


def test_attack_usage_errors():
    assert main(["attack", "--trials", "0"]) == 2
    assert main(["attack", "--variant", "beta", "--params", "7,4,2,8,4,8", "--files", "30", "--h", "30", "--trials", "1"]) == 2


def test_rates_table(capsys):
    assert main(["rates", "--table"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    rates = [ln.split(",")[7] for ln in lines[1:]]
    assert rates == ["1/128", "1/64", "1/24", "1/12", "1/10", "1/6"]
    isd = [float(ln.split(",")[8]) for ln in lines[1:]]
    assert all(abs(v - 113) <= 1 for k, v in enumerate(isd) if k != 3)
    assert abs(isd[3] - 133) <= 1


def test_rates_sweep(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["rates", "--sweep", "xpir-db", "--samples", "3", "--out", str(out)]) == 0
    assert out.read_bytes().startswith(b"scheme,x_axis,x,rate")
    assert main(["rates", "--sweep", "xpir-db", "--samples", "0"]) == 2
    assert main(["rates", "--sweep", "bogus"]) == 2
    assert main(["rates"]) == 2


def test_argparse_usage_exit_code():
    with pytest.raises(SystemExit) as e:
        main(["get"])
    assert e.value.code == 2
