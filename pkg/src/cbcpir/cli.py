"""Command-line interface: ``cbcpir {dbgen,serve,get,attack,rates}``.

Exit codes are 0 on success, 1 on protocol, transport or runtime errors and
2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import attacks, costs
from .hypercube import CubeShape
from .scheme import TABLE_PRESETS, TOY, Database, Params, Variant
from .service import ProtocolError, TransportError, client_retrieve, serve
from .wire import WireError, load_database, save_database

__all__ = ["main", "parse_params", "pack_bytes", "unpack_bytes", "symbol_bits", "UsageError"]


class UsageError(Exception):
    pass


# -- parameters ------------------------------------------------------------------


def parse_params(spec: str, *, files=None, rows=None, variant=None) -> Params:
    """``toy``, a ``table1-rowN`` preset, or explicit ``q,s,v,n,k,delta``."""
    if spec == "toy":
        d = dict(TOY)
    elif spec in TABLE_PRESETS:
        d = dict(zip("q s v n k delta".split(), TABLE_PRESETS[spec]))
    else:
        try:
            vals = [int(t) for t in spec.split(",")]
        except ValueError:
            raise UsageError(f"unknown parameter preset {spec!r}") from None
        if len(vals) != 6:
            raise UsageError("explicit parameters need six values q,s,v,n,k,delta")
        d = dict(zip("q s v n k delta".split(), vals))
    if files is not None:
        d["m"] = files
    if rows is not None:
        d["L"] = rows
    if variant is not None:
        d["variant"] = Variant(variant)
    try:
        return Params(**d)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _cube(text, m):
    if text is None:
        return None
    try:
        t, omega = (int(v) for v in text.split(","))
        return CubeShape.for_files(m, t, omega)
    except ValueError as e:
        raise UsageError(f"bad --cube {text!r}: {e}") from None


# -- byte packing -----------------------------------------------------------------


def symbol_bits(q: int) -> int:
    return int(q).bit_length() - 1


def pack_bytes(data: bytes, q: int, count: int) -> np.ndarray:
    """Bytes to ``count`` symbols of ``floor(log2 q)`` bits, MSB first, zero padded."""
    c = symbol_bits(q)
    nbits = 8 * len(data)
    need = -(-nbits // c)
    if need > count:
        raise ValueError(f"{len(data)} bytes need {need} symbols but only {count} fit")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    bits = np.concatenate([bits, np.zeros(count * c - nbits, dtype=np.uint8)]).reshape(count, c)
    weights = np.array([1 << (c - 1 - j) for j in range(c)], dtype=np.int64)
    return bits.astype(np.int64) @ weights


def unpack_bytes(symbols, q: int, nbytes: int) -> bytes:
    """Inverse of :func:`pack_bytes` for the first ``nbytes`` bytes."""
    c = symbol_bits(q)
    sym = [int(v) for v in np.asarray(symbols).reshape(-1)]
    bits = np.array([(v >> (c - 1 - j)) & 1 for v in sym for j in range(c)], dtype=np.uint8)
    return np.packbits(bits[: 8 * nbytes]).tobytes()


def _manifest_path(db_path) -> Path:
    return Path(str(db_path) + ".json")


# -- subcommands ----------------------------------------------------------------------


def cmd_dbgen(ns, rng) -> int:
    if ns.files is not None and ns.files < 1:
        raise UsageError("--files must be positive")
    names, sizes = [], []
    if ns.from_dir:
        paths = sorted(p for p in Path(ns.from_dir).iterdir() if p.is_file())
        if not paths:
            raise UsageError(f"no files in {ns.from_dir}")
        if ns.files is not None and ns.files != len(paths):
            raise UsageError(f"--files {ns.files} but the directory holds {len(paths)} files")
        blobs = [p.read_bytes() for p in paths]
        p0 = parse_params(ns.params, files=len(paths), rows=1, variant=ns.variant)
        c = symbol_bits(p0.q)
        need = max(-(-8 * len(b) // (c * p0.delta)) for b in blobs)
        rows = ns.rows if ns.rows is not None else max(need, 1)
        p = p0.with_(L=rows)
        try:
            files = [pack_bytes(b, p.q, p.L * p.delta).reshape(p.L, p.delta) for b in blobs]
        except ValueError as e:
            raise UsageError(str(e)) from None
        db = Database.from_files([p.base().asarray(f) for f in files])
        names, sizes = [x.name for x in paths], [len(b) for b in blobs]
    else:
        if ns.files is None or ns.rows is None:
            raise UsageError("random databases need --files and --rows")
        if ns.rows < 1:
            raise UsageError("--rows must be positive")
        p = parse_params(ns.params, files=ns.files, rows=ns.rows, variant=ns.variant)
        db = Database.random(p, rng)
    nbytes = save_database(ns.out, p.base(), db.x)
    manifest = {"params": p.to_dict(), "names": names, "sizes": sizes}
    _manifest_path(ns.out).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {ns.out}: m={p.m} L={p.L} delta={p.delta} ({nbytes} bytes)")
    return 0


def _load(db_path):
    mpath = _manifest_path(db_path)
    if not mpath.exists():
        raise UsageError(f"missing manifest {mpath}")
    manifest = json.loads(mpath.read_text())
    p = Params.from_dict(manifest["params"])
    _, x = load_database(db_path)
    return Database(x, p.delta, manifest), p


def cmd_serve(ns, rng) -> int:
    db, p = _load(ns.db)
    if ns.variant:
        p = p.with_(variant=Variant(ns.variant))
    serve(db, p, ns.endpoint, _cube(ns.cube, p.m))
    return 0


def cmd_get(ns, rng) -> int:
    manifest = json.loads(Path(ns.manifest).read_text()) if ns.manifest else None
    if ns.name is not None:
        if manifest is None:
            raise UsageError("--name needs --manifest")
        try:
            index = manifest["names"].index(ns.name)
        except ValueError:
            raise UsageError(f"no file named {ns.name!r}") from None
    else:
        index = ns.index
    if index < 0:
        raise UsageError("--index must be non-negative")
    try:
        res = client_retrieve(ns.endpoint, index, rng=rng)
    except IndexError as e:
        raise UsageError(str(e)) from None
    p = res.params
    report = costs.cbcpir_cost(p, res.shape)
    print(f"file {index}: {p.L}x{p.delta} symbols")
    print(f"uploaded {res.upload_bytes} bytes, downloaded {res.download_bytes} bytes")
    print(f"achieved rate {res.rate:.6f} (formula {float(report.rate):.6f}, {report.rate})")
    if ns.out:
        if manifest and manifest.get("sizes"):
            data = unpack_bytes(res.file, p.q, manifest["sizes"][index])
        else:
            data = np.asarray(res.file).astype("<u8").tobytes()
        Path(ns.out).write_bytes(data)
        print(f"wrote {ns.out} ({len(data)} bytes)")
    return 0


def _theory(p: Params, attack: str, h: int) -> dict:
    if p.variant is Variant.HHW:
        return {"hhw_bound": f"1 - q^{attacks.hhw_success_bound_log_q(p)}"}
    if attack == "modified" and p.variant is Variant.CB_BETA:
        return {"beta_bound": attacks.beta_success_bound(p, h)}
    return {"chance": 1 / p.m}


def cmd_attack(ns, rng) -> int:
    if ns.trials < 1:
        raise UsageError("--trials must be positive")
    p = parse_params(ns.params, files=ns.files, rows=1, variant=ns.variant)
    attack = ns.attack or ("modified" if p.variant is Variant.CB_BETA else "subquery")
    if attack == "modified" and p.variant is Variant.HHW:
        raise UsageError("the modified attack needs a two-block variant")
    h = ns.h if ns.h is not None else p.m
    if attack == "modified" and (p.q - 1) ** (min(h, p.m) - 1) > attacks.MAX_BETA_GUESSES:
        raise UsageError(f"h={h} needs (q-1)^(h-1) > 2^20 guesses")
    rep = attacks.monte_carlo(p, ns.trials, ns.seed, attack=attack, h=h)
    rec = {
        "variant": p.variant.value,
        "attack": attack,
        "m": p.m,
        "trials": rep.trials,
        "successes": rep.successes,
        "abstentions": rep.abstentions,
        "success_rate": rep.rate,
        "forced_rate": rep.forced_rate,
        "pvalue_above_chance": rep.pvalue_above_chance(),
    }
    rec.update(_theory(p, attack, h))
    print(json.dumps(rec, sort_keys=True))
    return 0


def cmd_rates(ns, rng) -> int:
    if ns.table:
        print("preset,q,s,v,n,k,delta,rate,isd_bits,subspace_bits")
        for name, (q, s, v, n, k, d) in TABLE_PRESETS.items():
            p = Params(q, s, v, n, k, d)
            rate = costs.limit_rate(p)
            isd = attacks.isd_workfactor_log2(n, k)
            sub = attacks.subspace_guess_log2(q, s, v)
            print(f"{name},{q},{s},{v},{n},{k},{d},{rate},{isd:.2f},{sub:.2f}")
        return 0
    if ns.sweep is None:
        raise UsageError("rates needs --table or --sweep")
    base = costs.SWEEPS.get(ns.sweep)
    if base is None:
        raise UsageError(f"unknown sweep {ns.sweep!r}; choose from {sorted(costs.SWEEPS)}")
    kw = {}
    for key in ("lo", "hi", "samples"):
        val = getattr(ns, key)
        if val is not None:
            kw[key] = val
    try:
        sw = costs.Sweep(base.kind, kw.get("lo", base.lo), kw.get("hi", base.hi), kw.get("samples", base.samples), base.m, base.L, base.t_amortize)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if ns.out:
        with open(ns.out, "w", newline="", encoding="utf-8") as fh:
            costs.emit_curves(sw, fh)
    else:
        costs.emit_curves(sw, sys.stdout)
    return 0


# -- argument parsing ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cbcpir", description="Code-based single-server PIR")
    ap.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def with_params(sp):
        sp.add_argument("--params", default="toy", help="toy, table1-row1..6, or q,s,v,n,k,delta")
        sp.add_argument("--variant", choices=[v.value for v in Variant])

    sp = sub.add_parser("dbgen", help="write a database file")
    with_params(sp)
    sp.add_argument("--files", type=int)
    sp.add_argument("--rows", type=int)
    sp.add_argument("--from-dir")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_dbgen)

    sp = sub.add_parser("serve", help="serve a database file")
    sp.add_argument("--db", required=True)
    sp.add_argument("--endpoint", default="127.0.0.1:7878")
    sp.add_argument("--cube", help="t,omega for the iterative protocol")
    sp.add_argument("--variant", choices=[v.value for v in Variant])
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("get", help="retrieve one file privately")
    sp.add_argument("--endpoint", default="127.0.0.1:7878")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--index", type=int)
    g.add_argument("--name")
    sp.add_argument("--manifest", help="database manifest for --name and byte unpacking")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_get)

    sp = sub.add_parser("attack", help="Monte Carlo attacks on toy queries")
    with_params(sp)
    sp.add_argument("--files", type=int)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--attack", choices=["subquery", "modified"])
    sp.add_argument("--h", type=int, help="chunk size of the beta support attack")
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("rates", help="parameter table or comparison curves")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--table", action="store_true")
    g.add_argument("--sweep", help=", ".join(sorted(costs.SWEEPS)))
    sp.add_argument("--lo", type=float)
    sp.add_argument("--hi", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_rates)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING)
    rng = np.random.default_rng(ns.seed)
    try:
        return ns.func(ns, rng)
    except UsageError as e:
        print(f"cbcpir: usage error: {e}", file=sys.stderr)
        return 2
    except (ProtocolError, TransportError, WireError, OSError, RuntimeError, ValueError) as e:
        print(f"cbcpir: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
