#!/usr/bin/env python3
# Independent oracle for vectors/codec.txt and vectors/chain.txt.
# Only hashlib and struct; shares no code with the C++ codec.
import hashlib
import struct
import sys
from pathlib import Path


def H(b):
    return hashlib.sha256(b).digest()


def fill(label, n):
    out = b""
    i = 0
    while len(out) < n:
        out += H(f"{label}/{i}".encode())
        i += 1
    return out[:n]


def i64(v):
    return struct.pack(">q", v)


def u64(v):
    return struct.pack(">Q", v)


def u32(v):
    return struct.pack(">I", v)


def lp(b):
    return u32(len(b)) + b


def tw(start, end):
    return bytes([0x02]) + i64(start) + i64(end)


def rsu_cert(rid, vk, region, sig):
    return bytes([0x0B]) + u64(rid) + lp(vk) + lp(region) + lp(sig)


def body(vk, region, start, end):
    return bytes([0x05]) + lp(vk) + lp(region) + tw(start, end)


def codec_vectors():
    rows = []
    x0, r0 = bytes(32), bytes([1]) * 32
    v1 = H(x0 + r0)

    rows.append(("TimeWindow/zero", i64(0) + i64(900), tw(0, 900)))
    rows.append(("TimeWindow/w1900000", i64(1710000000) + i64(1710000900), tw(1710000000, 1710000900)))

    vk, sig = fill("ec.vk", 32), fill("ec.sig", 64)
    rows.append(("EnrollmentCert/a", vk + sig, bytes([0x01]) + lp(vk) + lp(sig)))

    rows.append(("TokenContent/G1", v1 + i64(0) + i64(900), bytes([0x03]) + lp(v1) + tw(0, 900)))

    sig = fill("tok.sig", 64)
    rows.append((
        "Token/a",
        v1 + i64(900) + i64(1800) + sig,
        bytes([0x04]) + bytes([0x03]) + lp(v1) + tw(900, 1800) + lp(sig),
    ))

    rvk, region, csig = fill("rsu.vk", 32), bytes.fromhex("0000000000000007"), fill("rsu.sig", 64)
    rows.append(("RsuCert/a", u64(42) + rvk + region + csig, rsu_cert(42, rvk, region, csig)))

    pvk = fill("pc.vk", 32)
    rows.append(("PseudonymCertBody/a", pvk + region + i64(2700) + i64(3600), body(pvk, region, 2700, 3600)))

    psig = fill("pc.sig", 64)
    rows.append((
        "PseudonymCert/a",
        pvk + region + i64(2700) + i64(3600) + psig + u64(42) + rvk + region + csig,
        bytes([0x06]) + body(pvk, region, 2700, 3600) + lp(psig) + rsu_cert(42, rvk, region, csig),
    ))

    xp, rp, nsig = fill("rev.x", 32), fill("rev.r", 32), fill("rev.sig", 64)
    rows.append((
        "RevokeNotice/a",
        xp + rp + i64(5) + i64(12) + nsig,
        bytes([0x07]) + lp(xp) + lp(rp) + i64(5) + i64(12) + lp(nsig),
    ))

    ph = fill("pcrl.h", 32)
    rows.append(("PcrlEntry/a", ph + region + i64(3600), bytes([0x08]) + lp(ph) + lp(region) + i64(3600)))

    e1, e2, ssig = fill("snap.e1", 32), fill("snap.e2", 32), fill("snap.sig", 64)
    ents = sorted([e1, e2])
    rows.append((
        "PcrlSnapshot/two",
        region + i64(4) + u32(2) + b"".join(ents) + ssig,
        bytes([0x09]) + lp(region) + i64(4) + lp(b"".join(ents)) + lp(ssig),
    ))
    rows.append((
        "PcrlSnapshot/empty",
        region + i64(4) + u32(0) + bytes(64),
        bytes([0x09]) + lp(region) + i64(4) + lp(b"") + lp(bytes(64)),
    ))

    tid, rh = fill("rep.t", 32), fill("rep.h", 32)
    rows.append((
        "TokenReport/a",
        tid + u64(42) + region + i64(3) + rh + u64(9),
        bytes([0x0A]) + lp(tid) + u64(42) + lp(region) + i64(3) + lp(rh) + u64(9),
    ))
    return rows


def chain_ids(x, r, n):
    ids = []
    for _ in range(n):
        x, r = H(x + r), H(r)
        ids.append(x)
    return ids


def chain_vectors():
    rows = []
    for label, x, r, n in [
        ("V1", bytes(32), bytes([1]) * 32, 1),
        ("zeros4", bytes(32), bytes([1]) * 32, 4),
        ("filled8", fill("chain.x", 32), fill("chain.r", 32), 8),
    ]:
        rows.append((f"chain/{label}", x + r, b"".join(chain_ids(x, r, n))))
    return rows


def write(path, header, rows):
    lines = [f"# {header}"]
    lines += [f"{label} {inp.hex()} {out.hex()}" for label, inp, out in rows]
    Path(path).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "vectors")
    out.mkdir(parents=True, exist_ok=True)
    write(out / "codec.txt", "<type>/<name> <fields hex> <encoding hex>", codec_vectors())
    write(out / "chain.txt", "chain/<name> <x0||r0 hex> <x_1||...||x_n hex>", chain_vectors())
