#!/usr/bin/env python3
"""Independent oracle for the pinned ledger hashes.

Builds the fixture block used by test_ledger.cpp directly from the canonical
byte layout with struct + hashlib and prints the transaction ids and the
block hash. Re-run after changing the fixture and update the pinned values.
"""
import hashlib
import struct


def tx_bytes(from_account, to_account, amount, gas, payload_hash, ts):
    out = b""
    for name in (from_account, to_account):
        raw = name.encode("utf-8")
        out += struct.pack(">I", len(raw)) + raw
    out += struct.pack(">QQ", amount, gas) + payload_hash + struct.pack(">q", ts)
    return out


txs = [
    tx_bytes("meter-001", "utility", 60900, 22600, bytes([0xAA] * 32), 1700000000123),
    tx_bytes("consumer-ß", "utility", 0, 21000, bytes([0x11] * 32), -5),
]
block = struct.pack(">IQq", 1, 1, 1700000000999) + bytes(range(32)) + struct.pack(">I", len(txs))
block += b"".join(txs)

for t in txs:
    print("tx_id", hashlib.sha256(t).hexdigest())
print("block", hashlib.sha256(block).hexdigest())

genesis = struct.pack(">IQq", 1, 0, 0) + bytes(32) + struct.pack(">I", 0)
print("genesis0", hashlib.sha256(genesis).hexdigest())
