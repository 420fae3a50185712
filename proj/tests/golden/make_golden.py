#!/usr/bin/env python3
"""Writes the wire fixtures. Encodes with struct directly so the fixtures do
not depend on the C++ codec they check."""
import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))


def u32(n):
    return struct.pack(">I", n)


def f64(x):
    return struct.pack(">d", x)


FIXTURES = {
    "int.bin": b"\x01" + struct.pack(">i", 42),
    "int_negative.bin": b"\x01" + struct.pack(">i", -123456789),
    "double.bin": b"\x02" + f64(3.25),
    "double_array.bin": b"\x03" + u32(3) + f64(1.0) + f64(-2.5) + f64(0.1),
    "double_array_empty.bin": b"\x03" + u32(0),
    "double_matrix.bin": b"\x04" + u32(2) + u32(3) + b"".join(f64(v) for v in [1, 2, 3, 4, 5, 6]),
    "particle_array.bin": b"\x05" + u32(2)
    + b"".join(f64(v) for v in [0.5, -0.25, 1.0, 0.0, 2.0])
    + b"".join(f64(v) for v in [-1.0, 1.0, 0.0, -0.5, 0.75]),
    "flag_true.bin": b"\x06\x01",
    "flag_false.bin": b"\x06\x00",
    "failure.bin": b"\xff",
}

# One handshake: the client of a pi worker offers its type, the worker accepts.
CLIENT_TYPE = "cbegin.!<int>.?(int)".encode("utf-8")
FIXTURES["handshake_hello.bin"] = b"SJP1" + u32(len(CLIENT_TYPE)) + CLIENT_TYPE
FIXTURES["handshake_accept.bin"] = b"\x01"
FIXTURES["handshake_reject.bin"] = b"\x00"

if __name__ == "__main__":
    for name, data in FIXTURES.items():
        with open(os.path.join(HERE, name), "wb") as f:
            f.write(data)
    print(f"wrote {len(FIXTURES)} fixtures")
