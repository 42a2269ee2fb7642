"""Independent oracle for frozen test values.

Recomputes, without any of the Rust code, the reference generator, derived
keys, sample tag streams, and SP 800-22 p-values on fixed bit strings. The
printed JSON is frozen into tests/oracle.rs.

Requires: cryptography, numpy, scipy.
"""
import hashlib
import json
import math
import struct

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from scipy.special import erfc, gammaincc
from scipy.stats import norm

M64 = (1 << 64) - 1


def splitmix(seed):
    state = seed
    while True:
        state = (state + 0x9E3779B97F4A7C15) & M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        yield z ^ (z >> 31)


def reference_bytes(seed, stream_id, length, offset=0):
    sm = splitmix(seed)
    w0 = next(sm)
    w1 = next(sm) ^ stream_id
    key = struct.pack("<QQ", w0, w1)
    first = offset // 16
    last = (offset + length + 15) // 16
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    blocks = b"".join(enc.update(j.to_bytes(16, "big")) for j in range(first, last))
    start = offset - first * 16
    return blocks[start:start + length]


def derive_seed(master, label, index):
    return struct.unpack("<Q", reference_bytes(master, label, 8, index * 8))[0]


CIPHER_KEY, RANDOM_PMN, REFERENCE_DATA, RUN_SEEDS = 0, 1, 4, 5


def le(i, n):
    return i.to_bytes(n, "little")


def gcm_tags(key, mode, count, seed):
    out = []
    for i in range(count):
        if mode == "zero":
            pmn = bytes(12)
        elif mode == "counter":
            pmn = le(i, 12)
        else:
            pmn = reference_bytes(seed, RANDOM_PMN, 12, i * 12)
        ct = AESGCM(key).encrypt(pmn, le(i, 16), bytes(2))
        out.append(ct[16:].hex())
    return out


def prftag_tag(key, smn, pmn, adata, pt):
    msg = b"\x02"
    for f in (key, smn, pmn, adata, pt):
        msg += struct.pack("<Q", len(f)) + f
    return hashlib.sha3_256(msg).digest()[:16]


def bits_of(data):
    return [(b >> (7 - k)) & 1 for b in data for k in range(8)]


# SP 800-22 tests, written from the published descriptions.

def monobit(e):
    s = sum(2 * x - 1 for x in e)
    return erfc(abs(s) / math.sqrt(len(e)) / math.sqrt(2))


def block_frequency(e, m):
    n = len(e) // m
    chi = 4 * m * sum((sum(e[i * m:(i + 1) * m]) / m - 0.5) ** 2 for i in range(n))
    return gammaincc(n / 2, chi / 2)


def runs(e):
    n = len(e)
    pi = sum(e) / n
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        return 0.0
    v = 1 + sum(e[k] != e[k + 1] for k in range(n - 1))
    return erfc(abs(v - 2 * n * pi * (1 - pi)) / (2 * math.sqrt(2 * n) * pi * (1 - pi)))


LONGEST = {
    8: (3, [1, 2, 3, 4], [0.2148, 0.3672, 0.2305, 0.1875]),
    128: (5, [4, 5, 6, 7, 8, 9], [0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124]),
    10000: (6, [10, 11, 12, 13, 14, 15, 16], [0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727]),
}


def longest_run(e):
    n = len(e)
    m = 8 if n < 6272 else (128 if n < 750000 else 10000)
    k, classes, pis = LONGEST[m]
    counts = [0] * (k + 1)
    for i in range(n // m):
        best = cur = 0
        for x in e[i * m:(i + 1) * m]:
            cur = cur + 1 if x else 0
            best = max(best, cur)
        idx = min(max(best, classes[0]), classes[-1]) - classes[0]
        counts[idx] += 1
    nb = n // m
    chi = sum((counts[i] - nb * pis[i]) ** 2 / (nb * pis[i]) for i in range(k + 1))
    return gammaincc(k / 2, chi / 2)


def cusum(e, forward=True):
    n = len(e)
    xs = [2 * x - 1 for x in (e if forward else e[::-1])]
    z = max(abs(v) for v in np.cumsum(xs))
    rn = math.sqrt(n)
    s1 = sum(norm.cdf((4 * k + 1) * z / rn) - norm.cdf((4 * k - 1) * z / rn)
             for k in range(int((-n / z + 1) // 4), int((n / z - 1) // 4) + 1))
    s2 = sum(norm.cdf((4 * k + 3) * z / rn) - norm.cdf((4 * k + 1) * z / rn)
             for k in range(int((-n / z - 3) // 4), int((n / z - 1) // 4) + 1))
    return 1 - s1 + s2


def psi2(e, m):
    if m <= 0:
        return 0.0
    n = len(e)
    ext = e + e[:m - 1]
    counts = {}
    for i in range(n):
        key = tuple(ext[i:i + m])
        counts[key] = counts.get(key, 0) + 1
    return (2 ** m) / n * sum(c * c for c in counts.values()) - n


def serial(e, m):
    p0, p1, p2 = psi2(e, m), psi2(e, m - 1), psi2(e, m - 2)
    d1 = p0 - p1
    d2 = p0 - 2 * p1 + p2
    return gammaincc(2 ** (m - 2), d1 / 2), gammaincc(2 ** (m - 3), d2 / 2)


def phi(e, m):
    n = len(e)
    ext = e + e[:m - 1]
    counts = {}
    for i in range(n):
        key = tuple(ext[i:i + m])
        counts[key] = counts.get(key, 0) + 1
    return sum((c / n) * math.log(c / n) for c in counts.values())


def approximate_entropy(e, m):
    n = len(e)
    apen = phi(e, m) - phi(e, m + 1)
    chi = 2 * n * (math.log(2) - apen)
    return gammaincc(2 ** (m - 1), chi / 2)


def dft(e):
    n = len(e)
    x = np.array([2 * v - 1 for v in e], dtype=float)
    mod = np.abs(np.fft.fft(x))[: n // 2]
    t = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2
    n1 = int(np.sum(mod < t))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4)
    return erfc(abs(d) / math.sqrt(2))


def s(x):
    return [int(c) for c in x]


EPS100 = s("1100100100001111110110101010001000100001011010001100001000110100"
           "110001001100011001100010100010111000")
LR128 = s("11001100000101010110110001001100111000000000001001001101010100010001"
          "001111010110100000001101011111001100111001101101100010110010")


def battery_on(e):
    s1, s2 = serial(e, 2)
    return {
        "monobit": monobit(e),
        "block_frequency_128": block_frequency(e, 128),
        "runs": runs(e),
        "longest_run_of_ones": longest_run(e),
        "cusum_forward": cusum(e, True),
        "cusum_backward": cusum(e, False),
        "serial_1": s1,
        "serial_2": s2,
        "approximate_entropy_2": approximate_entropy(e, 2),
        "spectral_dft": dft(e),
    }


def main():
    sm = splitmix(0)
    key1 = reference_bytes(1, CIPHER_KEY, 16)
    key1_32 = reference_bytes(1, CIPHER_KEY, 32)
    ref = reference_bytes(7, REFERENCE_DATA, 1250)
    out = {
        "splitmix64_seed0": ["%016x" % next(sm) for _ in range(3)],
        "reference_42_4_first40": reference_bytes(42, REFERENCE_DATA, 40).hex(),
        "reference_42_4_offset37_len9": reference_bytes(42, REFERENCE_DATA, 9, 37).hex(),
        "derive_seed_7_5_3": derive_seed(7, RUN_SEEDS, 3),
        "derive_key_1_16": key1.hex(),
        "aes128gcm_seed1": {m: gcm_tags(key1, m, 3, 1) for m in ("zero", "counter", "random")},
        "aes256gcm_seed1_zero": gcm_tags(key1_32, "zero", 2, 1),
        "prftag_seed1_counter": [
            prftag_tag(key1, b"", le(i, 16), bytes(2), le(i, 16)).hex() for i in range(2)
        ],
        "nist_examples": {
            "monobit_1011010101": monobit(s("1011010101")),
            "runs_1001101011": runs(s("1001101011")),
            "block_frequency_0110011010_m3": block_frequency(s("0110011010"), 3),
            "longest_run_128": longest_run(LR128),
            "cusum_forward_eps100": cusum(EPS100, True),
            "cusum_backward_eps100": cusum(EPS100, False),
            "serial_0011011101_m3": serial(s("0011011101"), 3),
            "apen_0100110101_m3": approximate_entropy(s("0100110101"), 3),
            "apen_eps100_m2": approximate_entropy(EPS100, 2),
            "dft_1001010011": dft(s("1001010011")),
            "monobit_eps100": monobit(EPS100),
            "runs_eps100": runs(EPS100),
            "block_frequency_eps100_m10": block_frequency(EPS100, 10),
        },
        "reference_7_4_10000bits": battery_on(bits_of(ref)),
        "reference_7_4_1024bits": battery_on(bits_of(ref[:128])),
        "reference_7_4_128bits_block_frequency_m8": block_frequency(bits_of(ref[:16]), 8),
    }
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
