"""Seeded Rayleigh channel generation and bit-exact channel files.

Random numbers come from numpy's counter-based ``Philox`` bit generator keyed
by the 64-bit seed.  Each complex entry consumes two consecutive standard
normal draws (real, then imaginary), and the links are drawn in the order
``G`` (row-major), ``f``, ``h``.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .model import ChannelSet, DimensionError, Scenario

MAGIC = b"AIRSCH01"
_HEADER = struct.Struct("<8sIIQ32s")


class ChannelFileError(IOError):
    """Corrupted or mismatched channel file."""


def path_gain(d: float, alpha: float, pl0_db: float = -30.0) -> float:
    """Large-scale power gain ``10^(pl0_db/10) * d^-alpha``."""
    if not d > 0:
        raise ValueError(f"distance must be > 0, got {d}")
    return 10.0 ** (pl0_db / 10.0) * d ** (-alpha)


def link_gains(scn: Scenario) -> tuple[float, float, float]:
    """Path gains of the (BS-IRS, IRS-user, BS-user) links."""
    return (
        path_gain(scn.d_bi, scn.alpha_bi, scn.pl0_db),
        path_gain(scn.d_iu, scn.alpha_iu, scn.pl0_db),
        path_gain(scn.d_bu, scn.alpha_bu, scn.pl0_db),
    )


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by ``(seed, stream)``; stream 0 draws channels."""
    key = [int(seed) & (2**64 - 1), int(stream) & (2**64 - 1)]
    return np.random.Generator(np.random.Philox(key=key))


def _cn(rng: np.random.Generator, count: int, var: float) -> np.ndarray:
    pairs = rng.standard_normal(2 * count).reshape(count, 2)
    return np.sqrt(var / 2.0) * (pairs[:, 0] + 1j * pairs[:, 1])


def generate(scn: Scenario, seed: int) -> ChannelSet:
    """Draw one i.i.d. Rayleigh realization scaled by each link's path gain."""
    n, m = scn.n_elements, scn.m_antennas
    g_bi, g_iu, g_bu = link_gains(scn)
    rng = make_rng(seed)
    g = _cn(rng, n * m, g_bi).reshape(n, m)
    f = _cn(rng, n, g_iu)
    h = _cn(rng, m, g_bu)
    return ChannelSet(g, f, h)


def scenario_digest(scn: Scenario) -> bytes:
    """SHA-256 over the canonical JSON form of the scenario."""
    blob = json.dumps(asdict(scn), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).digest()


def save(ch: ChannelSet, path, scn: Scenario | None = None, seed: int = 0) -> None:
    digest = scenario_digest(scn) if scn is not None else bytes(32)
    header = _HEADER.pack(MAGIC, ch.n, ch.m, int(seed) & (2**64 - 1), digest)
    payload = np.concatenate([ch.g.reshape(-1), ch.f, ch.h]).astype("<c16")
    Path(path).write_bytes(header + payload.tobytes())


def load(path, scn: Scenario | None = None) -> ChannelSet:
    """Read a channel file; with ``scn`` given, check dimensions and digest."""
    ch, _ = load_with_header(path, scn)
    return ch


def load_with_header(path, scn: Scenario | None = None):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ChannelFileError(f"{path}: truncated header")
    magic, n, m, seed, digest = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ChannelFileError(f"{path}: bad magic {magic!r}")
    count = n * m + n + m
    body = raw[_HEADER.size:]
    if len(body) != 16 * count:
        raise ChannelFileError(f"{path}: expected {16 * count} payload bytes, got {len(body)}")
    if scn is not None:
        if (n, m) != (scn.n_elements, scn.m_antennas):
            raise DimensionError("channel file", (scn.n_elements, scn.m_antennas), (n, m))
        if digest != bytes(32) and digest != scenario_digest(scn):
            raise ChannelFileError(f"{path}: scenario digest mismatch")
    data = np.frombuffer(body, dtype="<c16").astype(complex)
    g = data[: n * m].reshape(n, m)
    f = data[n * m : n * m + n]
    h = data[n * m + n :]
    return ChannelSet(g, f, h), {"n": n, "m": m, "seed": seed, "digest": digest}
