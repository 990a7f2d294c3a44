"""Derivation of independent per-subsystem RNG streams from one master seed.

Each consumer (environment noise per channel, radio medium) gets its own
64-bit seed derived by hashing a stable label, so changing one subsystem's
draw pattern can never perturb another's.
"""

from __future__ import annotations

import hashlib


def derive_stream_seed(master_seed: int, label: str) -> int:
    """64-bit seed for the stream named `label`, stable across runs."""
    digest = hashlib.blake2b(f"{master_seed}:{label}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")
