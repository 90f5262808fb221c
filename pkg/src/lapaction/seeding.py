"""Deterministic derivation of independent RNG seeds from labeled contexts."""

import hashlib

_MASK63 = (1 << 63) - 1


def derive_seed(*parts) -> int:
    """Fold labels (strings, ints, enums) into a stable 63-bit seed.

    Stable across processes and platforms, unlike the builtin ``hash``.
    Distinct label tuples give independent streams for parallel workers.
    """
    digest = hashlib.sha256()
    for part in parts:
        digest.update(str(part).encode("utf-8"))
        digest.update(b"\x1f")
    return int.from_bytes(digest.digest()[:8], "big") & _MASK63
