"""Diophantine frequency vectors and their exhaustive certification."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DiophantineError


def _lattice(K: int) -> np.ndarray:
    r = np.arange(-K, K + 1)
    k = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)
    return k[np.any(k != 0, axis=1)]


def _canonical_order(k: np.ndarray) -> np.ndarray:
    # smallest norm first, then first nonzero component positive, then lexicographic
    first = np.where(k[:, 0] != 0, k[:, 0], k[:, 1])
    return np.lexsort((k[:, 1], k[:, 0], first < 0, np.abs(k).sum(axis=1), np.max(np.abs(k), axis=1)))


def diophantine_margin(a, C0: float, N0: float, K: int):
    """Return ``(worst_k, ratio)`` where ``ratio = min |a.k| C0 |k|^N0`` over 0 < |k|_inf <= K.

    The condition ``|a.k| >= 1 / (C0 |k|^N0)`` holds on the box iff ratio >= 1.
    """
    a = np.asarray(a, dtype=float)
    k = _lattice(int(K))
    ratio = np.abs(k @ a) * C0 * np.linalg.norm(k, axis=1) ** N0
    order = _canonical_order(k)
    worst = order[np.argmin(ratio[order])]
    return tuple(int(v) for v in k[worst]), float(ratio[worst])


def min_constant(a, N0: float, K: int) -> float:
    """Smallest C0 certifying ``a`` on the box of radius K with exponent N0."""
    a = np.asarray(a, dtype=float)
    k = _lattice(int(K))
    prod = np.abs(k @ a) * np.linalg.norm(k, axis=1) ** N0
    m = prod.min()
    if m == 0:
        raise DiophantineError(f"a = {tuple(a)} is resonant within |k| <= {K}")
    return float(1.0 / m)


def separation_witness(a, D: int) -> float:
    """min |a.dk| over 0 < |dk|_inf <= D, computed exhaustively."""
    a = np.asarray(a, dtype=float)
    return float(np.abs(_lattice(int(D)) @ a).min())


@dataclass(frozen=True)
class FrequencyData:
    """Frequency vector ``a`` certified Diophantine on ``0 < |k|_inf <= certified_radius``.

    The bound ``|a.k| >= 1 / (C0 |k|^N0)`` (Euclidean ``|k|``) is checked
    exhaustively on construction.
    """

    a: tuple
    C0: float
    N0: float
    certified_radius: int
    _ratio: float = field(default=0.0, repr=False, compare=False)

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if len(a) != 2 or not any(a):
            raise ValueError("a must be a nonzero 2-vector")
        if self.C0 <= 0 or self.N0 <= 0 or self.certified_radius < 1:
            raise ValueError("C0, N0 must be positive and certified_radius >= 1")
        object.__setattr__(self, "a", a)
        k, ratio = diophantine_margin(a, self.C0, self.N0, self.certified_radius)
        if ratio < 1.0:
            achieved = abs(a[0] * k[0] + a[1] * k[1])
            required = 1.0 / (self.C0 * float(np.hypot(*k)) ** self.N0)
            raise DiophantineError(
                f"Diophantine bound violated at k={k}: |a.k| = {achieved:.3e} < {required:.3e}",
                k=k, achieved=achieved, required=required)
        object.__setattr__(self, "_ratio", ratio)

    def divisor(self, n) -> float:
        return self.a[0] * n[0] + self.a[1] * n[1]

    def to_json_obj(self) -> dict:
        return {"a": list(self.a), "C0": self.C0, "N0": self.N0, "certified_radius": self.certified_radius}


def check_diophantine(a, C0: float, N0: float, K: int) -> FrequencyData:
    """Certify ``a`` on the box ``0 < |k|_inf <= K`` or raise :class:`DiophantineError`."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return FrequencyData(tuple(a), float(C0), float(N0), int(K))


def auto_frequency(a, K: int, N0: float = 2.0, slack: float = 2.0) -> FrequencyData:
    """Certify ``a`` with the smallest admissible C0 times ``slack``."""
    return check_diophantine(a, slack * min_constant(a, N0, K), N0, K)
