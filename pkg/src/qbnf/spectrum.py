"""Forward model: quasi-eigenvalue lattices from a normal form."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ScheduleError, SearchBoundError
from .normal_form import NormalForm

UNMATCHED = int(np.iinfo(np.int64).min)


@dataclass(frozen=True)
class QuantizationData:
    """Maslov indices ``k0`` and actions ``S`` of the torus."""

    k0: tuple = (0, 0)
    S: tuple = (0.0, 0.0)

    def to_json_obj(self):
        return {"k0": list(self.k0), "S": list(self.S)}


@dataclass(frozen=True)
class SpectralWindow:
    """``|Re z| < h^delta / C`` and ``|Im z - eps Re F| < eps h^delta / C``."""

    delta: float
    C: float
    F: complex = 0j

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.C <= 0:
            raise ValueError("C must be positive")

    def radius(self, h: float) -> float:
        return h ** self.delta / self.C

    def contains(self, z, h: float, eps: float):
        z = np.asarray(z)
        r = self.radius(h)
        return (np.abs(z.real) < r) & (np.abs(z.imag - eps * complex(self.F).real) < eps * r)

    def to_json_obj(self):
        F = complex(self.F)
        return {"delta": self.delta, "C": self.C, "F": [F.real, F.imag]}

    @classmethod
    def from_json_obj(cls, obj):
        F = obj.get("F", 0.0)
        if isinstance(F, (list, tuple)):
            F = complex(F[0], F[1])
        return cls(float(obj["delta"]), float(obj["C"]), complex(F))


@dataclass
class SpectralRecord:
    h: float
    eps: float
    eigenvalues: np.ndarray
    labels: np.ndarray | None = None
    beta: float | None = None
    filtered: bool = True
    k_search_bound: int | None = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=complex).reshape(-1)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1, 2)
            if len(self.labels) != len(self.eigenvalues):
                raise ValueError("labels and eigenvalues differ in length")

    def stripped(self) -> "SpectralRecord":
        return replace(self, labels=None)

    def to_json_obj(self) -> dict:
        obj = {"h": self.h, "eps": self.eps, "beta": self.beta,
               "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues]}
        if self.labels is not None:
            # unmatched points carry the INT_MIN sentinel in memory and null on disk
            obj["labels"] = [None if k[0] == UNMATCHED else k for k in self.labels.tolist()]
        if not self.filtered:
            obj["filtered"] = False
        if self.k_search_bound is not None:
            obj["k_search_bound"] = self.k_search_bound
        return obj

    @classmethod
    def from_json_obj(cls, obj) -> "SpectralRecord":
        ev = np.array([complex(re, im) for re, im in obj["eigenvalues"]], dtype=complex)
        labels = obj.get("labels")
        if labels is not None:
            labels = np.array([[UNMATCHED, UNMATCHED] if k is None else k for k in labels], dtype=np.int64).reshape(-1, 2)
        return cls(float(obj["h"]), float(obj["eps"]), ev, labels,
                   obj.get("beta"), obj.get("filtered", True), obj.get("k_search_bound"))


@dataclass
class SpectralDataset:
    records: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def stripped(self) -> "SpectralDataset":
        return SpectralDataset([r.stripped() for r in self.records])

    def dumps(self) -> str:
        return "".join(json.dumps(r.to_json_obj()) + "\n" for r in self.records)

    @classmethod
    def loads(cls, text: str) -> "SpectralDataset":
        return cls([SpectralRecord.from_json_obj(json.loads(line)) for line in text.splitlines() if line.strip()])


def bohr_sommerfeld_action(k, h: float, quant: QuantizationData) -> np.ndarray:
    """Action values ``h (k - k0/4) - S / (2 pi)``; ``k`` may be an (..., 2) array."""
    k = np.asarray(k, dtype=float)
    return h * (k - np.asarray(quant.k0, dtype=float) / 4) - np.asarray(quant.S, dtype=float) / (2 * np.pi)


def quasi_eigenvalue(nf: NormalForm, xi, eps: float, h: float):
    return nf(xi, eps, h)


def lattice_center(h: float, quant: QuantizationData) -> np.ndarray:
    """Integer point whose action is closest to zero."""
    return np.rint(np.asarray(quant.S, dtype=float) / (2 * np.pi * h) + np.asarray(quant.k0, dtype=float) / 4).astype(int)


def default_search_bound(a, h: float, win: SpectralWindow, nf: NormalForm | None = None,
                         eps: float | None = None) -> int:
    """Box half-width covering the window with a factor-2 margin.

    With only ``a``: the smallest K with ``|a| h K / 2 >= 2 r`` (r the window
    radius).  Given the normal form, the window's preimage is estimated from
    the Jacobian of ``xi -> (Re z, Im z / eps)`` at the torus instead, which
    also accounts for the imaginary constraint.
    """
    r = win.radius(h)
    K = math.ceil(4 * r / (np.linalg.norm(a) * h))
    if nf is not None and eps:
        t = 1e-6
        base = nf(np.zeros((1, 2)), eps, h)[0]
        cols = [(nf(np.array([[t, 0.0]]), eps, h)[0] - base) / t,
                (nf(np.array([[0.0, t]]), eps, h)[0] - base) / t]
        J = np.array([[c.real for c in cols], [c.imag / eps for c in cols]])
        if abs(np.linalg.det(J)) > 1e-8 * max(np.abs(J).max() ** 2, 1e-300):
            reach = np.abs(np.linalg.inv(J)).sum(axis=1).max() * r
            K = max(K, math.ceil(2 * reach / h))
    return max(1, K)


def _box(center, K: int) -> np.ndarray:
    r = np.arange(-K, K + 1)
    k = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)
    return k + np.asarray(center)


def check_eps(h: float, eps: float, delta: float, M: float) -> None:
    if not (h ** M * (1 - 1e-12) <= eps <= h ** delta * (1 + 1e-12)):
        raise ScheduleError(f"eps={eps:.3e} outside [h^{M}, h^{delta}] for h={h:.3e}")


def generate_spectrum(nf: NormalForm, quant: QuantizationData, win: SpectralWindow, h: float, eps: float,
                      k_search_bound: int | None = None, *, M: float = 10.0) -> SpectralRecord:
    """Quasi-eigenvalues inside the window, labelled by their lattice point.

    Lattice points with ``|k - center|_inf <= k_search_bound`` are enumerated
    (default :func:`default_search_bound`).  If a point on the boundary ring
    of that box lands in the window the box does not cover the window and
    :class:`SearchBoundError` is raised.  The bound is never enlarged
    automatically: far from the torus a truncated normal form can fold back
    into the window, and those points are not quasi-eigenvalues.
    """
    check_eps(h, eps, win.delta, M)
    if nf.frequency is not None:
        a = nf.frequency.a
    else:
        lin = nf[(1, 0, 0)].coeffs
        a = (lin[0].real, lin[1].real)
    K = int(k_search_bound) if k_search_bound is not None else default_search_bound(a, h, win, nf, eps)
    center = lattice_center(h, quant)
    k = _box(center, K)
    z = nf(bohr_sommerfeld_action(k, h, quant), eps, h)
    inside = win.contains(z, h, eps)
    ring = np.max(np.abs(k - center), axis=1) == K
    if np.any(inside & ring):
        raise SearchBoundError(f"k_search_bound={K} too small: boundary lattice points lie inside the window")
    return SpectralRecord(h, eps, z[inside], k[inside], None, True, K)


def inject_noise(ds: SpectralDataset, beta: float, seed: int) -> SpectralDataset:
    """Perturb each eigenvalue uniformly in the disk of radius ``h^beta``.

    ``beta = inf`` leaves the data untouched.  Noisy records are marked
    unfiltered since points may leave the window.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if math.isinf(beta):
        return SpectralDataset([replace(r) for r in ds.records])
    rng = np.random.default_rng(seed)
    out = []
    for r in ds.records:
        n = len(r.eigenvalues)
        rad = r.h ** beta * np.sqrt(rng.random(n))
        ang = 2 * np.pi * rng.random(n)
        out.append(replace(r, eigenvalues=r.eigenvalues + rad * np.exp(1j * ang), beta=float(beta), filtered=False))
    return SpectralDataset(out)
