"""Recover lattice labels of unlabelled eigenvalues from their real parts."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .frequency import FrequencyData, check_diophantine, separation_witness  # noqa: F401  (re-export)
from .normal_form import NormalForm
from .spectrum import UNMATCHED, QuantizationData, _box, bohr_sommerfeld_action, lattice_center


@dataclass
class Association:
    """Outcome of :func:`associate`.

    ``labels`` maps eigenvalue index to lattice point; indices in
    ``unmatched`` were ambiguous and ``collisions`` lists lattice points
    claimed twice (both claimants are dropped).
    """

    labels: dict = field(default_factory=dict)
    unmatched: list = field(default_factory=list)
    collisions: list = field(default_factory=list)
    guard: float = 0.0
    refused: str | None = None

    @property
    def match_rate(self) -> float:
        n = len(self.labels) + len(self.unmatched)
        return len(self.labels) / n if n else 1.0

    def label_array(self, n: int) -> np.ndarray:
        """(n, 2) labels with unmatched rows set to a sentinel of INT_MIN."""
        out = np.full((n, 2), UNMATCHED, dtype=np.int64)
        for i, k in self.labels.items():
            out[i] = k
        return out


def _predictor(freq: FrequencyData, seed: NormalForm | None, h: float) -> Callable:
    if seed is None:
        a = np.asarray(freq.a)
        return lambda xi: xi @ a
    return lambda xi: np.real(seed(xi, 0.0, h))


def associate(eigenvalues: Sequence[complex], freq: FrequencyData, quant: QuantizationData, h: float,
              guard: float | None = None, *, k_search_bound: int, seed: NormalForm | None = None,
              error_bound: float = 0.0) -> Association:
    """Match each eigenvalue to the lattice point whose predicted real part is nearest.

    Parameters
    ----------
    eigenvalues : sequence of complex
    freq : FrequencyData
        Supplies ``a``; the default prediction is ``a . xi(k)``.
    quant : QuantizationData
    h : float
    guard : float, optional
        Minimum margin between best and runner-up distances.  Defaults to half
        the smallest gap between candidate predictions (which is
        ``0.5 h min |a . dk|`` for the linear predictor).
    k_search_bound : int
        Candidates are the lattice points with ``|k - center|_inf <= k_search_bound``.
    seed : NormalForm, optional
        Known eps-free normal form; its real part replaces ``a . xi`` as the
        predictor, which absorbs the nonlinear eps-free corrections.
    error_bound : float
        Known bound on ``|Re z - prediction|`` (noise plus unmodelled terms).
        When ``2 * error_bound >= guard`` no point can be certified and all are
        returned unmatched.
    """
    z = np.asarray(eigenvalues, dtype=complex).reshape(-1)
    out = Association()
    if len(z) == 0:
        return out
    center = lattice_center(h, quant)
    cand = _box(center, int(k_search_bound))
    pred = _predictor(freq, seed, h)(bohr_sommerfeld_action(cand, h, quant))
    order = np.argsort(pred, kind="stable")
    pred, cand = pred[order], cand[order]

    re = z.real
    lo, hi = re.min(), re.max()
    gaps = np.diff(pred)
    span = np.diff(pred, prepend=-np.inf)
    # gaps between candidates that can compete for some eigenvalue
    rel = (pred[1:] >= lo - 2 * gaps.max()) & (pred[:-1] <= hi + 2 * gaps.max()) if len(gaps) else []
    min_gap = float(gaps[rel].min()) if np.any(rel) else np.inf
    out.guard = 0.5 * min_gap if guard is None else float(guard)
    del span

    if 2 * error_bound >= out.guard:
        out.unmatched = list(range(len(z)))
        out.refused = "error bound exceeds separation"
        return out

    pos = np.searchsorted(pred, re)
    claimed: dict = {}
    for i, (r, p) in enumerate(zip(re, pos)):
        nb = [j for j in (p - 2, p - 1, p, p + 1) if 0 <= j < len(pred)]
        d = sorted((abs(r - pred[j]), j) for j in nb)
        d1, j1 = d[0]
        d2 = d[1][0] if len(d) > 1 else np.inf
        if d2 - d1 > out.guard and d1 <= out.guard / 2 + error_bound:
            k = tuple(int(v) for v in cand[j1])
            claimed.setdefault(k, []).append(i)
        else:
            out.unmatched.append(i)
    for k, idx in claimed.items():
        if len(idx) == 1:
            out.labels[idx[0]] = k
        else:
            out.collisions.append(k)
            out.unmatched.extend(idx)
    out.unmatched.sort()
    return out


def _local_gradient(i: int, nbrs: np.ndarray, labels: np.ndarray, known: np.ndarray, values: np.ndarray):
    """Least-squares slope of ``values`` against lattice steps around point ``i``."""
    m = [j for j in nbrs[i] if j != i and known[j]]
    if len(m) < 2:
        return None
    dk = (labels[m] - labels[i]).astype(float)
    if np.linalg.matrix_rank(dk) < 2:
        return None
    return np.linalg.lstsq(dk, values[m] - values[i], rcond=None)[0]


def associate_lattice(eigenvalues: Sequence[complex], freq: FrequencyData, quant: QuantizationData, h: float,
                      eps: float, *, k_search_bound: int, seed: NormalForm | None = None,
                      error_bound: float = 0.0, neighbors: int = 8, reach: int = 2,
                      tol: float = 0.2, guard: float = 0.2) -> Association:
    """Label eigenvalues by growing the lattice outwards from the window centre.

    Eigenvalues are placed in the plane ``(Re z / h, Im z / (eps h))`` where
    neighbouring lattice points sit O(1) apart.  Starting from the point
    nearest the centre, each new point is labelled relative to an already
    labelled neighbour by comparing its offset with local linear models of
    both coordinates; steps of at most ``reach`` per axis are tried and a step
    is accepted only if the best fit is within ``tol`` and beats every other
    step by ``guard`` (scaled units).

    The resulting labels are correct up to one global shift.  The shift is
    chosen from the real parts: exactly one shift may leave every residual
    ``|Re z - Re seed(xi)|`` below ``error_bound + tol h``, otherwise every
    point is returned unmatched.  ``error_bound`` must bound the real part of
    the unknown eps-dependent terms plus noise; the default of zero suits
    ``eps^2 << h``.
    """
    z = np.asarray(eigenvalues, dtype=complex).reshape(-1)
    n = len(z)
    out = Association(guard=guard)
    if n == 0:
        return out
    pred = _predictor(freq, seed, h)
    anchor, labels, known = _grow(z, h, eps, freq.a, neighbors, reach, tol, guard)

    idx = np.flatnonzero(known)
    rel = labels[idx]
    # global shift: anchor residual prefilter, then all labelled points
    center = lattice_center(h, quant)
    shifts = _box(center, int(k_search_bound))
    bound = error_bound + tol * h
    r_anchor = np.abs(z[anchor].real - pred(bohr_sommerfeld_action(shifts, h, quant)))
    fits = []
    for s in shifts[r_anchor <= bound]:
        r = np.abs(z[idx].real - pred(bohr_sommerfeld_action(rel + s, h, quant)))
        if r.max() <= bound:
            fits.append(s)
    if len(fits) != 1:
        out.unmatched = list(range(n))
        out.refused = "no unique lattice shift" if fits else "no consistent lattice shift"
        return out
    for i, k in zip(idx, rel + fits[0]):
        out.labels[int(i)] = (int(k[0]), int(k[1]))
    out.unmatched = [int(i) for i in np.flatnonzero(~known)]
    return out


def _grow(z: np.ndarray, h: float, eps: float, a, neighbors: int, reach: int, tol: float, guard: float):
    """Relative labels by nearest-neighbour growth; returns (anchor, labels, known)."""
    import heapq

    from scipy.spatial import cKDTree

    n = len(z)
    X = z.real / h
    Y = z.imag / (eps * h)
    pts = np.stack([X, Y - np.median(Y)], axis=1)
    kq = min(neighbors + 1, n)
    nbrs = cKDTree(pts).query(pts, k=kq)[1].reshape(n, kq)
    # symmetric adjacency so growth can cross into sparse regions
    adj = [set(row[1:].tolist()) for row in nbrs]
    for i, row in enumerate(nbrs):
        for j in row[1:]:
            adj[j].add(i)
    adj = [np.fromiter(s, dtype=int, count=len(s)) for s in adj]

    steps = _box((0, 0), reach)
    near = _box((0, 0), 1)
    a = np.asarray(a, dtype=float)
    labels = np.zeros((n, 2), dtype=np.int64)
    known = np.zeros(n, dtype=bool)
    anchor = int(np.argmin(np.einsum("ij,ij->i", pts, pts)))
    known[anchor] = True
    claimed = {(0, 0)}
    heap = [(float(np.hypot(*(pts[j] - pts[anchor]))), int(j), anchor) for j in adj[anchor]]
    heapq.heapify(heap)
    while heap:
        _, j, i = heapq.heappop(heap)
        if known[j]:
            continue
        if i == anchor:
            # bootstrap at the centre, where Re z ~ a . xi
            cand = near
            score = np.abs(X[j] - X[i] - cand @ a)
        else:
            gx = _local_gradient(i, adj, labels, known, X)
            gy = _local_gradient(i, adj, labels, known, Y)
            if gx is None or gy is None:
                continue
            cand = steps
            score = np.hypot(X[j] - X[i] - cand @ gx, Y[j] - Y[i] - cand @ gy)
        order = np.argsort(score)
        best = order[0]
        runner = score[order[1]] if len(order) > 1 else np.inf
        k = labels[i] + cand[best]
        if score[best] > tol or runner - score[best] <= guard or tuple(k) in claimed:
            continue
        labels[j] = k
        known[j] = True
        claimed.add((int(k[0]), int(k[1])))
        for m in adj[j]:
            if not known[m]:
                heapq.heappush(heap, (float(np.hypot(*(pts[m] - pts[j]))), int(m), j))
    return anchor, labels, known
