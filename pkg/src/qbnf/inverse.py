"""Recover normal-form coefficients from labelled quasi-eigenvalues.

Unknown terms ``P_jkl(xi) eps^k h^l`` (k >= 1) are grouped into classes of
indices whose sizes ``eps^k h^(delta j + l)`` are comparable under the eps
schedule.  Classes are fitted from the slowest decay rate to the fastest by
linear least squares on the residual ``z - known(xi)``; only class sums are
identifiable, so multi-member classes report a single polynomial.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import OrderingError, RankDeficiencyError, ScheduleError
from .normal_form import NormalForm
from .spectrum import UNMATCHED, QuantizationData, SpectralDataset, bohr_sommerfeld_action
from .symbols import HomogeneousPolynomial

_RATE_TOL = 1e-9


# ---------------------------------------------------------------------------
# eps schedules


@dataclass(frozen=True)
class FreeEps:
    """eps may be chosen freely; data use ``eps = h^alpha`` with a generic alpha.

    ``alpha=None`` means ``delta + (1 - delta) / sqrt(2)``.
    """

    alpha: float | None = None

    def exponent(self, delta: float) -> float:
        return delta + (1 - delta) / math.sqrt(2) if self.alpha is None else self.alpha

    def eps(self, h: float, delta: float) -> float:
        return h ** self.exponent(delta)

    def describe(self) -> str:
        return "free" if self.alpha is None else f"free:{self.alpha!r}"


@dataclass(frozen=True)
class FixedPower:
    """eps = h^s for a fixed exponent s."""

    s: float

    def exponent(self, delta: float) -> float:
        return float(self.s)

    def eps(self, h: float, delta: float) -> float:
        return h ** self.s

    def describe(self) -> str:
        return f"fixed:{self.s!r}"


def parse_schedule(text: str):
    """``free``, ``free:<alpha>`` or ``fixed:<s>`` (s may be a fraction like 1/2)."""
    kind, _, arg = text.partition(":")
    if kind == "free":
        return FreeEps(float(_fraction(arg)) if arg else None)
    if kind == "fixed" and arg:
        return FixedPower(float(_fraction(arg)))
    raise ScheduleError(f"unknown schedule {text!r}")


def _fraction(text: str) -> float:
    num, _, den = text.partition("/")
    return float(num) / float(den) if den else float(num)


# ---------------------------------------------------------------------------
# classes


@dataclass(frozen=True)
class IndexClass:
    """Indices ``(j, k, l)`` sharing one decay rate under the schedule.

    ``rate_exponent`` is ``s k + l`` (eps = h^s) and ``decay_exponent`` adds
    ``delta j``.  ``excluded`` marks classes at or below the noise floor.
    """

    members: tuple
    j: int
    rate_exponent: float
    decay_exponent: float
    excluded: bool = False

    @property
    def identifiable(self) -> bool:
        return len(self.members) == 1

    @property
    def representative(self) -> tuple:
        return self.members[0]

    def label(self) -> str:
        return "+".join(f"({j},{k},{l})" for j, k, l in self.members)


def target_indices(max_grading: int) -> list[tuple[int, int, int]]:
    """All (j, k, l) with k >= 1 and j + 2(k + l) <= max_grading."""
    out = []
    for k in range(1, max_grading // 2 + 1):
        for l in range(0, (max_grading - 2 * k) // 2 + 1):
            for j in range(0, max_grading - 2 * (k + l) + 1):
                out.append((j, k, l))
    return sorted(out)


def floor_exponent(idx, schedule, delta: float) -> float:
    """Exponent compared against beta to decide the noise floor."""
    j, k, l = idx
    if isinstance(schedule, FreeEps):
        # eps may be taken as large as h^delta
        return (j + k) * delta + l
    return delta * j + schedule.exponent(delta) * k + l


def classify_indices(indices: Iterable, schedule, delta: float, beta: float = math.inf) -> list[IndexClass]:
    """Group indices with equal j and equal ``s k + l``; order by decay, smaller j first on ties."""
    s = schedule.exponent(delta)
    groups: list[list] = []
    for idx in sorted(set(tuple(int(v) for v in i) for i in indices)):
        j, k, l = idx
        r = s * k + l
        for g in groups:
            gj, gk, gl = g[0]
            if gj == j and abs(s * gk + gl - r) <= _RATE_TOL:
                g.append(idx)
                break
        else:
            groups.append([idx])
    classes = []
    for g in groups:
        j, k, l = g[0]
        r = s * k + l
        floor = max(floor_exponent(m, schedule, delta) for m in g)
        classes.append(IndexClass(tuple(g), j, r, delta * j + r, floor >= beta - 1e-12))
    classes.sort(key=lambda c: (round(c.decay_exponent, 9), c.j, c.members))
    return classes


# ---------------------------------------------------------------------------
# fitting


@dataclass
class ClassFit:
    polynomial: HomogeneousPolynomial
    residual_norm: float
    rank: int
    n_points: int
    mismatch: bool = False


def _band_mask(xi_norm: np.ndarray, h: float, delta: float, band) -> np.ndarray:
    if band is None:
        return np.ones(len(xi_norm), dtype=bool)
    lo, hi = band
    d2 = 0.8 * delta
    return (((xi_norm >= lo * h ** delta) & (xi_norm <= hi * h ** delta))
            | ((xi_norm >= lo * h ** d2) & (xi_norm <= hi * h ** d2)))


def _records(ds: SpectralDataset):
    for r in ds.records:
        if r.labels is None:
            continue
        ok = r.labels[:, 0] != UNMATCHED
        if np.any(ok):
            yield r, r.labels[ok], r.eigenvalues[ok]


def _known_prediction(known: dict, xi: np.ndarray, eps: float, h: float) -> np.ndarray:
    out = np.zeros(len(xi), dtype=complex)
    for (j, k, l), poly in known.items():
        out += poly(xi) * (eps ** k * h ** l)
    return out


def fit_class(ds: SpectralDataset, known, cls: IndexClass, quant: QuantizationData, delta: float, *,
              nuisance: Sequence[IndexClass] = (), prerequisites: Sequence[IndexClass] = (),
              band=None, beta: float = math.inf) -> ClassFit:
    """Least-squares fit of one class's summed polynomial.

    Parameters
    ----------
    ds : labelled dataset
    known : NormalForm or dict ``(j, k, l) -> HomogeneousPolynomial`` of recovered terms
    cls : the class to fit
    nuisance : classes decaying faster than ``cls`` that are fitted jointly
        and discarded; without them their contribution is treated as noise
    prerequisites : classes that must already be in ``known``
    band : ``(lo, hi)`` multiples of ``h^delta`` (and of ``h^(0.8 delta)``)
        selecting the sample points; ``None`` keeps every point
    beta : noise exponent; when finite, rows are weighted by ``h^-beta`` so
        every record's noise has unit size, and a weighted rms residual above
        one flags a model mismatch
    """
    known = dict(known.coeffs if isinstance(known, NormalForm) else known)
    for pre in prerequisites:
        if pre.representative not in known:
            raise OrderingError(f"class {pre.label()} must be recovered before {cls.label()}")

    blocks = [cls, *nuisance]
    rows, rhs, data = [], [], []
    n_points = 0
    for rec, labels, z in _records(ds):
        xi = bohr_sommerfeld_action(labels, rec.h, quant)
        use = _band_mask(np.linalg.norm(xi, axis=1), rec.h, delta, band)
        if not np.any(use):
            continue
        xi, z = xi[use], z[use]
        n_points += len(z)
        j0, k0, l0 = cls.representative
        scale = rec.eps ** k0 * rec.h ** l0
        cols = []
        for b in blocks:
            jb, kb, lb = b.representative
            fac = rec.eps ** kb * rec.h ** lb
            for p, q in ((jb - i, i) for i in range(jb + 1)):
                cols.append(xi[:, 0] ** p * xi[:, 1] ** q * fac)
        w = 1.0 / scale if math.isinf(beta) else 1.0 / rec.h ** beta
        rows.append(np.stack(cols, axis=1) * w)
        rhs.append((z - _known_prediction(known, xi, rec.eps, rec.h)) * w)
        data.append(z * w)
    ncols = sum(b.j + 1 for b in blocks)
    if not rows:
        raise RankDeficiencyError(f"no labelled points available for class {cls.label()}", rank=0, needed=ncols)
    X = np.concatenate(rows)
    y = np.concatenate(rhs)
    norms = np.linalg.norm(X, axis=0)
    norms[norms == 0] = 1.0
    Xs = X / norms
    sol, _, rank, sv = np.linalg.lstsq(Xs, y, rcond=None)
    tol = sv.max() * max(Xs.shape) * np.finfo(float).eps if len(sv) else 0.0
    rank = int(np.sum(sv > tol))
    if rank < ncols:
        raise RankDeficiencyError(f"class {cls.label()}: design rank {rank} < {ncols} unknowns", rank=rank, needed=ncols)
    coef = sol / norms
    resid = y - X @ coef
    rnorm = float(np.linalg.norm(resid) / math.sqrt(len(y)))
    # noiseless: residuals must sit at rounding level relative to the data
    scale = float(np.linalg.norm(np.concatenate(data)) / math.sqrt(len(y))) or 1.0
    expected = 1.0 if math.isfinite(beta) else 1e-10 * scale
    poly = HomogeneousPolynomial(cls.j, tuple(coef[: cls.j + 1]))
    return ClassFit(poly, rnorm, rank, n_points, rnorm > expected)


# ---------------------------------------------------------------------------
# full recovery


@dataclass
class ClassResult:
    cls: IndexClass
    polynomial: HomogeneousPolynomial | None
    residual_norm: float | None
    mismatch: bool = False

    def to_json_obj(self) -> dict:
        c = self.cls
        obj = {"members": [list(m) for m in c.members], "j": c.j, "rate_exponent": c.rate_exponent,
               "decay_exponent": c.decay_exponent, "identifiable": c.identifiable}
        if c.excluded:
            obj["status"] = "below_floor"
        else:
            obj["status"] = "recovered"
            obj["sum"] = self.polynomial.to_json()
            obj["residual_norm"] = self.residual_norm
            obj["model_mismatch"] = self.mismatch
        return obj


@dataclass
class RecoveryReport:
    classes: list
    schedule: str
    delta: float
    beta: float
    starved: list = field(default_factory=list)

    @property
    def cutoff(self) -> list:
        return [m for c in self.classes if c.cls.excluded for m in c.cls.members]

    def recovered(self) -> dict:
        """Class members tuple -> recovered summed polynomial."""
        return {c.cls.members: c.polynomial for c in self.classes if not c.cls.excluded}

    @property
    def residual_norms(self) -> dict:
        return {c.cls.members: c.residual_norm for c in self.classes if not c.cls.excluded}

    def to_json_obj(self) -> dict:
        return {"schedule": self.schedule, "delta": self.delta,
                "beta": None if math.isinf(self.beta) else self.beta,
                "classes": [c.to_json_obj() for c in self.classes],
                "cutoff": [list(m) for m in self.cutoff], "starved": self.starved}

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj(), indent=1)


def check_schedule(ds: SpectralDataset, schedule, delta: float) -> None:
    if isinstance(schedule, FixedPower):
        for r in ds.records:
            want = schedule.eps(r.h, delta)
            if abs(r.eps - want) > 1e-9 * want:
                raise ScheduleError(f"record h={r.h} has eps={r.eps}, schedule {schedule.describe()} needs {want}")
    else:
        for r in ds.records:
            if r.eps > r.h ** delta * (1 + 1e-12):
                raise ScheduleError(f"record h={r.h} has eps={r.eps} > h^delta")


def recover(ds: SpectralDataset, seed_nf: NormalForm, schedule, delta: float, beta: float = math.inf,
            max_grading: int = 6, *, quant: QuantizationData = QuantizationData(), band=None,
            min_points: int | None = None) -> RecoveryReport:
    """Fit every eps-dependent class above the noise floor, slowest first.

    ``seed_nf`` supplies the eps-free terms, which are fixed by the
    unperturbed operator.  Each fit carries the still-unknown faster classes
    (including those below the floor) as nuisance unknowns.
    """
    check_schedule(ds, schedule, delta)
    classes = classify_indices(target_indices(max_grading), schedule, delta, beta)
    need = min_points or max(c.j + 1 for c in classes)
    starved = [r.h for r in ds.records
               if r.labels is None or np.sum(r.labels[:, 0] != UNMATCHED) < need]

    known = {i: p for i, p in seed_nf.coeffs.items() if i[1] == 0}
    results = []
    done: list[IndexClass] = []
    for pos, cls in enumerate(classes):
        if cls.excluded:
            results.append(ClassResult(cls, None, None))
            continue
        nuisance = [c for c in classes[pos + 1:] if not c.excluded]
        fit = fit_class(ds, known, cls, quant, delta, nuisance=nuisance, prerequisites=done, band=band, beta=beta)
        known[cls.representative] = fit.polynomial
        done.append(cls)
        results.append(ClassResult(cls, fit.polynomial, fit.residual_norm, fit.mismatch))
    return RecoveryReport(results, schedule.describe(), delta, beta, starved)


def true_class_sums(nf: NormalForm, report: RecoveryReport) -> dict:
    """Ground-truth sums over each recovered class (for round-trip checks)."""
    out = {}
    for members in report.recovered():
        poly = HomogeneousPolynomial.zero(members[0][0])
        for m in members:
            poly = poly + nf[m]
        out[members] = poly
    return out


def relative_error(rec: HomogeneousPolynomial, true: HomogeneousPolynomial, floor: float = 1e-12) -> float:
    """|rec - true| / |true|, or the absolute error when the truth vanishes."""
    err = (rec - true).norm()
    t = true.norm()
    return err / t if t > floor else err
