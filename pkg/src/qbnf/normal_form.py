"""Quantum Birkhoff normalization near a Diophantine torus.

The input symbol is ``a.xi + O(2)`` in the grading ``|alpha| + 2(k + l)``.
Normalization proceeds one grading at a time: the homogeneous part ``R_m``
of the current symbol is split into its angle average (kept in the normal
form) and an oscillating part removed by conjugating with
``exp((i/h) ad_{G_m})``, where ``G_m`` solves the cohomological equation
``(a . d_x) G_m = R_m - <R_m>``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (CutoffOverflowError, GeneratorGradingError, QBNFError, TruncationWarning,
                     UncertifiedModeError)
from .frequency import FrequencyData
from .symbols import (GradedIndex, HomogeneousPolynomial, TruncatedSymbol, _index, average_x,
                      moyal_bracket_over_h, multiply, truncate_grading)

# x-dependent leftovers after a normalization step must cancel to rounding
_CANCEL_TOL = 1e-9


@dataclass(frozen=True)
class NormalForm:
    """x-independent truncation ``sum P_jkl(xi) eps^k h^l``.

    ``coeffs`` maps ``(j, k, l)`` to a :class:`HomogeneousPolynomial` of
    degree ``j``.  ``frequency`` is the header data carried by files.
    """

    coeffs: Mapping
    order: int
    frequency: FrequencyData | None = None

    def __post_init__(self):
        clean = {}
        for (j, k, l), poly in sorted(self.coeffs.items()):
            if poly.degree != j:
                raise ValueError(f"index {(j, k, l)} holds a degree-{poly.degree} polynomial")
            if j + 2 * (k + l) > self.order:
                raise ValueError(f"index {(j, k, l)} exceeds order {self.order}")
            if not poly.is_zero():
                clean[(int(j), int(k), int(l))] = poly
        object.__setattr__(self, "coeffs", clean)

    def __getitem__(self, idx) -> HomogeneousPolynomial:
        return self.coeffs.get(tuple(idx), HomogeneousPolynomial.zero(idx[0]))

    def indices(self):
        return list(self.coeffs)

    def restrict(self, predicate) -> "NormalForm":
        return NormalForm({i: p for i, p in self.coeffs.items() if predicate(*i)}, self.order, self.frequency)

    def eps_free(self) -> "NormalForm":
        return self.restrict(lambda j, k, l: k == 0)

    def __call__(self, xi, eps, h):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for (j, k, l), poly in self.coeffs.items():
            out = out + poly(xi) * (eps ** k * h ** l)
        return out if out.ndim else complex(out)

    @classmethod
    def from_symbol(cls, sym: TruncatedSymbol, order: int, frequency=None) -> "NormalForm":
        if not sym.is_x_independent():
            raise ValueError("normal form symbols must be independent of x")
        coeffs: dict = {}
        for idx, c in sym.terms.items():
            if idx.grading > order:
                continue
            j = idx.alpha[0] + idx.alpha[1]
            key = (j, idx.k, idx.l)
            cur = list(coeffs.get(key, HomogeneousPolynomial.zero(j)).coeffs)
            cur[idx.alpha[1]] += c
            coeffs[key] = HomogeneousPolynomial(j, tuple(cur))
        return cls(coeffs, order, frequency)

    def to_symbol(self, N_max: int | None = None, n_max: int = 8) -> TruncatedSymbol:
        terms = {}
        for (j, k, l), poly in self.coeffs.items():
            for c, alpha in zip(poly.coeffs, poly.exponents()):
                terms[_index((0, 0), alpha, k, l)] = c
        return TruncatedSymbol(terms, self.order if N_max is None else N_max, n_max)

    def max_coefficient_difference(self, other: "NormalForm") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((max(abs(x - y) for x, y in zip(self[i].coeffs, other[i].coeffs)) for i in keys), default=0.0)

    def to_json_obj(self) -> dict:
        header = {"order": self.order}
        if self.frequency is not None:
            header.update(a=list(self.frequency.a), C0=self.frequency.C0, N0=self.frequency.N0,
                          certified_radius=self.frequency.certified_radius)
        return {"header": header,
                "terms": [{"j": j, "k": k, "l": l, "coeffs": p.to_json()} for (j, k, l), p in self.coeffs.items()]}

    @classmethod
    def from_json_obj(cls, obj) -> "NormalForm":
        hd = obj["header"]
        freq = None
        if "a" in hd:
            freq = FrequencyData(tuple(hd["a"]), hd["C0"], hd["N0"], hd.get("certified_radius", 8))
        coeffs = {(t["j"], t["k"], t["l"]): HomogeneousPolynomial.from_json(t["j"], t["coeffs"]) for t in obj["terms"]}
        return cls(coeffs, int(hd["order"]), freq)

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "NormalForm":
        return cls.from_json_obj(json.loads(text))


@dataclass(frozen=True)
class NormalizationResult:
    normal_form: NormalForm
    generators: dict = field(default_factory=dict)  # grading m -> G_m
    residual: TruncatedSymbol | None = None
    order: int = 0


def solve_cohomological(R: TruncatedSymbol, freq: FrequencyData):
    """Solve ``(a . d_x) G = R - <R>`` by Fourier division.

    Returns ``(G, avg)`` with ``avg = <R>`` and ``G`` of zero angle average.
    """
    G = {}
    for idx, c in R.terms.items():
        if idx.n == (0, 0):
            continue
        if max(abs(idx.n[0]), abs(idx.n[1])) > freq.certified_radius:
            raise UncertifiedModeError(
                f"mode {idx.n} lies outside the certified radius {freq.certified_radius}")
        d = freq.divisor(idx.n)
        if d == 0:
            raise QBNFError(f"resonant mode {idx.n}: a.n = 0, frequencies are not Diophantine")
        G[idx] = -1j * c / d
    return R._like(G), average_x(R)


def lie_conjugate(P: TruncatedSymbol, G: TruncatedSymbol, N: int) -> TruncatedSymbol:
    """``exp((i/h) ad_G) P`` truncated to grading ``N``.

    Every term of ``G`` must have grading >= 2, so that each application of
    the bracket raises the grading by at least one and the series stops
    after at most ``N + 1`` terms.
    """
    low = G.min_grading()
    if low is not None and low < 2:
        raise GeneratorGradingError(f"generator has a term of grading {low}; the Lie series would not terminate")
    P = truncate_grading(P, N)
    if not G:
        return P
    G = truncate_grading(G, N)
    total = P
    term = P
    for m in range(1, N + 2):
        term = truncate_grading(moyal_bracket_over_h(G, term), N) * (1.0 / m)
        if not term:
            break
        total = total + term
    return total


def conjugate_sequence(P: TruncatedSymbol, generators: Mapping[int, TruncatedSymbol], N: int) -> TruncatedSymbol:
    """Apply ``exp((i/h) ad_{G_m})`` for increasing m, truncating to grading N."""
    out = truncate_grading(P, N)
    for m in sorted(generators):
        out = lie_conjugate(out, generators[m], N)
    return out


def frequency_of(P: TruncatedSymbol) -> tuple[float, float]:
    """Read ``a`` off the grading-1 part ``a . xi`` of a symbol."""
    return (P[(0, 0), (1, 0), 0, 0].real, P[(0, 0), (0, 1), 0, 0].real)


def birkhoff_normalize(P: TruncatedSymbol, freq: FrequencyData, N: int) -> NormalizationResult:
    """Normalize ``P = a.xi + O(2)`` to order ``N``.

    The symbol's grading cutoff must exceed ``N`` so that the residual
    ``R_{N+1}`` is available.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N >= P.N_max:
        raise CutoffOverflowError(f"order N={N} needs N_max > N, symbol has N_max={P.N_max}")
    low = truncate_grading(P, 1)
    expected = TruncatedSymbol({_index((0, 0), (1, 0), 0, 0): freq.a[0], _index((0, 0), (0, 1), 0, 0): freq.a[1]},
                               P.N_max, P.n_max)
    if low != expected:
        raise ValueError(f"grading <= 1 part must equal a.xi with a={freq.a}, got {low}")

    cut = N + 1
    current = truncate_grading(P, cut)
    generators: dict[int, TruncatedSymbol] = {}
    for m in range(2, N + 1):
        R = current.homogeneous_part(m)
        G, _ = solve_cohomological(R, freq)
        if G:
            generators[m] = G
            current = lie_conjugate(current, G, cut)
        # the oscillating grading-m part now cancels up to rounding
        part = current.homogeneous_part(m)
        scale = max(R.max_abs(), 1.0)
        leftover = part - average_x(part)
        if leftover.max_abs() > _CANCEL_TOL * scale:
            raise QBNFError(f"grading {m} failed to normalize (leftover {leftover.max_abs():.2e})")
        current = current - leftover

    nf_sym = truncate_grading(current, N)
    residual = current.homogeneous_part(cut)
    return NormalizationResult(NormalForm.from_symbol(nf_sym, N, freq), generators, residual, N)


# ---------------------------------------------------------------------------
# symmetries


def _xi_power(A: np.ndarray, alpha, like: TruncatedSymbol) -> TruncatedSymbol:
    # (A^t eta)^alpha as a polynomial in eta
    lin = [like._like({_index((0, 0), (1, 0), 0, 0): A[0, j], _index((0, 0), (0, 1), 0, 0): A[1, j]})
           for j in range(2)]
    out = like._like({_index((0, 0), (0, 0), 0, 0): 1.0})
    for j in range(2):
        for _ in range(alpha[j]):
            out = multiply(out, lin[j])
    return out


def apply_symmetry(P: TruncatedSymbol, psi: Mapping | None, A=None) -> TruncatedSymbol:
    """Pull ``P`` back by ``(y, eta) -> (A^{-1} y + grad psi(eta), A^t eta)``.

    Parameters
    ----------
    P : TruncatedSymbol
    psi : mapping ``(p, q) -> coefficient`` of ``eta1^p eta2^q``, or None
    A : 2x2 integer matrix with determinant +-1 (identity if omitted)

    The phase ``exp(i n . grad psi(eta))`` is Taylor expanded; its constant
    part is applied exactly and the rest is truncated at the grading cutoff.
    A :class:`TruncationWarning` is issued when shifted modes leave the
    Fourier cutoff.
    """
    A = np.eye(2, dtype=int) if A is None else np.asarray(A)
    if A.shape != (2, 2) or not np.all(A == np.round(A)):
        raise ValueError("A must be an integer 2x2 matrix")
    A = A.astype(int)
    det = int(round(np.linalg.det(A)))
    if abs(det) != 1:
        raise ValueError(f"A must be unimodular, det = {det}")
    Ainv_t = np.round(np.linalg.inv(A).T).astype(int)
    psi = {tuple(map(int, e)): complex(c) for e, c in (psi or {}).items() if c != 0}

    # grad psi split into a constant shift and a part of positive grading
    shift = np.zeros(2, dtype=complex)
    grad_rest = [P._like({}), P._like({})]
    for (p, q), c in psi.items():
        for j, (e, f) in enumerate(((p - 1, q), (p, q - 1))):
            mult = (p, q)[j]
            if mult == 0:
                continue
            if e == 0 and f == 0:
                shift[j] += c * mult
            else:
                grad_rest[j] = grad_rest[j] + P._like({_index((0, 0), (e, f), 0, 0): c * mult})

    out: dict = {}
    lost = 0.0
    phase_cache: dict = {}
    power_cache: dict = {}
    for idx, c in P.terms.items():
        n = idx.n
        m = tuple(int(v) for v in Ainv_t @ np.asarray(n))
        if n not in phase_cache:
            phi = grad_rest[0] * n[0] + grad_rest[1] * n[1]
            series = P._like({_index((0, 0), (0, 0), 0, 0): 1.0})
            term = series
            for r in range(1, P.N_max + 1):
                term = multiply(term, phi) * (1j / r)
                if not term:
                    break
                series = series + term
            phase_cache[n] = series * complex(np.exp(1j * (n[0] * shift[0] + n[1] * shift[1])))
        if idx.alpha not in power_cache:
            power_cache[idx.alpha] = _xi_power(A, idx.alpha, P)
        body = multiply(phase_cache[n], power_cache[idx.alpha])
        for jdx, v in body.terms.items():
            key = _index(m, jdx.alpha, idx.k + jdx.k, idx.l + jdx.l)
            if key.grading > P.N_max:
                continue
            if max(abs(m[0]), abs(m[1])) > P.n_max:
                lost = max(lost, abs(c * v))
                continue
            out[key] = out.get(key, 0) + c * v
    if lost:
        warnings.warn(f"apply_symmetry dropped modes beyond n_max={P.n_max} (largest |coefficient| {lost:.2e})",
                      TruncationWarning, stacklevel=2)
    return P._like(out)
