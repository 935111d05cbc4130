"""Graded truncated symbols on T*T^2 with formal parameters eps and h.

A symbol is a finite sum of monomials

    c * exp(i n.x) * xi^alpha * eps^k * h^l

stored sparsely as ``{GradedIndex: complex}``.  The grading of a monomial is
``|alpha| + 2 (k + l)``.  Every operation truncates its output to the
symbol's grading cutoff ``N_max`` and Fourier cutoff ``n_max``.

Products and brackets are exact for inputs supported on ``|n| <= n_max / 2``
whose grading-0 part is x-independent; outside that range the Fourier cutoff
silently discards modes (doubling ``n_max`` is the adequacy check).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import CutoffMismatchError, WeylParityError


class GradedIndex(NamedTuple):
    """Exponent data of one monomial: Fourier mode, action powers, eps and h powers."""

    n: tuple[int, int]
    alpha: tuple[int, int]
    k: int
    l: int

    @property
    def grading(self) -> int:
        return self.alpha[0] + self.alpha[1] + 2 * (self.k + self.l)

    @property
    def sort_key(self):
        return (self.grading, self.n, self.alpha, self.k, self.l)


def _index(n, alpha, k, l) -> GradedIndex:
    return GradedIndex((int(n[0]), int(n[1])), (int(alpha[0]), int(alpha[1])), int(k), int(l))


def _falling(a: int, p: int) -> int:
    # a (a-1) ... (a-p+1)
    out = 1
    for i in range(p):
        out *= a - i
    return out


class TruncatedSymbol:
    """Immutable sparse graded symbol.

    Parameters
    ----------
    terms : mapping
        ``GradedIndex -> complex``.  Plain 4-tuples ``(n, alpha, k, l)`` are
        accepted as keys as well.
    N_max : int
        Grading cutoff; terms of larger grading are dropped.
    n_max : int
        Fourier cutoff on ``|n|_inf``.
    """

    __slots__ = ("_terms", "N_max", "n_max")

    def __init__(self, terms: Mapping | None = None, N_max: int = 8, n_max: int = 8):
        if N_max < 0 or n_max < 0:
            raise ValueError("cutoffs must be non-negative")
        self.N_max = int(N_max)
        self.n_max = int(n_max)
        clean: dict[GradedIndex, complex] = {}
        for key, value in (terms or {}).items():
            idx = key if isinstance(key, GradedIndex) else _index(*key)
            if min(idx.alpha) < 0 or idx.k < 0 or idx.l < 0:
                raise ValueError(f"negative exponent in {idx}")
            if idx.grading > self.N_max or max(abs(idx.n[0]), abs(idx.n[1])) > self.n_max:
                continue
            value = complex(value)
            if value != 0:
                clean[idx] = clean.get(idx, 0) + value
        clean = {k: v for k, v in sorted(clean.items(), key=lambda kv: kv[0].sort_key) if v != 0}
        self._terms = MappingProxyType(clean)

    # -- container protocol -------------------------------------------------
    @property
    def terms(self) -> Mapping[GradedIndex, complex]:
        return self._terms

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __getitem__(self, key) -> complex:
        idx = key if isinstance(key, GradedIndex) else _index(*key)
        return self._terms.get(idx, 0j)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSymbol):
            return NotImplemented
        return (self.N_max, self.n_max) == (other.N_max, other.n_max) and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((self.N_max, self.n_max, tuple(self._terms.items())))

    def __repr__(self):
        body = " + ".join(f"({v:.6g})*{_monomial_str(k)}" for k, v in list(self._terms.items())[:8])
        more = "" if len(self._terms) <= 8 else f" + ... ({len(self._terms)} terms)"
        return f"TruncatedSymbol[{body or '0'}{more}; N_max={self.N_max}, n_max={self.n_max}]"

    # -- arithmetic ---------------------------------------------------------
    def _like(self, terms) -> "TruncatedSymbol":
        return TruncatedSymbol(terms, self.N_max, self.n_max)

    def __add__(self, other):
        if not isinstance(other, TruncatedSymbol):
            return NotImplemented
        return add(self, other)

    def __sub__(self, other):
        if not isinstance(other, TruncatedSymbol):
            return NotImplemented
        return add(self, -other)

    def __neg__(self):
        return self._like({k: -v for k, v in self._terms.items()})

    def __mul__(self, scalar):
        if isinstance(scalar, TruncatedSymbol):
            return NotImplemented
        return self._like({k: scalar * v for k, v in self._terms.items()})

    __rmul__ = __mul__

    # -- views --------------------------------------------------------------
    def with_cutoffs(self, N_max: int | None = None, n_max: int | None = None) -> "TruncatedSymbol":
        """Re-truncate (or lift) to other cutoffs.  Lifting adds no terms."""
        return TruncatedSymbol(self._terms, self.N_max if N_max is None else N_max,
                               self.n_max if n_max is None else n_max)

    def homogeneous_part(self, m: int) -> "TruncatedSymbol":
        return self._like({k: v for k, v in self._terms.items() if k.grading == m})

    def gradings(self) -> set[int]:
        return {k.grading for k in self._terms}

    def min_grading(self) -> int | None:
        return min(self.gradings(), default=None)

    def max_grading(self) -> int | None:
        return max(self.gradings(), default=None)

    def max_mode(self) -> int:
        return max((max(abs(k.n[0]), abs(k.n[1])) for k in self._terms), default=0)

    def is_x_independent(self) -> bool:
        return all(k.n == (0, 0) for k in self._terms)

    def max_abs(self) -> float:
        return max((abs(v) for v in self._terms.values()), default=0.0)

    def conj_reflect(self) -> "TruncatedSymbol":
        """The symbol c(-n) -> conj(c(n)); fixed points are real-valued symbols."""
        return self._like({_index((-k.n[0], -k.n[1]), k.alpha, k.k, k.l): np.conj(v)
                           for k, v in self._terms.items()})

    def __call__(self, x, xi, eps, h):
        """Evaluate pointwise at real (x, xi) and parameters (eps, h)."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        out = 0j
        for idx, c in self._terms.items():
            out = out + (c * np.exp(1j * (idx.n[0] * x[..., 0] + idx.n[1] * x[..., 1]))
                         * xi[..., 0] ** idx.alpha[0] * xi[..., 1] ** idx.alpha[1]
                         * eps ** idx.k * h ** idx.l)
        return out

    # -- serialization ------------------------------------------------------
    def to_json_obj(self) -> dict:
        return {
            "n_max": self.n_max,
            "N_max": self.N_max,
            "terms": [
                {"n": list(k.n), "alpha": list(k.alpha), "k": k.k, "l": k.l,
                 "re": float(v.real), "im": float(v.imag)}
                for k, v in self._terms.items()
            ],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "TruncatedSymbol":
        terms: dict[GradedIndex, complex] = {}
        for t in obj["terms"]:
            idx = _index(t["n"], t["alpha"], t["k"], t["l"])
            terms[idx] = terms.get(idx, 0) + complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
        return cls(terms, N_max=int(obj["N_max"]), n_max=int(obj["n_max"]))

    def dumps(self) -> str:
        # json writes floats with repr(), the shortest string that round-trips
        return json.dumps(self.to_json_obj(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "TruncatedSymbol":
        return cls.from_json_obj(json.loads(text))


def _monomial_str(idx: GradedIndex) -> str:
    parts = []
    if idx.n != (0, 0):
        parts.append(f"e^(i({idx.n[0]},{idx.n[1]}).x)")
    for i, p in enumerate(idx.alpha):
        if p:
            parts.append(f"xi{i + 1}^{p}" if p > 1 else f"xi{i + 1}")
    if idx.k:
        parts.append(f"eps^{idx.k}" if idx.k > 1 else "eps")
    if idx.l:
        parts.append(f"h^{idx.l}" if idx.l > 1 else "h")
    return "*".join(parts) or "1"


# ---------------------------------------------------------------------------
# constructors


def monomial(coeff=1.0, n=(0, 0), alpha=(0, 0), k=0, l=0, *, N_max=8, n_max=8) -> TruncatedSymbol:
    return TruncatedSymbol({_index(n, alpha, k, l): coeff}, N_max, n_max)


def zero(N_max=8, n_max=8) -> TruncatedSymbol:
    return TruncatedSymbol({}, N_max, n_max)


def linear_action(a: Sequence[float], *, N_max=8, n_max=8) -> TruncatedSymbol:
    """The symbol a . xi."""
    return TruncatedSymbol({_index((0, 0), (1, 0), 0, 0): a[0], _index((0, 0), (0, 1), 0, 0): a[1]}, N_max, n_max)


def cos_mode(n, coeff=1.0, alpha=(0, 0), k=0, l=0, *, N_max=8, n_max=8) -> TruncatedSymbol:
    """coeff * cos(n.x) * xi^alpha eps^k h^l."""
    minus = (-n[0], -n[1])
    return TruncatedSymbol({_index(n, alpha, k, l): coeff / 2, _index(minus, alpha, k, l): coeff / 2}, N_max, n_max)


# ---------------------------------------------------------------------------
# operations


def _check(a: TruncatedSymbol, b: TruncatedSymbol) -> None:
    if (a.N_max, a.n_max) != (b.N_max, b.n_max):
        raise CutoffMismatchError(
            f"cutoff mismatch: (N_max, n_max) = {(a.N_max, a.n_max)} vs {(b.N_max, b.n_max)}")


def add(a: TruncatedSymbol, b: TruncatedSymbol) -> TruncatedSymbol:
    _check(a, b)
    out = dict(a.terms)
    for k, v in b.terms.items():
        out[k] = out.get(k, 0) + v
    return a._like(out)


def multiply(a: TruncatedSymbol, b: TruncatedSymbol) -> TruncatedSymbol:
    """Pointwise (commutative) product of two symbols."""
    _check(a, b)
    out: dict[GradedIndex, complex] = {}
    N = a.N_max
    for ia, ca in a.terms.items():
        ga = ia.grading
        for ib, cb in b.terms.items():
            if ga + ib.grading > N:
                continue
            key = _index((ia.n[0] + ib.n[0], ia.n[1] + ib.n[1]),
                         (ia.alpha[0] + ib.alpha[0], ia.alpha[1] + ib.alpha[1]), ia.k + ib.k, ia.l + ib.l)
            out[key] = out.get(key, 0) + ca * cb
    return a._like(out)


def poisson_bracket(a: TruncatedSymbol, b: TruncatedSymbol) -> TruncatedSymbol:
    """{a, b} = sum_j d_xi_j a d_x_j b - d_x_j a d_xi_j b."""
    _check(a, b)
    out: dict[GradedIndex, complex] = {}
    N = a.N_max
    for ia, ca in a.terms.items():
        ga = ia.grading
        for ib, cb in b.terms.items():
            if ga + ib.grading - 1 > N:
                continue
            n = (ia.n[0] + ib.n[0], ia.n[1] + ib.n[1])
            k, l = ia.k + ib.k, ia.l + ib.l
            for j in range(2):
                # d_xi_j a * d_x_j b
                if ia.alpha[j] and ib.n[j]:
                    al = list(ia.alpha)
                    al[j] -= 1
                    key = _index(n, (al[0] + ib.alpha[0], al[1] + ib.alpha[1]), k, l)
                    out[key] = out.get(key, 0) + ca * cb * ia.alpha[j] * 1j * ib.n[j]
                # - d_x_j a * d_xi_j b
                if ib.alpha[j] and ia.n[j]:
                    be = list(ib.alpha)
                    be[j] -= 1
                    key = _index(n, (ia.alpha[0] + be[0], ia.alpha[1] + be[1]), k, l)
                    out[key] = out.get(key, 0) - ca * cb * ib.alpha[j] * 1j * ia.n[j]
    return a._like(out)


def _star_terms(a: TruncatedSymbol, b: TruncatedSymbol, cap: int, odd_only: bool = False) -> dict:
    """Terms of a # b of grading <= cap (before any Fourier truncation).

    With ``odd_only`` only the odd orders of the expansion are kept and
    doubled, which is exactly a # b - b # a.
    """
    out: dict[GradedIndex, complex] = {}
    for ia, ca in a.terms.items():
        ga = ia.grading
        for ib, cb in b.terms.items():
            base = ga + ib.grading
            if base > cap:
                continue
            # d_x acting on b and a multiplies by u = i n_b and v = i n_a
            u = (1j * ib.n[0], 1j * ib.n[1])
            v = (1j * ia.n[0], 1j * ia.n[1])
            n = (ia.n[0] + ib.n[0], ia.n[1] + ib.n[1])
            kk = ia.k + ib.k
            mmax = min(cap - base, ia.alpha[0] + ia.alpha[1] + ib.alpha[0] + ib.alpha[1])
            for p0 in range(min(ia.alpha[0], mmax) + 1):
                if p0 and u[0] == 0:
                    break
                for p1 in range(min(ia.alpha[1], mmax - p0) + 1):
                    if p1 and u[1] == 0:
                        break
                    for q0 in range(min(ib.alpha[0], mmax - p0 - p1) + 1):
                        if q0 and v[0] == 0:
                            break
                        for q1 in range(min(ib.alpha[1], mmax - p0 - p1 - q0) + 1):
                            if q1 and v[1] == 0:
                                break
                            m = p0 + p1 + q0 + q1
                            if odd_only and m % 2 == 0:
                                continue
                            coef = (ca * cb * (-0.5j) ** m
                                    * u[0] ** p0 * u[1] ** p1 * (-v[0]) ** q0 * (-v[1]) ** q1
                                    * _falling(ia.alpha[0], p0) * _falling(ia.alpha[1], p1)
                                    * _falling(ib.alpha[0], q0) * _falling(ib.alpha[1], q1)
                                    / (math.factorial(p0) * math.factorial(p1)
                                       * math.factorial(q0) * math.factorial(q1)))
                            if odd_only:
                                coef *= 2
                            key = _index(n, (ia.alpha[0] - p0 + ib.alpha[0] - q0,
                                             ia.alpha[1] - p1 + ib.alpha[1] - q1), kk, ia.l + ib.l + m)
                            out[key] = out.get(key, 0) + coef
    return out


def moyal_product(a: TruncatedSymbol, b: TruncatedSymbol) -> TruncatedSymbol:
    """Weyl composition a # b = sum_m (1/m!) (h/2i)^m a (<d_xi.d_x> - <d_x.d_xi>)^m b.

    The expansion is finite because every xi-derivative lowers a polynomial
    degree.  The sign convention gives a # b - b # a = (h/i){a, b} + O(h^3).
    """
    _check(a, b)
    return a._like(_star_terms(a, b, a.N_max))


def moyal_bracket_over_h(a: TruncatedSymbol, b: TruncatedSymbol) -> TruncatedSymbol:
    """(i/h)(a # b - b # a), computed without loss before the h-division."""
    _check(a, b)
    comm = _star_terms(a, b, a.N_max + 2, odd_only=True)
    out: dict[GradedIndex, complex] = {}
    for idx, c in comm.items():
        if c == 0:
            continue
        if idx.l == 0:
            raise WeylParityError(f"commutator term {idx} carries no power of h")
        out[_index(idx.n, idx.alpha, idx.k, idx.l - 1)] = 1j * c
    return a._like(out)


def average_x(a: TruncatedSymbol) -> TruncatedSymbol:
    """Angle average: keep the zero Fourier mode."""
    return a._like({k: v for k, v in a.terms.items() if k.n == (0, 0)})


def truncate_grading(a: TruncatedSymbol, N: int) -> TruncatedSymbol:
    if N < 0:
        raise ValueError("N must be >= 0")
    return a._like({k: v for k, v in a.terms.items() if k.grading <= N})


def x_derivative_along(a: TruncatedSymbol, freq: Sequence[float]) -> TruncatedSymbol:
    """(freq . d_x) a."""
    return a._like({k: 1j * (freq[0] * k.n[0] + freq[1] * k.n[1]) * v for k, v in a.terms.items()})


def max_coefficient_difference(a: TruncatedSymbol, b: TruncatedSymbol, up_to: int | None = None) -> float:
    """Largest coefficient-wise |a - b|, optionally over gradings <= up_to only."""
    keys = set(a.terms) | set(b.terms)
    if up_to is not None:
        keys = {k for k in keys if k.grading <= up_to}
    return max((abs(a[k] - b[k]) for k in keys), default=0.0)


# ---------------------------------------------------------------------------
# homogeneous polynomials


@dataclass(frozen=True)
class HomogeneousPolynomial:
    """Degree-j form in (xi1, xi2).

    ``coeffs[i]`` multiplies ``xi1**(j - i) * xi2**i`` (descending powers of
    xi1).
    """

    degree: int
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        if len(coeffs) != self.degree + 1:
            raise ValueError(f"degree {self.degree} needs {self.degree + 1} coefficients, got {len(coeffs)}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, degree: int) -> "HomogeneousPolynomial":
        return cls(degree, (0,) * (degree + 1))

    def exponents(self) -> list[tuple[int, int]]:
        return [(self.degree - i, i) for i in range(self.degree + 1)]

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        x1, x2 = xi[..., 0], xi[..., 1]
        out = np.zeros(np.broadcast(x1, x2).shape, dtype=complex)
        for c, (p, q) in zip(self.coeffs, self.exponents()):
            if c != 0:
                out = out + c * x1 ** p * x2 ** q
        return out if out.ndim else complex(out)

    def __add__(self, other: "HomogeneousPolynomial") -> "HomogeneousPolynomial":
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        return HomogeneousPolynomial(self.degree, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "HomogeneousPolynomial") -> "HomogeneousPolynomial":
        return self + other.scale(-1)

    def scale(self, s) -> "HomogeneousPolynomial":
        return HomogeneousPolynomial(self.degree, tuple(s * c for c in self.coeffs))

    def norm(self) -> float:
        return float(np.linalg.norm(np.asarray(self.coeffs)))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def to_json(self) -> list:
        return [[c.real, c.imag] for c in self.coeffs]

    @classmethod
    def from_json(cls, degree: int, data: Iterable) -> "HomogeneousPolynomial":
        return cls(degree, tuple(complex(re, im) for re, im in data))
