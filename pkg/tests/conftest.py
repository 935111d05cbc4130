import numpy as np
import pytest

from qbnf.symbols import TruncatedSymbol


def index_with_grading(rng, g, min_k=0):
    """Random (alpha, k, l) with |alpha| + 2(k + l) == g."""
    while True:
        kl = int(rng.integers(0, g // 2 + 1))
        k = int(rng.integers(0, kl + 1))
        if k < min_k:
            continue
        deg = g - 2 * kl
        a1 = int(rng.integers(0, deg + 1))
        return (a1, deg - a1), k, kl - k


def random_symbol(rng, gradings, *, N_max=10, n_max=4, modes=1, nterms=4, x_free=False):
    """Sum of ``nterms`` random monomials with gradings drawn from ``gradings``."""
    terms = {}
    for _ in range(nterms):
        g = int(rng.choice(list(gradings)))
        alpha, k, l = index_with_grading(rng, g)
        n = (0, 0) if x_free else tuple(int(v) for v in rng.integers(-modes, modes + 1, size=2))
        terms[(n, alpha, k, l)] = complex(rng.normal(), rng.normal())
    return TruncatedSymbol(terms, N_max, n_max)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def quad_nf():
    from qbnf.fixtures import golden_frequency, quad_fixture
    from qbnf.normal_form import birkhoff_normalize

    return birkhoff_normalize(quad_fixture(), golden_frequency(), 6).normal_form


def make_dataset(nf, hs, eps_exponents, beta=np.inf, seed=0, window=None):
    """Labelled forward dataset on the quad window, one record per (h, eps)."""
    from qbnf.fixtures import QUAD_QUANT, quad_window
    from qbnf.spectrum import SpectralDataset, generate_spectrum, inject_noise

    win = window or quad_window()
    recs = [generate_spectrum(nf, QUAD_QUANT, win, h, h ** e) for h in hs for e in eps_exponents]
    ds = SpectralDataset(recs)
    return inject_noise(ds, beta, seed) if np.isfinite(beta) else ds


ACCEPTANCE_LINES: list = []


def report_criterion(number, title, ok, detail=""):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
