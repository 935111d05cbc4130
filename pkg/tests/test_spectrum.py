import numpy as np
import pytest

from qbnf.errors import ScheduleError, SearchBoundError
from qbnf.fixtures import A_GOLDEN, QUAD_QUANT, quad_window
from qbnf.normal_form import NormalForm
from qbnf.spectrum import (UNMATCHED, QuantizationData, SpectralDataset, SpectralWindow, _box, bohr_sommerfeld_action,
                           generate_spectrum, inject_noise, lattice_center, quasi_eigenvalue)
from qbnf.symbols import HomogeneousPolynomial

LINEAR = NormalForm({(1, 0, 0): HomogeneousPolynomial(1, A_GOLDEN)}, 6)


def test_bohr_sommerfeld_examples():
    q0 = QuantizationData()
    assert np.all(bohr_sommerfeld_action((0, 0), 0.3, q0) == 0)
    assert np.allclose(bohr_sommerfeld_action((5, -3), 0.01, q0), (0.05, -0.03), atol=1e-16)
    q = QuantizationData((2, 2), (np.pi, np.pi))
    assert np.allclose(bohr_sommerfeld_action((1, 1), 0.1, q), (-0.45, -0.45), atol=1e-15)


def test_quasi_eigenvalue_examples():
    xi = np.array([0.3, -0.1])
    assert quasi_eigenvalue(LINEAR, xi, 0.1, 0.01) == pytest.approx(0.3 + A_GOLDEN[1] * -0.1, abs=1e-16)
    nf = NormalForm({**LINEAR.coeffs, (0, 1, 0): HomogeneousPolynomial(0, (2j,))}, 6)
    z = quasi_eigenvalue(nf, xi, 0.1, 0.01)
    assert z.imag == pytest.approx(0.2, abs=1e-16)
    quad = NormalForm({(2, 0, 0): HomogeneousPolynomial(2, (1.5, 0.0, 0.0))}, 6)
    t = np.linspace(-1, 1, 7)
    vals = quasi_eigenvalue(quad, np.stack([t, 0 * t], 1), 0.1, 0.01)
    assert np.allclose(vals, 1.5 * t ** 2, atol=1e-15)


@pytest.mark.parametrize("h, e", [(0.02, 0.5), (0.01, 0.766)])
def test_window_exhaustive(quad_nf, h, e):
    win, eps = quad_window(), h ** e
    rec = generate_spectrum(quad_nf, QUAD_QUANT, win, h, eps)
    assert np.all(win.contains(rec.eigenvalues, h, eps))
    # every candidate in the searched box is emitted iff it lies in the window
    k = _box(lattice_center(h, QUAD_QUANT), rec.k_search_bound)
    z = quad_nf(bohr_sommerfeld_action(k, h, QUAD_QUANT), eps, h)
    inside = win.contains(z, h, eps)
    assert {tuple(v) for v in k[inside]} == {tuple(v) for v in rec.labels}
    # label faithfulness
    back = quasi_eigenvalue(quad_nf, bohr_sommerfeld_action(rec.labels, h, QUAD_QUANT), eps, h)
    assert np.array_equal(back, rec.eigenvalues)


def test_count_scaling(quad_nf):
    n = [len(generate_spectrum(quad_nf, QUAD_QUANT, quad_window(), h, h ** 0.5).eigenvalues) for h in (1e-2, 5e-3)]
    assert abs(n[1] / n[0] / 2 ** 1.6 - 1) <= 0.3


def test_empty_window_and_search_bound(quad_nf):
    h = 0.01
    rec = generate_spectrum(quad_nf, QUAD_QUANT, SpectralWindow(0.2, 1e6, 1.0), h, h ** 0.5)
    assert len(rec.eigenvalues) == 0
    with pytest.raises(SearchBoundError):
        generate_spectrum(quad_nf, QUAD_QUANT, quad_window(), h, h ** 0.5, k_search_bound=5)
    with pytest.raises(ScheduleError):
        generate_spectrum(quad_nf, QUAD_QUANT, quad_window(), h, 0.9)


def test_unbounded_window_detected():
    # a.xi alone leaves Im z = 0, so the window preimage is an unbounded strip
    win = SpectralWindow(0.2, 1.0, 0.0)
    with pytest.raises(SearchBoundError):
        generate_spectrum(LINEAR, QuantizationData(), win, 0.01, 0.1, k_search_bound=200)


def test_spacing_orders(quad_nf):
    h, eps = 0.005, 0.005 ** 0.766
    rec = generate_spectrum(quad_nf, QUAD_QUANT, quad_window(), h, eps)
    lab = {tuple(k): z for k, z in zip(rec.labels.tolist(), rec.eigenvalues)}
    dre, dim = [], []
    for k, z in lab.items():
        for step in ((1, 0), (0, 1)):
            w = lab.get((k[0] + step[0], k[1] + step[1]))
            if w is not None:
                dre.append(abs(w.real - z.real))
                dim.append(abs(w.imag - z.imag))
    # neighbouring lattice points: Re steps ~ h, Im steps ~ eps h (fixture constants)
    assert 0.5 * h < np.median(dre) < 2 * h
    assert 0.1 * eps * h < np.median(dim) < 2 * eps * h


def test_noise(quad_nf):
    h = 0.01
    ds = SpectralDataset([generate_spectrum(quad_nf, QUAD_QUANT, quad_window(), h, h ** 0.5)])
    assert np.array_equal(inject_noise(ds, np.inf, 0).records[0].eigenvalues, ds.records[0].eigenvalues)
    a, b = inject_noise(ds, 2.0, 7), inject_noise(ds, 2.0, 7)
    assert np.array_equal(a.records[0].eigenvalues, b.records[0].eigenvalues)
    d = np.abs(a.records[0].eigenvalues - ds.records[0].eigenvalues)
    assert d.max() <= h ** 2 and d.max() > 0
    assert a.records[0].beta == 2.0
    with pytest.raises(ValueError):
        inject_noise(ds, 0.0, 0)


def test_jsonl_round_trip(quad_nf):
    h = 0.02
    rec = generate_spectrum(quad_nf, QUAD_QUANT, quad_window(), h, h ** 0.5)
    rec.labels[0] = UNMATCHED
    ds = inject_noise(SpectralDataset([rec]), 1.7, 3)
    back = SpectralDataset.loads(ds.dumps())
    r0, r1 = ds.records[0], back.records[0]
    assert np.array_equal(r0.eigenvalues, r1.eigenvalues) and np.array_equal(r0.labels, r1.labels)
    assert (r1.h, r1.eps, r1.beta, r1.filtered) == (r0.h, r0.eps, r0.beta, False)
    assert '"labels": [null' in ds.dumps()
    assert back.dumps() == ds.dumps()
    assert SpectralDataset.loads(ds.stripped().dumps()).records[0].labels is None
