"""Reference symbols used by the test-suite and the ``roundtrip`` command."""
from __future__ import annotations

from .frequency import FrequencyData, check_diophantine
from .spectrum import QuantizationData, SpectralWindow
from .symbols import TruncatedSymbol, cos_mode, linear_action, monomial

GOLDEN = (1 + 5 ** 0.5) / 2
A_GOLDEN = (1.0, GOLDEN)


def golden_frequency(radius: int = 8) -> FrequencyData:
    return check_diophantine(A_GOLDEN, 3.0, 2.0, radius)


def cos_fixture(N_max: int = 7, n_max: int = 6) -> TruncatedSymbol:
    """a.xi + xi1^2 + eps (cos x1 + cos(x1 + x2))."""
    kw = dict(N_max=N_max, n_max=n_max)
    return (linear_action(A_GOLDEN, **kw) + monomial(1.0, alpha=(2, 0), **kw)
            + cos_mode((1, 0), k=1, **kw) + cos_mode((1, 1), k=1, **kw))


def quad_fixture(N_max: int = 7, n_max: int = 6, amplitude: float = 0.3, curvature: float = 0.3) -> TruncatedSymbol:
    """p + i eps q with real p, q and a damping average F + b.xi.

    p = a.xi + c (xi1^2 - 0.3 xi1 xi2 + 0.5 xi2^2 - 0.1 xi1^3) + 0.2 h xi1
    q = 1 + 0.6 xi1 - xi2 + c (0.4 xi1^2 + 0.3 xi1 xi2^2 - 0.2 xi2^4)
        + h (0.25 + 0.15 xi2 + 0.1 xi1 xi2) + 0.05 h^2
        + amplitude (cos x1 + xi2 cos(x1 + x2) + 0.5 sin(x2))

    with ``c = curvature``.
    """
    kw = dict(N_max=N_max, n_max=n_max)
    c = curvature
    p = (linear_action(A_GOLDEN, **kw) + monomial(c, alpha=(2, 0), **kw)
         + monomial(-0.3 * c, alpha=(1, 1), **kw) + monomial(0.5 * c, alpha=(0, 2), **kw)
         + monomial(0.2, alpha=(1, 0), l=1, **kw) + monomial(-0.1 * c, alpha=(3, 0), **kw))
    q_avg = (monomial(1.0, k=1, **kw) + monomial(0.6, alpha=(1, 0), k=1, **kw)
             + monomial(-1.0, alpha=(0, 1), k=1, **kw) + monomial(0.4 * c, alpha=(2, 0), k=1, **kw)
             + monomial(0.25, k=1, l=1, **kw) + monomial(0.3 * c, alpha=(1, 2), k=1, **kw)
             + monomial(-0.2 * c, alpha=(0, 4), k=1, **kw) + monomial(0.15, alpha=(0, 1), k=1, l=1, **kw)
             + monomial(0.1, alpha=(1, 1), k=1, l=1, **kw) + monomial(0.05, k=1, l=2, **kw))
    sin_x2 = TruncatedSymbol({((0, 1), (0, 0), 1, 0): -0.5j, ((0, -1), (0, 0), 1, 0): 0.5j}, N_max, n_max)
    q_osc = (cos_mode((1, 0), k=1, **kw) + cos_mode((1, 1), alpha=(0, 1), k=1, **kw) + sin_x2 * 0.5) * amplitude
    return p + (q_avg + q_osc) * 1j


QUAD_QUANT = QuantizationData((2, 1), (0.0, 0.0))
QUAD_F = 1.0j


def quad_window(delta: float = 0.2, C: float = 1.0) -> SpectralWindow:
    # eigenvalues carry i eps <q>(0) = i eps, so Re F = 1 centres the window
    return SpectralWindow(delta, C, 1.0)
