"""Quantum Birkhoff normal forms near a Diophantine torus and their spectral inversion."""
from .errors import (CutoffMismatchError, CutoffOverflowError, DiophantineError, GeneratorGradingError,
                     OrderingError, QBNFError, RankDeficiencyError, ScheduleError, SearchBoundError,
                     TruncationWarning, UncertifiedModeError, WeylParityError)
from .frequency import FrequencyData, auto_frequency, check_diophantine, separation_witness
from .inverse import (FixedPower, FreeEps, IndexClass, RecoveryReport, classify_indices, fit_class,
                      recover)
from .lattice import Association, associate, associate_lattice
from .normal_form import (NormalForm, NormalizationResult, apply_symmetry, birkhoff_normalize,
                          conjugate_sequence, lie_conjugate, solve_cohomological)
from .spectrum import (QuantizationData, SpectralDataset, SpectralRecord, SpectralWindow,
                       bohr_sommerfeld_action, generate_spectrum, inject_noise, quasi_eigenvalue)
from .symbols import (GradedIndex, HomogeneousPolynomial, TruncatedSymbol, moyal_bracket_over_h,
                      moyal_product, poisson_bracket)

__all__ = [name for name in dir() if not name.startswith("_")]
