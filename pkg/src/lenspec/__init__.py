"""Length spectra of genus-2 surface group representations into SL(n, R)."""

from .asymptotic import (ConvergenceReport, DerivativeReport, RatioSeries,
                         convergence_report, derivative_consistency,
                         ratio_series)
from .config import Tolerances
from .currents import (CurrentCombo, combo_arith, current_length, parse_combo,
                       pullback_R, unoriented_embed)
from .eigen import DegenerateSpectrumError, EigenData, eigen_sorted
from .reps import (NewtonDivergenceError, RepresentationError, ScaledMatrix,
                   SurfaceRep, ValidationReport, build_octagon_fuchsian,
                   deform, evaluate, load_rep, save_rep, sym_power_lift,
                   validate)
from .spectrum import (FibreMetric, IdentityReport, LengthVector,
                       SpectrumEntry, eigenline_flip_check, identity_report,
                       length_vector, orbit_integral, spectrum,
                       thurston_length)
from .words import (ConjugacyClass, IdentityClassError, Presentation, Word,
                    WordSyntaxError, conjugacy_class, enumerate_classes,
                    free_reduce)

__version__ = "0.1.0"
