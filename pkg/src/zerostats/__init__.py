"""Zero ordinates of zeta and Dirichlet L-functions and the statistics of their differences."""

from .zeta_engine import (BracketingError, PrecisionWarning, ZeroSequence, ZFunctionConfig, count_zeros,
                          find_dirichlet_zeros, find_riemann_zeros, hardy_z, lfunc_z, riemann_siegel_theta)
from .dirichlet_ene import (DirichletCharacter, character, characters_mod, ene_euler, l_function,
                            predict_deltas, zeta_symbol)
from .delta_engine import DeltaHistogram, WindowParams, auto_deltas, cross_deltas
from .zero_ingest import ZeroFileSpec, parse_zero_file, read_cache, write_cache
from .spike_analysis import detect_deficits, match_zeros, Threshold

__version__ = "0.1.0"
