"""Exact computations for open r-spin x s-spin invariants and their mirror."""

from .combinatorics import (ClosedInsertion, DoubleNegative, Marking, ModelParams,
                            Selection, closed_selection, open_witten_ranks)
from .chamber import (ChamberDomain, ChamberError, ChamberIndex, amplitude,
                      build_minimal_chamber, check_axioms)
from .bmodel import (build_potential, build_potential_sym, extract_amplitudes,
                     period_integral, period_integrals)
from .wallcross import (GroupElement, act_on_chamber, connect, make_generator,
                        preservation_check)
from .invariants import (DEFAULT_CONVENTION, SignConvention, ext_invariant,
                         verify_mirror)

__all__ = [
    "ClosedInsertion", "DoubleNegative", "Marking", "ModelParams", "Selection",
    "closed_selection", "open_witten_ranks", "ChamberDomain", "ChamberError",
    "ChamberIndex", "amplitude", "build_minimal_chamber", "check_axioms",
    "build_potential", "build_potential_sym", "extract_amplitudes",
    "period_integral", "period_integrals", "GroupElement", "act_on_chamber",
    "connect", "make_generator", "preservation_check", "DEFAULT_CONVENTION",
    "SignConvention", "ext_invariant", "verify_mirror",
]
