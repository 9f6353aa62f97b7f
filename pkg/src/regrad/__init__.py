"""Consistency checks for amplitude assignments over multi-slit setups.

Given a theory that assigns a complex amplitude to each configuration of
open slits, regrad tests whether the joint amplitude is a function of the
single-slit ones (a representation), whether that function is associative,
and whether an additive regraduation xi exists.
"""
__version__ = "0.1.0"

from .analysis import (
    RULES,
    AssociativityReport,
    CombinatorRule,
    CombinatorTable,
    RepresentationVerdict,
    Witness,
    check_associativity,
    check_representation,
    fit_combinator,
    identify_closed_form,
    verify_witness,
)
from .regraduation import (
    ConstraintSet,
    RegraduationResult,
    XiTable,
    build_constraints,
    regraduate_combinator,
    solve_constraints,
    verify_additivity,
)
from .setup_algebra import (
    Atom,
    Configuration,
    Join,
    association_trees,
    association_variants,
    canonicalize,
    parse_setup,
    render,
)
from .theory import (
    Sampler,
    Theory,
    WaveState,
    detector_amplitude,
    full_assignment,
    phi,
    project_closed,
    sample_wavestate,
)
