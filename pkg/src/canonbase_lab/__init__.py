"""canonbase-lab: canonical-base constructions over finite measure spaces,
verified against brute-force oracles."""

from .measure_core import (
    ExtensionPair,
    LatticeElement,
    MeasureSpace,
    SubStructure,
    band_decompose,
    cond_exp,
    distance,
    lattice_op,
    lp_norm,
    orthogonal,
    signed_power,
)
from .legendre import PLConvexFn, attainment_check, biconjugate, conjugate
from .krivine import (
    HomogeneousFn,
    approximate_on_sphere,
    eval_element,
    eval_scalar,
    interpolating_term,
    parse_term,
    term_sup_norm,
    to_text,
)
from .lp_canon import (
    LpCanonicalBase,
    canonical_base_1type,
    canonical_base_ntype,
    f_zero,
    grid_approx,
    increasing_realisation,
    interval_cond_exp,
    lq_transport,
    p1_counterexample,
    partial_cond_exp,
    psi,
    remark_counterexample,
    slices,
)
from .oracle import DirectionalMass, absolute_type_equal, type_equal_1, type_equal_n

__version__ = "0.1.0"
