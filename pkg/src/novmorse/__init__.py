"""Novikov-field linear algebra, numerical Morse complexes and coherence checks."""

from .chain import (
    ArnoldCertificate,
    ChainComplex,
    GradedModule,
    LambdaRank,
    LinearMap,
    arnold_bound,
    check_anticommutes,
    check_chain_homotopy,
    check_chain_map,
    compose,
    lambda_rank,
    sign_adjust,
)
from .coherence import (
    CountSystem,
    HomologyClass,
    IndexData,
    PipelineVerdict,
    build_maps,
    check_h_claim,
    check_iota_claim,
    check_triangularity,
    index_h,
    index_iota,
    index_pss,
    index_ssp,
    morse_mirror,
    run_pipeline,
)
from .errors import *  # noqa: F401,F403
from .homology import BettiVector, CubicalComplex, betti, cubical_complex, homology_basis, homology_rank_lambda
from .novikov import (
    NovikovMatrix,
    NovikovScalar,
    mat_det,
    mat_invert,
    mat_lemma22_check,
    nov_add,
    nov_invert,
    nov_mul,
    nov_valuation,
)
from .reports import VerificationReport

__version__ = "0.1.0"
