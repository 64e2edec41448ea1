"""Separable operations versus LOCC: optimal instruments, protocol simulation and gap bounds."""

from .algebra import (
    KET01,
    KET10,
    PHI_MINUS,
    PHI_PLUS,
    LocalGramParams,
    NotPositiveError,
    NullElementError,
    apply_product_kraus,
    concurrence_from_gram,
    concurrence_pure,
    gram_params,
)
from .classical import (
    ClassicalChannel,
    ClassicalSeparableAgent,
    PcNode,
    PcProtocol,
    build_classical_separable,
    channel_of_pc,
    channel_stats,
    compile_pc_to_locc,
    kbar,
)
from .gap import (
    GapResult,
    InfeasibleParameters,
    StarPoint,
    delta,
    delta_low,
    delta_min_analytic,
    delta_min_grid,
    f_pm,
    gamma_pm,
    in_enlarged_region,
    optimize_gap,
    solve_star_point,
    sweep_figure2,
)
from .locc import (
    BranchRecord,
    LocalInstrument,
    LoccProtocol,
    Party,
    ProtocolNode,
    audit_inequalities,
    build_protocol_family,
    classify,
    ebar_locc,
    simulate,
    verify_zigzag,
)
from .measures import EntanglementMeasure, EQMeasure, eq_eval, mu_condition_check, privacy_k
from .separable import (
    OutcomeStats,
    SeparableElement,
    SeparableInstrument,
    build_optimal_instrument,
    c_bound,
    check_efficiency,
    evaluate_ebar,
    p_functional,
    q_functional,
)

__version__ = "0.1.0"
