"""chaoscope: volume expansion, C-functions and Lyapunov chaos of learning in games."""

from .certificates import (
    ChaosCertificate,
    DominationReport,
    cbar_sample,
    certify_graphical_family,
    certify_mwu_chaos_domination,
    certify_mwu_chaos_lp,
    certify_potential_negativity,
    check_domination,
)
from .cfunction import (
    c_bimatrix,
    c_bimatrix_expectation_form,
    c_graphical,
    c_multi,
    c_value,
    c_zero_sum_quadruple,
    induced_graphical_game,
)
from .decomposition import (
    chebyshev_fit,
    decompose,
    extract_bimatrix_potential,
    extract_potential,
    is_potential,
    is_trivial,
    l2_trivial_projection,
)
from .dynamics import (
    Algorithm,
    Regularizer,
    TrajectoryAborted,
    TrajectoryRecord,
    UpdateRule,
    equilibrium_escape_probe,
    ftrl_step,
    mwu_step,
    omwu_step,
    omwu_surrogate_step,
    run_trajectory,
)
from .game_core import (
    BimatrixGame,
    GameFormatError,
    GraphicalGame,
    NormalFormGame,
    RegionSpec,
    dual_to_primal,
    expected_payoff,
    graphical_to_normal_form,
    in_region,
    load_game,
)
from .volume_lab import (
    DivergenceReport,
    GradualMap,
    VolumeLedger,
    accumulate_log_volume,
    ensemble_divergence,
    extract_c_coefficient,
    numerical_jacobian,
    volume_integrand,
)

__version__ = "0.1.0"

__all__ = [
    "accumulate_log_volume",
    "Algorithm",
    "BimatrixGame",
    "c_bimatrix",
    "c_bimatrix_expectation_form",
    "c_graphical",
    "c_multi",
    "c_value",
    "c_zero_sum_quadruple",
    "cbar_sample",
    "certify_graphical_family",
    "certify_mwu_chaos_domination",
    "certify_mwu_chaos_lp",
    "certify_potential_negativity",
    "ChaosCertificate",
    "chebyshev_fit",
    "check_domination",
    "decompose",
    "DivergenceReport",
    "DominationReport",
    "dual_to_primal",
    "ensemble_divergence",
    "equilibrium_escape_probe",
    "expected_payoff",
    "extract_bimatrix_potential",
    "extract_c_coefficient",
    "extract_potential",
    "ftrl_step",
    "GameFormatError",
    "GradualMap",
    "graphical_to_normal_form",
    "GraphicalGame",
    "in_region",
    "induced_graphical_game",
    "is_potential",
    "is_trivial",
    "l2_trivial_projection",
    "load_game",
    "mwu_step",
    "NormalFormGame",
    "numerical_jacobian",
    "omwu_step",
    "omwu_surrogate_step",
    "RegionSpec",
    "Regularizer",
    "run_trajectory",
    "TrajectoryAborted",
    "TrajectoryRecord",
    "UpdateRule",
    "volume_integrand",
    "VolumeLedger",
]
