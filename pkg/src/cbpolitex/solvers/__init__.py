from .driver import (
    ALGORITHMS,
    Feasibility,
    InfeasibleProblem,
    RunConfig,
    derive_seed,
    dual_cap,
    estimate_feasibility_and_u,
    run_algorithm,
)
from .updates import (
    CoinBettingDual,
    PracticalCoinDual,
    PrimalCoinState,
    ProjectedGDDual,
    cb_dual_step,
    cb_primal_step,
    crpo_step,
    entropy_regularized_q,
    gda_theory_stepsizes,
    mirror_ascent_step,
    normalized_advantage,
    practical_cb_dual_step,
    projected_gd_dual_step,
)
