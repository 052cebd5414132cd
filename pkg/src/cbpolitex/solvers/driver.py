"""Iteration driver shared by CBP, GDA and CRPO."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..cmdp import IterateLog, Policy, TabularCmdp, evaluate_table
from ..envs import sample_state_trajectory
from ..estimation import estimate_constraint_value, truncation_horizon
from ..lp import Infeasible
from .updates import (
    CoinBettingDual,
    PracticalCoinDual,
    PrimalCoinState,
    ProjectedGDDual,
    cb_primal_step,
    crpo_step,
    entropy_regularized_q,
    gda_theory_stepsizes,
    mirror_ascent_step,
    normalized_advantage,
)

log = logging.getLogger(__name__)

ALGORITHMS = ("cbp", "cbp_practical", "gda", "gda_theory", "crpo")

# stream ids for deriving per-iteration seeds
_STREAM_FEASIBILITY = 1
_STREAM_MAIN = 2
_STREAM_VISITS = 3


class InfeasibleProblem(Infeasible):
    def __init__(self, zeta_hat: float):
        super().__init__(f"estimated zeta = {zeta_hat:.6g} <= 0")
        self.zeta_hat = zeta_hat


@dataclass
class RunConfig:
    algorithm: str = "cbp_practical"
    T: int = 500
    seed: int = 0
    alpha_lambda: float | None = None
    alpha_pi: float | None = None
    eta_tol: float = 0.0
    nu_ent: float = 0.0
    lambda0: float = 0.0
    pre_iterations: int = 200
    anytime: bool = False
    visited_only: bool = False
    U: float | None = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.T < 0:
            raise ValueError("T must be non-negative")
        if self.algorithm == "cbp_practical" and not (self.alpha_lambda and self.alpha_lambda > 0):
            raise ValueError("cbp_practical needs alpha_lambda > 0")
        if self.algorithm == "gda":
            if self.alpha_pi is None or self.alpha_pi < 0:
                raise ValueError("gda needs alpha_pi >= 0")
            if self.alpha_lambda is None or self.alpha_lambda < 0:
                raise ValueError("gda needs alpha_lambda >= 0")
        if self.algorithm == "crpo" and (self.alpha_pi is None or self.alpha_pi < 0):
            raise ValueError("crpo needs alpha_pi >= 0")
        if self.nu_ent < 0:
            raise ValueError("entropy coefficient must be non-negative")
        if self.pre_iterations < 1:
            raise ValueError("pre_iterations must be >= 1")
        if self.U is not None and self.U <= 0:
            raise ValueError("U must be positive")


@dataclass
class Feasibility:
    feasible: bool
    zeta_hat: float
    U: float
    policy: Policy


def derive_seed(seed: int, stream: int, t: int) -> int:
    return int(np.random.SeedSequence([int(seed), stream, int(t)]).generate_state(1)[0])


def dual_cap(zeta: float, gamma: float) -> float:
    """``U = 2 / (zeta (1 - gamma))``; infinite at ``zeta == 0``."""
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    return math.inf if zeta == 0 else 2.0 / (zeta * (1.0 - gamma))


def estimate_feasibility_and_u(cmdp: TabularCmdp, estimator, pre_iterations: int = 200,
                               seed: int = 0) -> Feasibility:
    """Maximize the constraint value with the coin-betting primal alone, then set
    ``zeta_hat = J_c_hat(pi~) - b`` and ``U = 2 / (zeta_hat (1 - gamma))``."""
    S, A = cmdp.n_states, cmdp.n_actions
    state = PrimalCoinState(Policy.uniform(S, A).probs, T=pre_iterations)
    pi = state.policy()
    for t in range(pre_iterations):
        _, q_c = estimator(pi, derive_seed(seed, _STREAM_FEASIBILITY, t))
        pi = cb_primal_step(state, normalized_advantage(q_c, pi, 0.0, cmdp.gamma))
    _, q_c = estimator(pi, derive_seed(seed, _STREAM_FEASIBILITY, pre_iterations))
    zeta_hat = estimate_constraint_value(cmdp.rho, pi, q_c) - cmdp.threshold
    if zeta_hat < 0:
        raise InfeasibleProblem(zeta_hat)
    return Feasibility(True, zeta_hat, dual_cap(zeta_hat, cmdp.gamma), pi)


def run_algorithm(cmdp: TabularCmdp, estimator, config: RunConfig) -> IterateLog:
    """Run ``config.T`` primal-dual iterations.

    Row ``t`` of the log holds the true values of ``pi_t`` (exact evaluation),
    the estimated constraint value used by the dual step, ``lambda_t`` and the
    estimates handed to the primal step.
    """
    config.validate()
    S, A, gamma, b = cmdp.n_states, cmdp.n_actions, cmdp.gamma, cmdp.threshold
    out = IterateLog(seed=config.seed)
    if config.T == 0:
        return out

    feas = estimate_feasibility_and_u(cmdp, estimator, config.pre_iterations, config.seed)
    out.zeta_hat = feas.zeta_hat
    if feas.zeta_hat == 0:
        out.info["boundary_solution"] = feas.policy
        out.U = math.inf
        return out
    U = config.U if config.U is not None else feas.U
    out.U = U

    pi = Policy.uniform(S, A)
    alg = config.algorithm
    coin = PrimalCoinState(pi.probs, T=config.T) if alg.startswith("cbp") else None
    eta1 = eta2 = None
    if alg == "cbp":
        dual = CoinBettingDual(lam=config.lambda0, U=U, lam0=config.lambda0, gamma=gamma)
    elif alg == "cbp_practical":
        dual = PracticalCoinDual(lam=config.lambda0, U=U, lam0=config.lambda0,
                                 alpha=config.alpha_lambda)
    elif alg == "gda":
        eta1, eta2 = config.alpha_pi, config.alpha_lambda
        dual = ProjectedGDDual(lam=config.lambda0, U=U, lam0=config.lambda0, eta2=eta2)
    elif alg == "gda_theory":
        eta1, eta2 = gda_theory_stepsizes(config.T, A, gamma, U)
        dual = ProjectedGDDual(lam=config.lambda0, U=U, lam0=config.lambda0, eta2=eta2)
    else:
        dual = None
    out.info.update({"algorithm": alg, "eta1": eta1, "eta2": eta2})
    lam = config.lambda0 if dual is not None else 0.0
    H = truncation_horizon(gamma)

    t0 = time.perf_counter()
    for t in range(config.T):
        q_r, q_c = estimator(pi, derive_seed(config.seed, _STREAM_MAIN, t))
        est_Jc = estimate_constraint_value(cmdp.rho, pi, q_c)
        mask = None
        if config.visited_only:
            rng = np.random.default_rng(derive_seed(config.seed, _STREAM_VISITS, t))
            mask = np.zeros(S, dtype=bool)
            mask[sample_state_trajectory(cmdp, pi, H, rng)] = True

        if alg == "crpo":
            # entropy bonus applies to whichever signal CRPO ascends
            bonus = entropy_regularized_q(np.zeros_like(q_r), q_c, 0.0, config.nu_ent, pi)
            new_pi = crpo_step(pi, q_r + bonus, q_c + bonus, est_Jc, b, config.eta_tol,
                               config.alpha_pi, mask)
        else:
            q_l = entropy_regularized_q(q_r, q_c, lam, config.nu_ent, pi)
            if alg in ("gda", "gda_theory"):
                if config.anytime and alg == "gda_theory":
                    eta1, _ = gda_theory_stepsizes(config.T, A, gamma, U, t=t + 1)
                new_pi = mirror_ascent_step(pi, q_l, eta1, mask)
            else:
                new_pi = cb_primal_step(coin, normalized_advantage(q_l, pi, U, gamma), mask)

        V_r, _ = evaluate_table(cmdp, pi, cmdp.reward)
        V_c, _ = evaluate_table(cmdp, pi, cmdp.constraint_reward)
        out.append(J_r=cmdp.rho @ V_r, J_c=cmdp.rho @ V_c, est_Jc=est_Jc, lam=lam,
                   policy=pi.probs, q_r=q_r, q_c=q_c, wall_clock=time.perf_counter() - t0)

        if dual is not None:
            if alg == "gda_theory" and config.anytime:
                dual.eta2 = gda_theory_stepsizes(config.T, A, gamma, U, t=t + 1)[1]
            lam = dual.step(est_Jc, b)
        pi = new_pi
    return out
