"""Robust two-realization optimization loop.

Each evaluation runs, per realization q in {blueprint, eroded}:
filter -> project(eta_q, beta) -> pin non-design regions -> flow coefficients
-> flow solve A_q p_q = 0 -> F_q = -T p_q -> elastic solve K_q u_q = F_q ->
objective/constraints -> adjoints -> chain rule to the raw design variables.
The volume constraint reads the blueprint field only, the strain-energy
constraint the eroded field only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elasticity, fields, pressure, sensitivity
from .config import OptConfig
from .errors import PneutopError
from .mesh import NDS, NDV, build_domain
from .mma import MmaState, mma_update

ETA_BLUEPRINT = 0.5

HISTORY_COLUMNS = (
    "iter", "beta", "f_b", "f_e", "g1", "g2", "grayness_b", "grayness_e",
    "change", "robust_gap_min", "se_e",
)


@dataclass
class RealizationState:
    rho_bar: np.ndarray
    p: np.ndarray
    u: np.ndarray
    u_out: float
    se: float
    flow_system: object
    elastic_system: object


@dataclass
class RobustEvaluation:
    f_b: float
    f_e: float
    g1: float
    g2: float
    se_e: float
    se_star_used: float
    grayness_b: float
    grayness_e: float
    robust_gap_min: float
    grad_f_b: np.ndarray | None = None
    grad_f_e: np.ndarray | None = None
    grad_g1: np.ndarray | None = None
    grad_g2: np.ndarray | None = None
    blueprint: RealizationState | None = None
    eroded: RealizationState | None = None


@dataclass
class OptimizationResult:
    rho: np.ndarray
    rho_bar_b: np.ndarray
    rho_bar_e: np.ndarray
    history: list[dict]
    se_star: float
    final: RobustEvaluation
    stopped_early: bool = False


class Evaluator:
    """Owns the mesh-dependent constants of one optimization problem."""

    def __init__(self, cfg: OptConfig):
        self.cfg = cfg
        self.domain = build_domain(cfg.domain)
        h = self.domain.elem_size
        self.filter = fields.build_filter(self.domain, cfg.rmin * h)
        self.t = pressure.build_coupling(self.domain)
        self.ke_unit = elasticity.element_stiffness(1.0, cfg.nu, h)
        self.ce = pressure.element_conduction(h)
        self.me = pressure.element_mass(h)
        self.l = self.domain.output_selector()
        self.design = self.domain.design_mask()
        self.eta_e = ETA_BLUEPRINT + cfg.delta_eta

    @property
    def n_design(self) -> int:
        return int(self.design.sum())

    def initial_rho(self) -> np.ndarray:
        """Raw design vector initialized at the permitted volume fraction."""
        rho = np.full(self.domain.nel, self.cfg.v_star)
        rho[self.domain.tags == NDS] = 1.0
        rho[self.domain.tags == NDV] = 0.0
        return rho

    def full_rho(self, x: np.ndarray) -> np.ndarray:
        rho = self.initial_rho()
        rho[self.design] = x
        return rho

    def _chain(self, grad_bar: np.ndarray, dproj: np.ndarray) -> np.ndarray:
        """rho_bar gradient -> raw-variable gradient on the free design set."""
        return fields.filter_backward(self.filter, grad_bar * dproj)[self.design]

    def _realization(self, rho_tilde, eta, beta):
        cfg = self.cfg
        rho_bar, dproj = fields.project(rho_tilde, eta, beta)
        rho_bar, dproj = fields.enforce_regions(rho_bar, dproj, self.domain)
        k, dk = pressure.flow_coefficient(rho_bar, cfg.flow)
        dcoef, ddcoef = pressure.drainage_coefficient(rho_bar, cfg.flow)
        a = pressure.assemble_flow(self.domain, k, dcoef)
        p, flow_system = pressure.solve_pressure(a, self.domain, cfg.flow)
        f = -(self.t @ p)
        e_field, de = fields.simp_modulus(rho_bar, cfg.e0, cfg.e1, cfg.penalty)
        elastic = elasticity.assemble_and_solve(self.domain, e_field, f, cfg.nu)
        state = RealizationState(
            rho_bar=rho_bar,
            p=p,
            u=elastic.u,
            u_out=elastic.u_out,
            se=elastic.se,
            flow_system=flow_system,
            elastic_system=elastic.system,
        )
        partials = {"de": de, "dk": dk, "dd": ddcoef, "dproj": dproj}
        return state, partials

    def evaluate(
        self,
        rho: np.ndarray,
        beta: float,
        se_star: float | None = None,
        with_gradients: bool = True,
        include_load_term: bool = True,
        keep_states: bool = False,
    ) -> RobustEvaluation:
        cfg = self.cfg
        rho = np.asarray(rho, dtype=float)
        if np.any(rho < -1e-12) or np.any(rho > 1 + 1e-12):
            raise PneutopError("raw design variables must lie in [0, 1]")
        rho_tilde = fields.apply_filter(self.filter, rho)

        bstate, bpart = self._realization(rho_tilde, ETA_BLUEPRINT, beta)
        estate, epart = self._realization(rho_tilde, self.eta_e, beta)

        g1, dg1_bar = elasticity.volume_constraint(
            bstate.rho_bar, self.domain.volumes, cfg.v_star
        )
        se_star_used = cfg.s_f * estate.se if se_star is None else se_star
        g2 = elasticity.strain_energy_constraint(estate.se, se_star_used)

        ev = RobustEvaluation(
            f_b=bstate.u_out,
            f_e=estate.u_out,
            g1=g1,
            g2=g2,
            se_e=estate.se,
            se_star_used=se_star_used,
            grayness_b=fields.grayness(bstate.rho_bar),
            grayness_e=fields.grayness(estate.rho_bar),
            robust_gap_min=float(np.min(bstate.rho_bar - estate.rho_bar)),
        )
        if with_gradients:
            for state, part, attr in (
                (bstate, bpart, "grad_f_b"),
                (estate, epart, "grad_f_e"),
            ):
                grad_bar = sensitivity.adjoint_objective(
                    self.domain,
                    state.elastic_system,
                    state.flow_system,
                    self.t,
                    self.l,
                    state.u,
                    state.p,
                    part["de"],
                    part["dk"],
                    part["dd"],
                    self.ke_unit,
                    self.ce,
                    self.me,
                    include_load_term=include_load_term,
                )
                setattr(ev, attr, self._chain(grad_bar, part["dproj"]))
            ev.grad_g1 = self._chain(dg1_bar, bpart["dproj"])
            dg2_bar = sensitivity.adjoint_strain_energy(
                self.domain,
                estate.flow_system,
                self.t,
                estate.u,
                estate.p,
                epart["de"],
                epart["dk"],
                epart["dd"],
                self.ke_unit,
                self.ce,
                self.me,
                se_star_used,
                include_load_term=include_load_term,
            )
            ev.grad_g2 = self._chain(dg2_bar, epart["dproj"])
        if keep_states:
            ev.blueprint = bstate
            ev.eroded = estate
        else:
            ev.blueprint = RealizationState(
                bstate.rho_bar, None, None, bstate.u_out, bstate.se, None, None
            )
            ev.eroded = RealizationState(
                estate.rho_bar, None, None, estate.u_out, estate.se, None, None
            )
        return ev


def beta_at(cfg: OptConfig, iteration: int) -> float:
    """Projection steepness for history iteration `iteration` (1-based)."""
    doublings = (iteration - 1) // cfg.beta_double_every
    return min(cfg.beta_start * 2.0**doublings, cfg.beta_max)


def evaluate(rho: np.ndarray, beta: float, cfg: OptConfig, **kwargs) -> RobustEvaluation:
    """One-shot evaluation; builds a fresh Evaluator."""
    return Evaluator(cfg).evaluate(rho, beta, **kwargs)


def run(cfg: OptConfig, callback=None) -> OptimizationResult:
    """Full optimization: beta continuation, frozen se*, MMA updates.

    History rows are one per evaluation: iteration k holds the design after
    k - 1 MMA updates, evaluated at beta_at(cfg, k); the last row (iteration
    max_iter + 1) is the final design.  `callback(iteration, evaluation, rho)`
    runs after each history row is recorded.
    """
    ev_machine = Evaluator(cfg)
    rho = ev_machine.initial_rho()
    x = rho[ev_machine.design]
    mma_state = MmaState.new(x.size)
    se_star = None
    obj_scale = cfg.obj_scale if cfg.obj_scale > 0 else None
    history: list[dict] = []
    stopped_early = False
    final_eval = None

    def record(iteration, beta, evaluation, change):
        row = {
            "iter": iteration,
            "beta": beta,
            "f_b": evaluation.f_b,
            "f_e": evaluation.f_e,
            "g1": evaluation.g1,
            "g2": evaluation.g2,
            "grayness_b": evaluation.grayness_b,
            "grayness_e": evaluation.grayness_e,
            "change": change,
            "robust_gap_min": evaluation.robust_gap_min,
            "se_e": evaluation.se_e,
        }
        history.append(row)
        if callback is not None:
            callback(iteration, evaluation, rho)

    for it in range(1, cfg.max_iter + 1):
        beta = beta_at(cfg, it)
        evaluation = ev_machine.evaluate(rho, beta, se_star=se_star)
        if se_star is None:
            # Frozen once, before the first MMA update, from the eroded design.
            se_star = evaluation.se_star_used
        if obj_scale is None:
            scale_ref = max(abs(evaluation.f_b), abs(evaluation.f_e), 1e-3)
            obj_scale = 1.0 / scale_ref

        x_new, mma_state, _ = mma_update(
            mma_state,
            x,
            f_values=np.array([evaluation.f_b, evaluation.f_e]) * obj_scale,
            f_grads=np.vstack([evaluation.grad_f_b, evaluation.grad_f_e]) * obj_scale,
            g_values=np.array([evaluation.g1 - 1.0, evaluation.g2 - 1.0]),
            g_grads=np.vstack([evaluation.grad_g1, evaluation.grad_g2]),
            lower=0.0,
            upper=1.0,
            options=cfg.mma,
        )
        change = float(np.max(np.abs(x_new - x)))
        record(it, beta, evaluation, change)
        x = x_new
        rho = ev_machine.full_rho(x)
        if (
            cfg.early_stop
            and change < 1e-3
            and beta >= cfg.beta_max
            and evaluation.g1 <= 1 + 1e-3
            and evaluation.g2 <= 1 + 1e-3
        ):
            stopped_early = True
            break

    final_beta = beta_at(cfg, len(history) + 1) if history else cfg.beta_start
    final_eval = ev_machine.evaluate(
        rho, final_beta, se_star=se_star, keep_states=True
    )
    if se_star is None:
        se_star = final_eval.se_star_used
    record(len(history) + 1, final_beta, final_eval, 0.0)

    return OptimizationResult(
        rho=rho,
        rho_bar_b=final_eval.blueprint.rho_bar,
        rho_bar_e=final_eval.eroded.rho_bar,
        history=history,
        se_star=se_star,
        final=final_eval,
        stopped_early=stopped_early,
    )
