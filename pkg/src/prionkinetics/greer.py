"""
Независимый одномерный решатель редуцированной системы без течения.

    ∂_t f + τ₀φ ∂_r f + g₀ r f = 2g ∫_r^∞ f dr',   dφ/dt = -τ₀φ ∫ f dr

Решатель использует общую сетку по r, но собственную сборку оператора
(трехдиагональная система, scipy.linalg.solve_banded).
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded

from .exceptions import ConfigurationNotDegenerate, TimestepTooLarge

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GreerState:
    """Состояние редуцированной системы: f(r), φ и константы скоростей."""

    f: np.ndarray
    phi: float
    tau0: float
    g0: float
    r: np.ndarray
    alpha: float
    eps: float = 0.0
    t: float = 0.0
    step: int = 0

    @property
    def dr(self) -> float:
        return float(self.r[1] - self.r[0])

    def _trapezoid(self, values: np.ndarray) -> float:
        return float(self.dr * (np.sum(values) - 0.5 * (values[0] + values[-1])))

    def count(self) -> float:
        """∫ f dr."""
        return self._trapezoid(self.f)

    def mass(self) -> float:
        """φ + ∫ r f dr."""
        return self.phi + self._trapezoid(self.r * self.f)


def greer_ledger(state: GreerState) -> Tuple[float, float]:
    """Константы k₁, k₂ при u = 0 (C_P = C_D = 0)."""
    k1 = 2.0 * state.g0 / state.alpha
    k2 = state.alpha * state.tau0 * state.phi
    return k1, k2


def greer_step(state: GreerState, dt: float) -> GreerState:
    """
    Один шаг неявной схемы Эйлера для редуцированной системы.

    Аргументы:
        state: Текущее состояние
        dt: Шаг по времени

    Возвращает:
        Новое состояние

    Вызывает:
        TimestepTooLarge: Если k₂Δt >= 1
    """
    _, k2 = greer_ledger(state)
    if k2 * dt >= 1.0:
        raise TimestepTooLarge(
            f"Редуцированная система: k2·Δt = {k2 * dt:.3f} >= 1", "timestep_too_large", {"k2": k2, "dt": dt}
        )

    f, r, dr = state.f, state.r, state.dr
    speed = state.tau0 * state.phi
    plus = np.exp(0.5 * state.alpha * dr)
    minus = np.exp(-0.5 * state.alpha * dr)
    eps = state.eps

    # хвостовой интеграл собственной кумулятивной суммой
    pieces = 0.5 * (f[1:] + f[:-1]) * dr
    tail = np.zeros_like(f)
    tail[:-1] = np.cumsum(pieces[::-1])[::-1]

    interior_r = r[1:-1]
    n = interior_r.size
    banded = np.zeros((3, n))
    banded[0, 1:] = -eps * plus / dr ** 2
    banded[1, :] = 1.0 / dt + speed / dr + state.g0 * interior_r + eps * (plus + minus) / dr ** 2
    banded[2, :-1] = -speed / dr - eps * minus / dr ** 2
    rhs = f[1:-1] / dt + 2.0 * state.g0 * tail[1:-1]

    f_new = np.zeros_like(f)
    f_new[1:-1] = solve_banded((1, 1), banded, rhs)
    phi_new = state.phi / (1.0 + dt * state.tau0 * state.count())
    return replace(state, f=f_new, phi=phi_new, t=state.t + dt, step=state.step + 1)


def greer_from_config(config) -> GreerState:
    """
    Начальное состояние редуцированной системы для вырожденной конфигурации.

    Аргументы:
        config: RunConfig

    Возвращает:
        GreerState с f = (1/|Ω|)∫ψ⁰ dη dy

    Вызывает:
        ConfigurationNotDegenerate: Если конфигурация не допускает редукции
    """
    from .simulation import build_initial_fields, build_grids

    reasons = degeneracy_violations(config)
    if reasons:
        raise ConfigurationNotDegenerate(
            "Конфигурация не сводится к одномерной системе: " + "; ".join(reasons),
            "not_degenerate",
            {"reasons": reasons},
        )
    lgrid, sgrid, ygrid = build_grids(config)
    psi0, phi0 = build_initial_fields(config, lgrid, sgrid, ygrid)
    f0 = np.tensordot(sgrid.weights, psi0, axes=(0, 1)).mean(axis=-1)
    eps = lgrid.dr ** 2 if config.solver.eps is None else config.solver.eps
    return GreerState(
        f=f0,
        phi=float(np.mean(phi0)),
        tau0=config.model.tau0,
        g0=config.model.g_lo,
        r=lgrid.nodes.copy(),
        alpha=config.model.alpha,
        eps=eps,
    )


def degeneracy_violations(config) -> List[str]:
    """Список нарушенных условий редукции (пустой, если редукция допустима)."""
    reasons = []
    if config.flow.kind != "zero":
        reasons.append(f"поле скорости '{config.flow.kind}' вместо 'zero'")
    g_rate = config.model.g_rate
    if g_rate.kind != "constant" or g_rate.g_lo != g_rate.g_hi:
        reasons.append(f"замыкание g '{g_rate.kind}' вместо постоянного g₀ = g̲")
    if config.initial.phi_bump != 0.0:
        reasons.append("начальное φ неоднородно по y")
    if config.initial.psi_kind != "zero" and config.initial.orientation != "uniform":
        reasons.append(f"начальное ψ неравномерно по η ('{config.initial.orientation}')")
    return reasons


def compare_with_full(config, n_steps: Optional[int] = None) -> dict:
    """
    Сравнение полного решателя в вырожденной конфигурации с одномерным.

    Аргументы:
        config: RunConfig
        n_steps: Число шагов; None - из конфигурации

    Возвращает:
        Словарь с рядом расхождений ‖f_full - f_ref‖_{L²} по шагам и максимумом

    Вызывает:
        ConfigurationNotDegenerate: Если конфигурация не допускает редукции
    """
    from .simulation import Simulator

    state = greer_from_config(config)
    steps = config.time.n_steps if n_steps is None else n_steps
    dt = config.time.dt
    discrepancies = []

    with Simulator(config, write_outputs=False) as sim:
        for full in sim.steps(n_steps=steps):
            if full.step == 0:
                continue
            state = greer_step(state, dt)
            f_full = np.tensordot(sim.sgrid.weights, full.psi, axes=(0, 1)).mean(axis=-1)
            diff = f_full - state.f
            discrepancy = float(np.sqrt(np.sum(sim.lgrid.weights * diff * diff)))
            discrepancies.append(discrepancy)

    worst = max(discrepancies, default=0.0)
    logger.info(f"Сравнение с одномерным решателем: {steps} шагов, максимальное расхождение {worst:.3e}")
    return {"discrepancies": discrepancies, "max_discrepancy": worst, "reference": state}


def run_greer(config, n_steps: Optional[int] = None) -> List[GreerState]:
    """Расчет только одномерной системы; возвращает состояния на всех шагах."""
    state = greer_from_config(config)
    steps = config.time.n_steps if n_steps is None else n_steps
    states = [state]
    for _ in range(steps):
        state = greer_step(state, config.time.dt)
        states.append(state)
    return states
