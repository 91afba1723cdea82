"""
Исследование сходимости: серия расчетов с Δt/2^l и Δr/2^l.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .config import RunConfig
from .exceptions import ConfigurationError
from .length import weighted_norm_sq
from .simulation import Simulator, build_grids

logger = logging.getLogger(__name__)

# Разности ниже порога считаются нулевыми, порядок для них не определен
ORDER_FLOOR = 1e-14
REFERENCE_NOTE = "# эталон: экстраполяция Ричардсона 2·u_L - u_{L-1} по самому мелкому уровню"


@dataclass
class LevelResult:
    """Итог одного уровня измельчения."""

    level: int
    dt: float
    n_r: int
    mass_drift: float
    psi: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)


@dataclass
class ConvergenceRow:
    """Строка таблицы порядков уровня l: ошибки относительно эталона и порядки по паре (l, l+1)."""

    level: int
    dt: float
    n_r: int
    psi_difference: float
    phi_difference: float
    mass_drift: float
    psi_order: float = float("nan")
    phi_order: float = float("nan")
    mass_order: float = float("nan")


@dataclass
class ConvergenceTable:
    """Таблица наблюдаемых порядков."""

    rows: List[ConvergenceRow]
    config_hash: str

    def orders(self, quantity: str = "psi") -> List[float]:
        return [getattr(row, f"{quantity}_order") for row in self.rows if not math.isnan(getattr(row, f"{quantity}_order"))]

    @property
    def temporal_order(self) -> float:
        """Средний наблюдаемый порядок по ψ."""
        values = self.orders("psi")
        return float(np.mean(values)) if values else float("nan")

    def format(self) -> str:
        header = f"{'level':>5} {'dt':>10} {'n_r':>6} {'|dpsi|':>11} {'p_psi':>6} {'|dphi|':>11} {'p_phi':>6} {'drift':>11} {'p_drift':>7}"
        lines = [REFERENCE_NOTE, header]
        for row in self.rows:
            lines.append(
                f"{row.level:>5d} {row.dt:>10.3e} {row.n_r:>6d} {row.psi_difference:>11.3e} {row.psi_order:>6.2f} "
                f"{row.phi_difference:>11.3e} {row.phi_order:>6.2f} {row.mass_drift:>11.3e} {row.mass_order:>7.2f}"
            )
        return "\n".join(lines)


def _order(coarse: float, fine: float) -> float:
    if abs(coarse) < ORDER_FLOOR or abs(fine) < ORDER_FLOOR:
        return float("nan")
    return math.log2(abs(coarse) / abs(fine))


def run_level(base_config: RunConfig, level: int) -> LevelResult:
    """Расчет уровня l без записи файлов."""
    config = base_config.refined(level)
    with Simulator(config, write_outputs=False) as sim:
        artifacts = sim.run()
    drift = artifacts.records[-1].mass_drift if artifacts.records else 0.0
    logger.info(f"Уровень {level}: Δt={config.time.dt:g}, n_r={config.length.n_r}, дрейф массы {drift:.3e}")
    return LevelResult(level, config.time.dt, config.length.n_r, drift, artifacts.final.psi, artifacts.final.phi)


def convergence_study(base_config: RunConfig, levels: int = 4, results: Optional[List[LevelResult]] = None) -> ConvergenceTable:
    """
    Наблюдаемые порядки по ошибкам относительно эталона самого мелкого уровня.

    Эталон строится по двум последним уровням как u* = 2·u_L - u_{L-1}
    (экстраполяция Ричардсона для схемы первого порядка) на сетке уровня L-1.
    Ошибка уровня l < L: e_l = ‖u_l - u*‖ после выборки узлов u* с шагом 2^{L-1-l}.

    Аргументы:
        base_config: Конфигурация уровня 0
        levels: Число уровней (>= 3)
        results: Готовые результаты уровней (для повторного анализа)

    Возвращает:
        ConvergenceTable; порядки ψ в норме L²_α, φ в L², дрейфа массы

    Вызывает:
        ConfigurationError: Если уровней меньше трех
    """
    if levels < 3:
        raise ConfigurationError(f"Для исследования сходимости нужно >= 3 уровней, получено {levels}", "too_few_levels")
    if results is None:
        results = [run_level(base_config, level) for level in range(levels)]

    finest, previous = results[-1], results[-2]
    psi_ref = 2.0 * finest.psi[::2] - previous.psi
    phi_ref = 2.0 * finest.phi - previous.phi

    rows: List[ConvergenceRow] = []
    for index, result in enumerate(results[:-1]):
        stride = 2 ** (len(results) - 2 - index)
        config = base_config.refined(result.level)
        lgrid, sgrid, ygrid = build_grids(config)
        psi_diff = result.psi - psi_ref[::stride]
        psi_difference = math.sqrt(weighted_norm_sq(psi_diff, "L2alpha", lgrid, sgrid, ygrid.cell_volume))
        phi_difference = float(np.sqrt(np.sum((result.phi - phi_ref) ** 2) * ygrid.cell_volume))
        rows.append(ConvergenceRow(result.level, result.dt, result.n_r, psi_difference, phi_difference, result.mass_drift))

    for row, next_row, coarse, fine in zip(rows[:-1], rows[1:], results[:-2], results[1:-1]):
        row.psi_order = _order(row.psi_difference, next_row.psi_difference)
        row.phi_order = _order(row.phi_difference, next_row.phi_difference)
        row.mass_order = _order(coarse.mass_drift, fine.mass_drift)

    table = ConvergenceTable(rows, base_config.hash)
    logger.info(f"Исследование сходимости завершено:\n{table.format()}")
    return table
