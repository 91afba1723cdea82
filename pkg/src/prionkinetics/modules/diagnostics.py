"""
Модуль диагностики: масса, число полимеров, тензор напряжений, запас огибающей.

Все величины вычисляются собственной квадратурой, независимо от внутренних
структур решателя.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .base import BaseStepModule

CSV_FIELDS = (
    "step",
    "t",
    "total_mass",
    "monomer_total",
    "polymer_mass",
    "polymer_count",
    "stress_xx",
    "stress_yy",
    "stress_zz",
    "stress_xy",
    "stress_xz",
    "stress_yz",
    "stress_min_eig",
    "envelope_margin",
    "psi_energy",
    "phi_energy",
    "mass_drift",
)


@dataclass
class DiagnosticsRecord:
    """Набор контролируемых величин в момент t."""

    step: int
    t: float
    total_mass: float
    monomer_total: float
    polymer_mass: float
    polymer_count: float
    stress: np.ndarray = field(repr=False)
    stress_mean: np.ndarray = field(repr=False)
    stress_min_eig: float = 0.0
    envelope_margin: float = float("nan")
    psi_energy: float = float("nan")
    phi_energy: float = float("nan")
    mass_drift: float = 0.0

    def as_row(self) -> Dict[str, Any]:
        """Строка CSV в порядке CSV_FIELDS."""
        s = self.stress_mean
        values = {
            "step": self.step,
            "t": self.t,
            "total_mass": self.total_mass,
            "monomer_total": self.monomer_total,
            "polymer_mass": self.polymer_mass,
            "polymer_count": self.polymer_count,
            "stress_xx": s[0, 0],
            "stress_yy": s[1, 1],
            "stress_zz": s[2, 2],
            "stress_xy": s[0, 1],
            "stress_xz": s[0, 2],
            "stress_yz": s[1, 2],
            "stress_min_eig": self.stress_min_eig,
            "envelope_margin": self.envelope_margin,
            "psi_energy": self.psi_energy,
            "phi_energy": self.phi_energy,
            "mass_drift": self.mass_drift,
        }
        return {key: values[key] for key in CSV_FIELDS}


class DiagnosticsModule(BaseStepModule):
    """Модуль для вычисления диагностических величин."""

    def _r_weights(self) -> np.ndarray:
        # трапеции по r, пересчитанные независимо от LengthGrid.weights
        r = self.lgrid.nodes
        w = np.empty_like(r)
        w[1:-1] = 0.5 * (r[2:] - r[:-2])
        w[0] = 0.5 * (r[1] - r[0])
        w[-1] = 0.5 * (r[-1] - r[-2])
        return w

    def polymer_moment(self, psi: Any, order: int) -> np.ndarray:
        """∫∫ r^order ψ dr dη в каждом пространственном узле."""
        w_r = self._r_weights() * self.lgrid.nodes ** order
        return np.einsum("r,e,rey->y", w_r, self.sgrid.weights, np.asarray(psi, dtype=float))

    def stress_tensor(self, psi: Any) -> np.ndarray:
        """S(y) = ∫ r² ∫ η⊗η ψ dη dr формы (n_y, 3, 3)."""
        w_r = self._r_weights() * self.lgrid.nodes ** 2
        eta = self.sgrid.nodes
        return np.einsum("r,e,ea,eb,rey->yab", w_r, self.sgrid.weights, eta, eta, np.asarray(psi, dtype=float))

    def envelope_margin(self, psi: Any, c_n: float) -> float:
        """min (Cₙ e^{-αr} - ψ) по всей сетке."""
        envelope = c_n * np.exp(-self.params.alpha * self.lgrid.nodes)
        return float(np.min(envelope[:, None, None] - np.asarray(psi, dtype=float)))

    def compute_diagnostics(
        self,
        psi: Any,
        phi: Any,
        t: float = 0.0,
        step: int = 0,
        c_n: Optional[float] = None,
        psi_energy: float = float("nan"),
        phi_energy: float = float("nan"),
        rho_initial: Optional[float] = None,
    ) -> DiagnosticsRecord:
        """
        Вычислить диагностическую запись состояния.

        Аргументы:
            psi: Поле ψ формы (n_r, n_eta, n_y)
            phi: Поле φ формы (n_y,)
            t: Время
            step: Номер шага
            c_n: Текущая константа огибающей Cₙ; None - запас не вычисляется
            psi_energy: Левая часть оценки энергии для ψ
            phi_energy: Левая часть оценки энергии для φ
            rho_initial: Начальная масса для относительного дрейфа

        Возвращает:
            DiagnosticsRecord
        """
        psi = np.asarray(psi, dtype=float)
        phi = np.asarray(phi, dtype=float)
        volume = self.ygrid.cell_volume

        monomer_total = float(np.sum(phi) * volume)
        polymer_mass = float(np.sum(self.polymer_moment(psi, 1)) * volume)
        polymer_count = float(np.sum(self.polymer_moment(psi, 0)) * volume)
        stress = self.stress_tensor(psi)
        stress_mean = np.mean(stress, axis=0)
        min_eig = float(np.min(np.linalg.eigvalsh(stress)))
        total = monomer_total + polymer_mass

        drift = 0.0
        if rho_initial:
            drift = (total - rho_initial) / rho_initial

        record = DiagnosticsRecord(
            step=step,
            t=t,
            total_mass=total,
            monomer_total=monomer_total,
            polymer_mass=polymer_mass,
            polymer_count=polymer_count,
            stress=stress,
            stress_mean=stress_mean,
            stress_min_eig=min_eig,
            envelope_margin=float("nan") if c_n is None else self.envelope_margin(psi, c_n),
            psi_energy=psi_energy,
            phi_energy=phi_energy,
            mass_drift=drift,
        )
        self.logger.debug(f"Диагностика шага {step}: ρ={total:.12e}, полимеры {polymer_mass:.6e}")
        return record

