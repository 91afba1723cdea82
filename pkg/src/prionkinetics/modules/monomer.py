"""
Модуль неявного шага для концентрации мономеров φ.
"""
from functools import cached_property
from typing import Any, Optional, Union

import numpy as np
import scipy.sparse as sp

from ..exceptions import NegativeSink
from ..flow import VelocityField
from ..solver import SparseSolver
from .base import BaseStepModule

MonomerField = np.ndarray  # (n_y,)

SINK_TOL = 1e-14


class MonomerModule(BaseStepModule):
    """
    Модуль для шага по φ: конечные объемы в кубе с противопотоковой адвекцией,
    двухточечной диффузией D₂ и диагональным стоком τ₀Λ₁[ψ^{n-1}].
    """

    def __init__(self, *args, solver: Optional[SparseSolver] = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.solver = solver or SparseSolver()

    @cached_property
    def _faces(self) -> tuple:
        """Внутренние грани сетки: (left, right, ось, центр грани)."""
        grid = self.ygrid
        n, h = grid.n, grid.h
        i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        i, j, k = i.ravel(), j.ravel(), k.ravel()
        upper = n if grid.domain.periodic else n - 1
        lefts, rights, axes, centers = [], [], [], []
        for axis in range(3):
            idx = (i, j, k)
            mask = idx[axis] < upper
            shifted = [c.copy() for c in idx]
            shifted[axis] = (shifted[axis] + 1) % n
            center = (np.stack([i, j, k], axis=-1) + 0.5) * h
            center[:, axis] = (idx[axis] + 1) * h
            lefts.append(((i * n + j) * n + k)[mask])
            rights.append(((shifted[0] * n + shifted[1]) * n + shifted[2])[mask])
            axes.append(np.full(int(mask.sum()), axis))
            centers.append(center[mask])
        return np.concatenate(lefts), np.concatenate(rights), np.concatenate(axes), np.concatenate(centers)

    @cached_property
    def diffusion_matrix(self) -> sp.csr_matrix:
        """-D₂Δ с двухточечными потоками; граничные грани закрытого куба без потока."""
        left, right, _, _ = self._faces
        coef = self.params.d2 / self.ygrid.h ** 2
        size = self.ygrid.size
        rows = np.concatenate([left, left, right, right])
        cols = np.concatenate([left, right, right, left])
        vals = np.concatenate([np.full(left.size, coef), np.full(left.size, -coef),
                               np.full(left.size, coef), np.full(left.size, -coef)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(size, size))

    def advection_matrix(self, velocity: VelocityField, t: float) -> sp.csr_matrix:
        """
        Противопотоковая адвекция ∇·(uⁿφ) по нормальным скоростям в центрах граней.

        Аргументы:
            velocity: Поле скорости
            t: Момент t_n

        Возвращает:
            Разреженную матрицу размера n_y x n_y
        """
        left, right, axes, centers = self._faces
        h = self.ygrid.h
        normal = velocity.velocity(t, centers)[np.arange(axes.size), axes]
        flux = normal / h
        donor = np.where(flux > 0.0, left, right)
        rows = np.concatenate([left, right])
        cols = np.concatenate([donor, donor])
        vals = np.concatenate([flux, -flux])
        size = self.ygrid.size
        return sp.csr_matrix((vals, (rows, cols)), shape=(size, size))

    def assemble_monomer_operator(
        self,
        velocity: VelocityField,
        t: float,
        sink: Any,
        dt: float,
    ) -> Union[sp.csr_matrix, np.ndarray]:
        """
        Собрать оператор шага по φ.

        Аргументы:
            velocity: Поле скорости
            t: Момент t_n, в который берется uⁿ
            sink: Сток τ₀Λ₁[ψ^{n-1}] в узлах формы (n_y,)
            dt: Шаг по времени

        Возвращает:
            Разреженную матрицу; в однородном режиме - диагональ 1/Δt + s

        Вызывает:
            NegativeSink: Если сток отрицателен
            ValueError: Если dt <= 0
        """
        sink = np.asarray(sink, dtype=float).reshape(self.ygrid.size)
        self._debug_log_method_call("assemble_monomer_operator", t=t, sink=sink, dt=dt)
        if not dt > 0.0:
            raise ValueError(f"Шаг по времени должен быть > 0, получено {dt}")
        if np.any(sink < -SINK_TOL):
            raise NegativeSink(
                f"Отрицательный сток мономеров: min = {sink.min():.3e}",
                "negative_sink",
                {"min": float(sink.min())},
            )
        sink = np.maximum(sink, 0.0)

        if self.ygrid.homogeneous:
            return 1.0 / dt + sink

        return (
            sp.identity(self.ygrid.size, format="csr") / dt
            + self.advection_matrix(velocity, t)
            + self.diffusion_matrix
            + sp.diags(sink)
        ).tocsr()

    def solve_monomer_step(self, op: Union[sp.csr_matrix, np.ndarray], rhs: Any, tol: Optional[float] = None) -> MonomerField:
        """
        Решить систему шага по φ.

        Аргументы:
            op: Оператор из assemble_monomer_operator
            rhs: Правая часть φ^{n-1}/Δt
            tol: Относительный допуск; None - допуск решателя

        Возвращает:
            φⁿ формы (n_y,)

        Вызывает:
            SolverDiverged: Если решатель не сошелся
        """
        rhs = np.asarray(rhs, dtype=float).reshape(self.ygrid.size)
        if isinstance(op, np.ndarray):
            # однородный режим: φⁿ = φ^{n-1} / (1 + Δt·s)
            return rhs / op
        phi, report = self.solver.solve(op, rhs, tol=tol)
        self.logger.debug(f"Шаг по φ: итераций {report.iterations}, невязка {report.residual:.3e}")
        return phi

    def gradient_energy(self, phi: Any) -> float:
        """Дискретная норма ‖∇φ‖² по граням сетки."""
        if self.ygrid.homogeneous:
            return 0.0
        phi = np.asarray(phi, dtype=float)
        left, right, _, _ = self._faces
        jumps = (phi[right] - phi[left]) / self.ygrid.h
        return float(np.sum(jumps * jumps) * self.ygrid.cell_volume)
