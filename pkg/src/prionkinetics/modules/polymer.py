"""
Модуль неявного шага для плотности полимеров ψ.

Для каждого пространственного узла y собирается разреженная система по
внутренним узлам r и всем узлам η (индекс j*n_eta + e):

    (1/Δt) I + A(r)(-D₁ L + Div_drift) + τ₀φ(y) D⁻_r + g r + ε R,

где L и Div_drift - конечно-объемные операторы на сфере, D⁻_r - разность
против потока с ψ(0) = 0, R - регуляризация -e^{-αr}∂_r(e^{αr}∂_r ψ).
Перенос по y учитывается только через характеристики в правой части.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, List, Optional

import numpy as np
import scipy.sparse as sp

from ..exceptions import NegativeMonomerInput, TimestepTooLarge
from ..flow import FlowMap, pullback
from ..solver import SparseSolver
from .base import BaseStepModule
from .fragmentation import FragmentationModule

PolymerField = np.ndarray  # (n_r, n_eta, n_y)

COERCIVITY_SAMPLES = 32
NEGATIVE_TOL = 1e-12


@dataclass
class StepOperator:
    """Оператор неявного шага: по одной матрице на пространственный узел."""

    matrices: List[sp.csr_matrix]
    dt: float
    eps: float
    step: int
    n_interior: int
    n_eta: int
    weights: np.ndarray = field(repr=False)

    @property
    def block_size(self) -> int:
        return self.n_interior * self.n_eta

    def apply(self, psi: Any) -> np.ndarray:
        """Прямое применение оператора к полю на внутренних узлах r (форма (n_int, n_eta, n_y))."""
        psi = np.asarray(psi, dtype=float)
        out = np.empty_like(psi)
        for y, matrix in enumerate(self.matrices):
            out[:, :, y] = (matrix @ psi[:, :, y].ravel()).reshape(self.n_interior, self.n_eta)
        return out

    def rayleigh_quotient(self, vector: np.ndarray, node: int = 0) -> float:
        """Отношение Рэлея (x, Ax)_W / (x, x)_W во взвешенном скалярном произведении."""
        w = self.weights
        return float(vector @ (w * (self.matrices[node] @ vector)) / (vector @ (w * vector)))


class PolymerModule(BaseStepModule):
    """Модуль для шага по ψ."""

    def __init__(self, *args, solver: Optional[SparseSolver] = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.solver = solver or SparseSolver()
        self.fragmentation = FragmentationModule(self.params, self.lgrid, self.sgrid, self.ygrid)

    @cached_property
    def _r_blocks(self) -> tuple:
        """Блоки по r на внутренних узлах: D⁻_r, R и диагональ r."""
        n = self.lgrid.n_interior
        dr = self.lgrid.dr
        upwind = sp.diags([np.full(n, 1.0 / dr), np.full(n - 1, -1.0 / dr)], [0, -1], format="csr")
        plus = np.exp(0.5 * self.params.alpha * dr)
        minus = np.exp(-0.5 * self.params.alpha * dr)
        regularization = sp.diags(
            [np.full(n, (plus + minus) / dr ** 2), np.full(n - 1, -plus / dr ** 2), np.full(n - 1, -minus / dr ** 2)],
            [0, 1, -1],
            format="csr",
        )
        r = self.lgrid.nodes[self.lgrid.interior]
        return upwind, regularization, r

    @cached_property
    def _weights(self) -> np.ndarray:
        r_weight = self.lgrid.a[self.lgrid.interior] * self.lgrid.dr
        return np.kron(r_weight, self.sgrid.cell_areas)

    def default_eps(self) -> float:
        return self.lgrid.dr ** 2

    def assemble_polymer_operator(
        self,
        grad_u: Any,
        phi_prev: Any,
        g_field: Any,
        dt: float,
        eps: Optional[float] = None,
        k2: Optional[float] = None,
        k3: Optional[float] = None,
        step: int = 0,
    ) -> StepOperator:
        """
        Собрать оператор шага по ψ.

        Аргументы:
            grad_u: Градиенты скорости uⁿ в узлах формы (n_y, 3, 3)
            phi_prev: Концентрация мономеров φ^{n-1} формы (n_y,)
            g_field: Интенсивность разрыва формы (n_eta, n_y)
            dt: Шаг по времени
            eps: Коэффициент регуляризации; None - Δr²
            k2: Константа k₂ из журнала устойчивости
            k3: Константа k₃ из журнала устойчивости
            step: Номер шага

        Возвращает:
            StepOperator

        Вызывает:
            TimestepTooLarge: Если k₂Δt >= 1 или k₃Δt >= 1
            NegativeMonomerInput: Если φ^{n-1} < 0
        """
        phi_prev = np.asarray(phi_prev, dtype=float)
        grad_u = np.asarray(grad_u, dtype=float).reshape(self.ygrid.size, 3, 3)
        g_field = np.broadcast_to(np.asarray(g_field, dtype=float), (self.sgrid.size, self.ygrid.size))
        eps = self.default_eps() if eps is None else float(eps)
        self._debug_log_method_call("assemble_polymer_operator", phi_prev=phi_prev, dt=dt, eps=eps, k2=k2, k3=k3, step=step)

        for name, k in (("k2", k2), ("k3", k3)):
            if k is not None and k * dt >= 1.0:
                raise TimestepTooLarge(
                    f"Условие устойчивости нарушено: {name}·Δt = {k * dt:.3f} >= 1",
                    "timestep_too_large",
                    {name: k, "dt": dt},
                )
        if np.any(phi_prev < -NEGATIVE_TOL):
            raise NegativeMonomerInput(
                f"Отрицательная концентрация мономеров на входе шага: min φ = {phi_prev.min():.3e}",
                "negative_monomer",
                {"min": float(phi_prev.min())},
            )

        upwind, regularization, r = self._r_blocks
        n_int, n_eta = self.lgrid.n_interior, self.sgrid.size
        a_diag = sp.diags(self.params.a_weight(r))
        identity_r = sp.identity(n_int, format="csr")
        identity_eta = sp.identity(n_eta, format="csr")
        base = (
            sp.identity(n_int * n_eta, format="csr") / dt
            + sp.kron(a_diag, -self.params.d1 * self.sgrid.fv_laplacian)
            + eps * sp.kron(regularization, identity_eta)
        )

        matrices = []
        cache = {}
        for y in range(self.ygrid.size):
            key = grad_u[y].tobytes()
            if key not in cache:
                cache[key] = sp.kron(a_diag, self.sgrid.fv_drift(grad_u[y]))
            drift = cache[key]
            transport = self.params.tau0 * max(float(phi_prev[y]), 0.0)
            reaction = sp.diags(np.outer(r, g_field[:, y]).ravel())
            matrix = base + drift + transport * sp.kron(upwind, identity_eta) + reaction
            matrices.append(matrix.tocsr())

        self.logger.debug(
            f"Собран оператор шага {step}: {len(matrices)} блоков размера {n_int * n_eta}, ε={eps:.3e}"
        )
        return StepOperator(matrices, dt, eps, step, n_int, n_eta, self._weights)

    def polymer_rhs(self, psi_prev: Any, flow_map: FlowMap, g_field: Any, dt: float) -> np.ndarray:
        """
        Правая часть шага: ψ^{n-1}∘z_n / Δt + 2g Λ₂[ψ^{n-1}].

        Аргументы:
            psi_prev: Поле ψ^{n-1} формы (n_r, n_eta, n_y)
            flow_map: Отображение характеристик шага
            g_field: Интенсивность разрыва формы (n_eta, n_y)
            dt: Шаг по времени

        Возвращает:
            Правая часть на полной сетке (n_r, n_eta, n_y)
        """
        psi_prev = np.asarray(psi_prev, dtype=float)
        self._debug_log_method_call("polymer_rhs", psi_prev=psi_prev, dt=dt, step=flow_map.step)
        pulled = pullback(psi_prev, flow_map, self.ygrid)
        return pulled / dt + self.fragmentation.gain(psi_prev, g_field)

    def solve_polymer_step(self, op: StepOperator, rhs: Any, tol: Optional[float] = None) -> PolymerField:
        """
        Решить систему шага для каждого пространственного узла.

        Аргументы:
            op: Оператор шага
            rhs: Правая часть на полной сетке (n_r, n_eta, n_y)
            tol: Относительный допуск; None - допуск решателя

        Возвращает:
            ψⁿ с нулями в r = 0 и r = r_max

        Вызывает:
            SolverDiverged: Если решатель не сошелся
        """
        rhs = np.asarray(rhs, dtype=float)
        interior = self.lgrid.interior
        solutions = self.solver.solve_many(
            ((matrix, rhs[interior, :, y].ravel()) for y, matrix in enumerate(op.matrices)),
            tol=tol,
        )

        psi = np.zeros(rhs.shape)
        for y, x in enumerate(solutions):
            psi[interior, :, y] = x.reshape(op.n_interior, op.n_eta)

        negative = float(np.linalg.norm(np.minimum(psi, 0.0)))
        if negative > 0.0:
            self.logger.warning(
                f"Шаг {op.step}: отрицательная часть ψ ‖[ψ]₋‖ = {negative:.3e} "
                f"(‖ψ‖ = {np.linalg.norm(psi):.3e}), значения не обрезаются"
            )
        return psi

    def coercivity_witness(self, op: StepOperator, seed: int = 0, samples: int = COERCIVITY_SAMPLES) -> float:
        """
        Наименьшее отношение Рэлея по случайным полям во взвешенной норме.

        Аргументы:
            op: Оператор шага
            seed: Зерно генератора
            samples: Количество случайных полей на узел

        Возвращает:
            Минимальное отношение Рэлея
        """
        rng = np.random.default_rng(seed)
        worst = np.inf
        for node in range(len(op.matrices)):
            for _ in range(samples):
                vector = rng.standard_normal(op.block_size)
                worst = min(worst, op.rayleigh_quotient(vector, node))
        return float(worst)
