"""
Сетка по длине полимера r ∈ [0, r_max] с экспоненциальным весом a(r) = e^{αr}.
"""
import logging
from typing import Any, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import ConfigurationError, TruncationTail
from .sphere import SphereGrid, surface_gradient

logger = logging.getLogger(__name__)

# Минимальное значение α·r_max: хвост e^{-αr} ниже 1e-10
MIN_ALPHA_RMAX = 23.0
TAIL_TOL = 1e-10
NORM_KINDS = ("L2alpha", "V", "V1")


class LengthGrid:
    """
    Равномерная сетка r_j = jΔr на [0, r_max] с трапециевидной квадратурой.

    Поле ψ обращается в ноль в r = 0 (вход) и в r = r_max (усечение),
    неизвестными шага являются внутренние узлы 1..n_r-2.
    """

    def __init__(self, n_r: int, r_max: float, alpha: float):
        """
        Инициализация сетки.

        Аргументы:
            n_r: Количество узлов, включая концы
            r_max: Длина усечения
            alpha: Показатель веса a(r) = e^{αr}

        Вызывает:
            ConfigurationError: Если α·r_max < 23 или узлов слишком мало
        """
        if n_r < 4:
            raise ConfigurationError(f"n_r должно быть >= 4, получено {n_r}", "grid_too_small")
        if alpha * r_max < MIN_ALPHA_RMAX:
            raise ConfigurationError(
                f"Требуется α·r_max >= {MIN_ALPHA_RMAX}, получено {alpha * r_max:.3f}",
                "truncation_too_short",
                {"alpha": alpha, "r_max": r_max},
            )
        self.n_r = int(n_r)
        self.r_max = float(r_max)
        self.alpha = float(alpha)
        self.nodes = np.linspace(0.0, self.r_max, self.n_r)
        self.dr = self.r_max / (self.n_r - 1)
        self.weights = np.full(self.n_r, self.dr)
        self.weights[[0, -1]] = 0.5 * self.dr
        self.a = np.exp(self.alpha * self.nodes)

        exact = (1.0 - np.exp(-2.0 * self.alpha * self.r_max)) / (2.0 * self.alpha)
        approx = float(self.weights @ np.exp(-2.0 * self.alpha * self.nodes))
        self.quadrature_defect = abs(approx - exact)
        if self.quadrature_defect > 1e-6:
            logger.warning(
                f"Дефект квадратуры e^(-2αr) на сетке n_r={self.n_r}: {self.quadrature_defect:.3e} > 1e-6"
            )

    @property
    def interior(self) -> slice:
        return slice(1, self.n_r - 1)

    @property
    def n_interior(self) -> int:
        return self.n_r - 2

    def integrate(self, values: Any, axis: int = 0) -> np.ndarray:
        """Трапециевидная квадратура ∫ f dr вдоль оси."""
        values = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
        return values @ self.weights

    def __repr__(self) -> str:
        return f"LengthGrid(n_r={self.n_r}, r_max={self.r_max}, alpha={self.alpha})"


def _check_tail(psi: np.ndarray) -> None:
    scale = float(np.max(np.abs(psi))) if psi.size else 0.0
    edge = float(np.max(np.abs(psi[-1]))) if psi.size else 0.0
    if edge > TAIL_TOL * scale:
        raise TruncationTail(
            f"|ψ(r_max)| = {edge:.3e} превышает {TAIL_TOL:.0e}·max|ψ| = {TAIL_TOL * scale:.3e}",
            "truncation_tail",
            {"edge": edge, "scale": scale},
        )


def tail_integral(psi: Any, grid: LengthGrid, index: Optional[int] = None) -> np.ndarray:
    """
    Хвостовой интеграл Λ₂[ψ](r) = ∫_r^{r_max} ψ dr' (ось 0 - длина).

    Аргументы:
        psi: Поле формы (n_r, ...)
        grid: Сетка по длине
        index: Номер узла r; если None, возвращаются значения во всех узлах

    Возвращает:
        Массив формы (n_r, ...) или (...) при заданном index

    Вызывает:
        TruncationTail: Если поле не затухает к r_max
    """
    psi = np.asarray(psi, dtype=float)
    _check_tail(psi)
    reversed_cumulative = cumulative_trapezoid(psi[::-1], dx=grid.dr, axis=0, initial=0.0)
    tail = reversed_cumulative[::-1]
    if index is None:
        return tail
    return tail[index]


def total_integral(psi: Any, lgrid: LengthGrid, sgrid: SphereGrid) -> np.ndarray:
    """
    Полный интеграл Λ₁[ψ](y) = ∫_{S²×ℝ₊} ψ dr dη.

    Аргументы:
        psi: Поле формы (n_r, n_eta, ...)
        lgrid: Сетка по длине
        sgrid: Сетка на сфере

    Возвращает:
        Массив формы (...) - по значению на каждый пространственный узел
    """
    psi = np.asarray(psi, dtype=float)
    return np.tensordot(sgrid.weights, np.tensordot(lgrid.weights, psi, axes=(0, 0)), axes=(0, 0))


def upwind_dr(psi: Any, grid: LengthGrid) -> np.ndarray:
    """
    Противопотоковая производная ∂_r ψ для переноса вправо.

    В r = 0 производная полагается нулевой, а значение ψ(0) = 0 используется
    как входное граничное значение для первого внутреннего узла.
    """
    psi = np.asarray(psi, dtype=float)
    shifted = np.empty_like(psi)
    shifted[1:] = psi[:-1]
    shifted[1] = 0.0
    out = (psi - shifted) / grid.dr
    out[0] = 0.0
    return out


def weighted_norm_sq(
    f: Any,
    which: str,
    lgrid: LengthGrid,
    sgrid: SphereGrid,
    cell_volume: float = 1.0,
    a_weight: Any = None,
) -> float:
    """
    Квадрат взвешенной нормы поля на (r, η, y).

    Аргументы:
        f: Поле формы (n_r, n_eta, n_y)
        which: "L2alpha", "V" или "V1"
        lgrid: Сетка по длине
        sgrid: Сетка на сфере
        cell_volume: Объем пространственной ячейки
        a_weight: Весовая функция A(r); по умолчанию A ≡ 1

    Возвращает:
        Неотрицательное число
    """
    if which not in NORM_KINDS:
        raise ValueError(f"Неизвестная норма '{which}', ожидалось одно из {NORM_KINDS}")
    f = np.asarray(f, dtype=float)
    if f.ndim == 2:
        f = f[:, :, None]

    r = lgrid.nodes[:, None, None]
    density = f * f
    if which in ("V", "V1"):
        a_vals = np.ones_like(lgrid.nodes) if a_weight is None else a_weight(lgrid.nodes)
        grad = surface_gradient(f.transpose(1, 0, 2), sgrid).transpose(1, 0, 2, 3)
        density = (1.0 + r) * density + a_vals[:, None, None] * np.sum(grad * grad, axis=-1)
    if which == "V1":
        dr = np.gradient(f, lgrid.dr, axis=0)
        density = density + dr * dr

    weighted = np.einsum("r,e,rey->", lgrid.weights * lgrid.a, sgrid.weights, density)
    return float(weighted * cell_volume)
