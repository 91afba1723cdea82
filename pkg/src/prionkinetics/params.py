"""
Параметры модели и определяющие замыкания.

Содержит все константы модели (tau0, alpha, D1, D2, rho, T), весовую
функцию длины A(r), интенсивность разрыва g(grad u, u, eta) и ядро
фрагментации kappa(r, r'). Все стандартные предположения проверяются
при загрузке.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator

from ._compat import tomllib
from .exceptions import (
    BoundViolation,
    ConfigurationError,
    KernelNormalizationFailure,
    MissingField,
    NonPositiveCoefficient,
)
from .registry import ClosureRegistry

logger = logging.getLogger(__name__)

# Допуск проверки границ g
G_BOUND_TOL = 1e-12
# Допуск нормировки и симметрии ядра на расчетной сетке
KERNEL_TOL = 1e-12
TABLE_KERNEL_TOL = 1e-8


@dataclass(frozen=True)
class LengthWeight:
    """Весовая функция длины A(r) >= 0 с оценкой C_A = sup A."""

    kind: str
    c_a: float
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)

    def __call__(self, r: Any) -> np.ndarray:
        return np.asarray(self.func(np.asarray(r, dtype=float)), dtype=float)


@dataclass(frozen=True)
class ScissionRate:
    """
    Интенсивность разрыва g(sigma, v, eta) с границами g_lo <= g <= g_hi.

    sigma - градиент скорости (d u_a / d y_b), v - скорость, eta - ориентация.
    """

    kind: str
    g_lo: float
    g_hi: float
    c: float = 0.0
    func: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray] = field(
        repr=False, compare=False, default=None
    )

    def __call__(self, grad_u: Any, u: Any, eta: Any) -> np.ndarray:
        return np.asarray(self.func(np.asarray(grad_u, dtype=float),
                                    np.asarray(u, dtype=float),
                                    np.asarray(eta, dtype=float)), dtype=float)


class FragmentationKernel:
    """
    Ядро распределения осколков kappa(r, r').

    Замкнутая форма "uniform": kappa = 1/r' при 0 <= r <= r', иначе 0.
    Табличная форма "table": значения kappa(r_i, r_k) на равномерных узлах.
    """

    def __init__(
        self,
        kind: str = "uniform",
        r_nodes: Optional[Sequence[float]] = None,
        values: Optional[Sequence[Sequence[float]]] = None,
    ):
        """
        Инициализация ядра.

        Аргументы:
            kind: "uniform" или "table"
            r_nodes: Равномерные узлы таблицы (только для "table")
            values: Матрица kappa(r_i, r_k), строка - r, столбец - r' (только для "table")

        Вызывает:
            KernelNormalizationFailure: Если таблица не нормирована или не симметрична
            ConfigurationError: Если вид ядра неизвестен
        """
        self.kind = kind
        if kind == "uniform":
            self._nodes = None
            self._values = None
            self._interpolator = None
        elif kind == "table":
            if r_nodes is None or values is None:
                raise MissingField("Табличное ядро требует полей 'r_nodes' и 'values'", "missing_field")
            self._nodes = np.asarray(r_nodes, dtype=float)
            self._values = np.asarray(values, dtype=float)
            self._validate_table()
            self._interpolator = RegularGridInterpolator(
                (self._nodes, self._nodes), self._values, bounds_error=False, fill_value=0.0
            )
        else:
            raise ConfigurationError(f"Неизвестный вид ядра фрагментации: {kind}", "unknown_kernel")

    def _validate_table(self) -> None:
        """Проверка носителя, нормировки и симметрии табличного ядра на собственных узлах."""
        nodes, values = self._nodes, self._values
        n = nodes.size
        if values.shape != (n, n):
            raise KernelNormalizationFailure(
                f"Таблица ядра должна иметь форму ({n}, {n}), получено {values.shape}",
                "kernel_shape",
            )
        steps = np.diff(nodes)
        if n < 2 or nodes[0] != 0.0 or not np.allclose(steps, steps[0], rtol=1e-12, atol=0.0):
            raise KernelNormalizationFailure("Узлы табличного ядра должны быть равномерными и начинаться с 0", "kernel_nodes")
        if np.any(values < 0.0):
            raise KernelNormalizationFailure("Табличное ядро содержит отрицательные значения", "kernel_sign")
        lower = np.tril(values, k=-1)
        if np.any(lower != 0.0):
            raise KernelNormalizationFailure("Носитель ядра нарушен: kappa(r, r') != 0 при r > r'", "kernel_support")

        for k in range(1, n):
            column = values[: k + 1, k]
            total = trapezoid(column, nodes[: k + 1])
            if abs(total - 1.0) > TABLE_KERNEL_TOL:
                raise KernelNormalizationFailure(
                    f"Интеграл ядра по r при r'={nodes[k]:.6g} равен {total:.12g}, ожидалось 1",
                    "kernel_normalization",
                    {"r_prime": float(nodes[k]), "integral": float(total)},
                )
            mirrored = column[::-1]
            scale = max(np.max(np.abs(column)), 1.0)
            if np.max(np.abs(mirrored - column)) > TABLE_KERNEL_TOL * scale:
                raise KernelNormalizationFailure(
                    f"Ядро несимметрично при r'={nodes[k]:.6g}",
                    "kernel_symmetry",
                    {"r_prime": float(nodes[k])},
                )

    def density(self, r: Any, r_prime: Any) -> np.ndarray:
        """
        Значение kappa(r, r') (поэлементно, с broadcasting).

        Аргументы:
            r: Длина осколка
            r_prime: Длина исходного полимера

        Возвращает:
            Массив значений ядра
        """
        r = np.asarray(r, dtype=float)
        r_prime = np.asarray(r_prime, dtype=float)
        if self.kind == "uniform":
            support = (r >= 0.0) & (r <= r_prime) & (r_prime > 0.0)
            safe = np.where(r_prime > 0.0, r_prime, 1.0)
            return np.where(support, 1.0 / safe, 0.0)
        r_b, rp_b = np.broadcast_arrays(r, r_prime)
        points = np.stack([r_b.ravel(), rp_b.ravel()], axis=-1)
        out = self._interpolator(points).reshape(r_b.shape)
        return np.where(r_b <= rp_b, out, 0.0)

    def moment_matrix(self, r_nodes: np.ndarray) -> np.ndarray:
        """
        Матрица K[j, k] = r_k * kappa(r_j, r_k) на узлах сетки (0 при r_j > r_k).

        Для замкнутой формы 1/r' множитель r' сокращается, и K = 1 на носителе.

        Аргументы:
            r_nodes: Узлы сетки по длине

        Возвращает:
            Квадратную матрицу размера n_r x n_r
        """
        r_nodes = np.asarray(r_nodes, dtype=float)
        rj = r_nodes[:, None]
        rk = r_nodes[None, :]
        if self.kind == "uniform":
            return np.where(rj <= rk, 1.0, 0.0)
        return rk * self.density(rj, rk)

    def check_on_grid(self, r_nodes: np.ndarray) -> Dict[str, float]:
        """
        Проверка нормировки и симметрии ядра на расчетной сетке.

        Аргументы:
            r_nodes: Равномерные узлы сетки по длине

        Возвращает:
            Словарь с максимальными дефектами нормировки и симметрии

        Вызывает:
            KernelNormalizationFailure: Если дефекты превышают допуск
        """
        r_nodes = np.asarray(r_nodes, dtype=float)
        tol = KERNEL_TOL if self.kind == "uniform" else TABLE_KERNEL_TOL
        norm_defect = 0.0
        sym_defect = 0.0
        for k in range(1, r_nodes.size):
            column = self.density(r_nodes[: k + 1], r_nodes[k])
            norm_defect = max(norm_defect, abs(trapezoid(column, r_nodes[: k + 1]) - 1.0))
            scale = max(float(np.max(np.abs(column))), 1.0)
            sym_defect = max(sym_defect, float(np.max(np.abs(column[::-1] - column))) / scale)
        if norm_defect > tol or sym_defect > tol:
            raise KernelNormalizationFailure(
                f"Ядро на расчетной сетке: дефект нормировки {norm_defect:.3e}, симметрии {sym_defect:.3e}",
                "kernel_grid_check",
                {"normalization": norm_defect, "symmetry": sym_defect},
            )
        return {"normalization": norm_defect, "symmetry": sym_defect}


@dataclass(frozen=True)
class ModelParams:
    """
    Все определяющие константы модели.

    Единицы: tau0 - 1/(концентрация*время), alpha - 1/длина, d1 - 1/время,
    d2 - длина^2/время, rho0 - концентрация мономеров, t_final - время.
    """

    tau0: float
    alpha: float
    d1: float
    d2: float
    a_weight: LengthWeight
    g_rate: ScissionRate
    kernel: FragmentationKernel = field(compare=False)
    rho0: Optional[float] = None
    t_final: float = 1.0

    @property
    def c_a(self) -> float:
        return self.a_weight.c_a

    @property
    def g_lo(self) -> float:
        return self.g_rate.g_lo

    @property
    def g_hi(self) -> float:
        return self.g_rate.g_hi


# Весовые функции длины

@ClosureRegistry.closure("a_weight", "constant")
def _constant_weight(value: float = 1.0) -> LengthWeight:
    value = float(value)
    if value < 0.0:
        raise NonPositiveCoefficient(f"A(r) = {value} < 0", "a_weight")
    return LengthWeight("constant", value, lambda r: np.full_like(r, value, dtype=float))


@ClosureRegistry.closure("a_weight", "rod_mobility")
def _rod_mobility_weight() -> LengthWeight:
    # подвижность стержня убывает с длиной, sup достигается при r = 0
    return LengthWeight("rod_mobility", 1.0, lambda r: 1.0 / (1.0 + r) ** 3)


@ClosureRegistry.closure("a_weight", "table")
def _table_weight(r: Sequence[float] = (), values: Sequence[float] = ()) -> LengthWeight:
    nodes = np.asarray(r, dtype=float)
    table = np.asarray(values, dtype=float)
    if nodes.size == 0 or nodes.size != table.size:
        raise MissingField("Табличная A(r) требует непустых 'r' и 'values' одинаковой длины", "missing_field")
    if np.any(np.diff(nodes) <= 0.0):
        raise ConfigurationError("Узлы табличной A(r) должны строго возрастать", "a_weight_nodes")
    if np.any(table < 0.0):
        raise NonPositiveCoefficient("Табличная A(r) содержит отрицательные значения", "a_weight")
    return LengthWeight("table", float(np.max(table)), lambda x: np.interp(x, nodes, table))


# Интенсивности разрыва

def _strain_norm(grad_u: np.ndarray) -> np.ndarray:
    sym = grad_u + np.swapaxes(grad_u, -1, -2)
    return np.sqrt(np.sum(sym * sym, axis=(-2, -1)))


def _orientation_strain(grad_u: np.ndarray, eta: np.ndarray) -> np.ndarray:
    sym = grad_u + np.swapaxes(grad_u, -1, -2)
    return np.abs(np.einsum("...a,...ab,...b->...", eta, sym, eta))


@ClosureRegistry.closure("g", "constant")
def _constant_rate(g0: float = 1.0, **_: Any) -> ScissionRate:
    g0 = float(g0)

    def func(grad_u, u, eta):
        shape = np.broadcast_shapes(grad_u.shape[:-2], u.shape[:-1], eta.shape[:-1])
        return np.full(shape, g0)

    return ScissionRate("constant", g0, g0, 0.0, func)


@ClosureRegistry.closure("g", "strain_rate")
def _strain_rate(g_lo: float, g_hi: float, c: float = 1.0, **_: Any) -> ScissionRate:
    """
    g = g̲ + c·‖σ + σᵀ‖_F, σ = ∇_y u; норма Фробениуса.

    Для простого сдвига с γ̇ = 1 получается g̲ + √2·c, а не g̲ + 2c.
    """
    g_lo, c = float(g_lo), float(c)

    def func(grad_u, u, eta):
        value = g_lo + c * _strain_norm(grad_u)
        shape = np.broadcast_shapes(grad_u.shape[:-2], u.shape[:-1], eta.shape[:-1])
        return np.broadcast_to(value, shape).copy()

    return ScissionRate("strain_rate", g_lo, float(g_hi), c, func)


@ClosureRegistry.closure("g", "orientation")
def _orientation_rate(g_lo: float, g_hi: float, c: float = 1.0, **_: Any) -> ScissionRate:
    g_lo, c = float(g_lo), float(c)

    def func(grad_u, u, eta):
        value = g_lo + c * _orientation_strain(grad_u, eta)
        shape = np.broadcast_shapes(grad_u.shape[:-2], u.shape[:-1], eta.shape[:-1])
        return np.broadcast_to(value, shape).copy()

    return ScissionRate("orientation", g_lo, float(g_hi), c, func)


def _require(section: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in section:
        raise MissingField(f"Отсутствует обязательное поле '{where}.{key}'", "missing_field", {"field": f"{where}.{key}"})
    return section[key]


def _number(section: Mapping[str, Any], key: str, where: str) -> float:
    value = _require(section, key, where)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"Поле '{where}.{key}' должно быть числом", "not_a_number")
    return float(value)


def _closure_config(section: Mapping[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in section.items() if k != "kind"}


def params_from_mapping(model: Mapping[str, Any]) -> ModelParams:
    """
    Построение ModelParams из секции [model] разобранной конфигурации.

    Аргументы:
        model: Словарь секции [model]

    Возвращает:
        Проверенный экземпляр ModelParams

    Вызывает:
        MissingField, NonPositiveCoefficient, KernelNormalizationFailure, ConfigurationError
    """
    tau0 = _number(model, "tau0", "model")
    alpha = _number(model, "alpha", "model")
    d1 = _number(model, "d1", "model")
    d2 = _number(model, "d2", "model")
    t_final = _number(model, "t_final", "model")

    for name, value in (("alpha", alpha), ("d1", d1), ("d2", d2), ("t_final", t_final)):
        if not value > 0.0:
            raise NonPositiveCoefficient(f"Коэффициент '{name}' должен быть > 0, получено {value}", "non_positive", {"field": name})
    if tau0 < 0.0:
        raise NonPositiveCoefficient(f"Коэффициент 'tau0' должен быть >= 0, получено {tau0}", "non_positive", {"field": "tau0"})

    g_section = dict(_require(model, "g", "model"))
    g_kind = str(g_section.get("kind", "constant"))
    if not ClosureRegistry.exists("g", g_kind):
        raise ConfigurationError(f"Неизвестное замыкание g: {g_kind}", "unknown_closure")
    try:
        g_rate = ClosureRegistry.create("g", g_kind, **_closure_config(g_section))
    except TypeError as e:
        raise MissingField(f"Неполная секция [model.g]: {e}", "missing_field") from e
    if not g_rate.g_lo > 0.0:
        raise NonPositiveCoefficient(f"Нижняя граница g должна быть > 0, получено {g_rate.g_lo}", "non_positive", {"field": "g_lo"})
    if g_rate.g_hi < g_rate.g_lo:
        raise ConfigurationError(f"Границы g нарушены: g_hi={g_rate.g_hi} < g_lo={g_rate.g_lo}", "g_bounds")
    if g_rate.c < 0.0:
        raise NonPositiveCoefficient(f"Коэффициент замыкания g 'c' должен быть >= 0, получено {g_rate.c}", "non_positive")

    a_section = dict(model.get("a_weight", {"kind": "constant", "value": 1.0}))
    a_kind = str(a_section.get("kind", "constant"))
    if not ClosureRegistry.exists("a_weight", a_kind):
        raise ConfigurationError(f"Неизвестная весовая функция A: {a_kind}", "unknown_closure")
    a_weight = ClosureRegistry.create("a_weight", a_kind, **_closure_config(a_section))

    k_section = dict(model.get("kernel", {"kind": "uniform"}))
    kernel = FragmentationKernel(
        kind=str(k_section.get("kind", "uniform")),
        r_nodes=k_section.get("r_nodes"),
        values=k_section.get("values"),
    )

    rho0 = model.get("rho0")
    params = ModelParams(
        tau0=tau0,
        alpha=alpha,
        d1=d1,
        d2=d2,
        a_weight=a_weight,
        g_rate=g_rate,
        kernel=kernel,
        rho0=None if rho0 is None else float(rho0),
        t_final=t_final,
    )
    logger.debug(f"Загружены параметры модели: {params}")
    return params


def load_params(config_text: str) -> ModelParams:
    """
    Загрузка параметров модели из текста TOML-конфигурации.

    Аргументы:
        config_text: Текст конфигурации с секцией [model]

    Возвращает:
        Проверенный экземпляр ModelParams

    Вызывает:
        MissingField: Если отсутствует секция или поле
        NonPositiveCoefficient: Если нарушены знаки коэффициентов
        KernelNormalizationFailure: Если табличное ядро не нормировано
    """
    try:
        data = tomllib.loads(config_text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"Не удалось разобрать конфигурацию: {e}", "parse_error") from e
    return params_from_mapping(_require(data, "model", "<root>"))


def evaluate_g(params: ModelParams, grad_u: Any, u: Any, eta: Any) -> np.ndarray:
    """
    Интенсивность разрыва g(grad u, u, eta) с проверкой границ.

    Аргументы:
        params: Параметры модели
        grad_u: Градиент скорости формы (..., 3, 3)
        u: Скорость формы (..., 3)
        eta: Единичные векторы ориентации формы (..., 3)

    Возвращает:
        Массив значений g (скаляр для одиночных входов)

    Вызывает:
        ValueError: Если |eta| != 1
        BoundViolation: Если значение вышло за [g_lo, g_hi]
    """
    eta = np.asarray(eta, dtype=float)
    if np.any(np.abs(np.linalg.norm(eta, axis=-1) - 1.0) > 1e-12):
        raise ValueError("Вектор ориентации eta должен быть единичным")

    value = params.g_rate(grad_u, u, eta)
    lo, hi = params.g_lo, params.g_hi
    slack = G_BOUND_TOL * max(1.0, hi)
    if np.any(value < lo - slack) or np.any(value > hi + slack):
        worst = float(np.max(value)) if np.any(value > hi + slack) else float(np.min(value))
        raise BoundViolation(
            f"g = {worst:.6g} вне границ [{lo:.6g}, {hi:.6g}] для замыкания '{params.g_rate.kind}'",
            "g_bounds",
            {"value": worst, "g_lo": lo, "g_hi": hi},
        )
    return value
