"""
Заданные поля скорости, пространственная сетка и отображения характеристик.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .exceptions import (
    ConfigurationError,
    OdeToleranceExceeded,
    PointLeftDomain,
    UnsupportedDomainPairing,
)
from .registry import ClosureRegistry

logger = logging.getLogger(__name__)

DOMAIN_KINDS = ("periodic_cube", "closed_cube", "ball", "free", "homogeneous")
ROUNDTRIP_TOL = 1e-8
JACOBIAN_TOL = 1e-6
# Шаг RK4 ограничен: |u|·h <= ячейка/4 и |∇u|·h <= 0.01
GRADIENT_STEP = 0.01


@dataclass(frozen=True)
class Domain:
    """Пространственная область Ω."""

    kind: str
    length: float = 1.0

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ConfigurationError(f"Неизвестная область: {self.kind}", "unknown_domain")
        if not self.length > 0.0:
            raise ConfigurationError(f"Размер области должен быть > 0, получено {self.length}", "non_positive")

    @property
    def periodic(self) -> bool:
        return self.kind == "periodic_cube"

    @property
    def volume(self) -> float:
        if self.kind == "homogeneous":
            return 1.0
        if self.kind == "ball":
            return 4.0 / 3.0 * math.pi * self.length ** 3
        return self.length ** 3

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Приведение точек в основную ячейку для периодической области."""
        if self.periodic:
            return np.mod(points, self.length)
        return points

    def minimal_image(self, delta: np.ndarray) -> np.ndarray:
        """Кратчайший представитель разности точек."""
        if self.periodic:
            return delta - self.length * np.round(delta / self.length)
        return delta

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Маска точек, лежащих в области (с допуском tol)."""
        points = np.asarray(points, dtype=float)
        if self.kind in ("periodic_cube", "free", "homogeneous"):
            return np.ones(points.shape[:-1], dtype=bool)
        if self.kind == "ball":
            return np.linalg.norm(points, axis=-1) <= self.length + tol
        return np.all((points >= -tol) & (points <= self.length + tol), axis=-1)


class SpatialGrid:
    """
    Ячеечно-центрированная сетка в кубе [0, L]³ или один узел в однородном режиме.

    Узлы упорядочены как (i*n + j)*n + k для центров (x_i, y_j, z_k).
    """

    def __init__(self, domain: Domain, n: int = 1):
        """
        Инициализация сетки.

        Аргументы:
            domain: Область (куб или однородный режим)
            n: Количество ячеек по каждой оси
        """
        self.domain = domain
        if domain.kind == "homogeneous":
            self.n = 1
            self.h = 1.0
            self.nodes = np.zeros((1, 3))
            self.cell_volume = 1.0
            return
        if domain.kind not in ("periodic_cube", "closed_cube"):
            raise ConfigurationError(
                f"Пространственная сетка строится только в кубе, получено '{domain.kind}'",
                "unsupported_grid",
            )
        if n < 2:
            raise ConfigurationError(f"Число ячеек n должно быть >= 2, получено {n}", "grid_too_small")
        self.n = int(n)
        self.h = domain.length / self.n
        centers = (np.arange(self.n) + 0.5) * self.h
        x, y, z = np.meshgrid(centers, centers, centers, indexing="ij")
        self.nodes = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=-1)
        self.cell_volume = self.h ** 3

    @property
    def homogeneous(self) -> bool:
        return self.domain.kind == "homogeneous"

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def index(self, i: int, j: int, k: int) -> int:
        n = self.n
        return ((i % n) * n + (j % n)) * n + (k % n)


@dataclass(frozen=True)
class VelocityField:
    """
    Заданное поле скорости u(t, y) с градиентом (∇_y u)_{ab} = ∂u_a/∂y_b.
    """

    kind: str
    params: Dict[str, Any]
    domain: Domain
    velocity_func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    gradient_func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    ramp_time: Optional[float] = None

    def ramp(self, t: float) -> float:
        """Множитель запуска s(t) = 1 - e^{-t/t_ramp}."""
        if not self.ramp_time:
            return 1.0
        return 1.0 - math.exp(-t / self.ramp_time)

    def velocity(self, t: float, y: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.domain.kind == "homogeneous":
            return np.zeros_like(y)
        return self.ramp(t) * self.velocity_func(y)

    def gradient(self, t: float, y: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.domain.kind == "homogeneous":
            # в однородном режиме используется градиент в начале координат
            y = np.zeros_like(y)
        return self.ramp(t) * self.gradient_func(y)

    def divergence(self, t: float, y: Any) -> np.ndarray:
        return np.trace(self.gradient(t, y), axis1=-2, axis2=-1)


@ClosureRegistry.closure("velocity", "zero")
def _zero_field(**_: Any) -> Tuple[Callable, Callable, Tuple[str, ...]]:
    return (
        lambda y: np.zeros_like(y),
        lambda y: np.zeros(y.shape[:-1] + (3, 3)),
        DOMAIN_KINDS,
    )


@ClosureRegistry.closure("velocity", "rigid_rotation")
def _rigid_rotation(omega: Any = (0.0, 0.0, 1.0), **_: Any):
    w = np.asarray(omega, dtype=float)
    cross = np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    return (
        lambda y: np.einsum("ab,...b->...a", cross, y),
        lambda y: np.broadcast_to(cross, y.shape[:-1] + (3, 3)).copy(),
        ("ball", "free", "homogeneous"),
    )


@ClosureRegistry.closure("velocity", "periodic_shear")
def _periodic_shear(shear_rate: float = 1.0, wavenumber: float = 2.0 * math.pi, **_: Any):
    rate, k = float(shear_rate), float(wavenumber)

    def velocity(y):
        zero = np.zeros(y.shape[:-1])
        return np.stack([rate * np.sin(k * y[..., 1]) / k, zero, zero], axis=-1)

    def gradient(y):
        grad = np.zeros(y.shape[:-1] + (3, 3))
        grad[..., 0, 1] = rate * np.cos(k * y[..., 1])
        return grad

    return velocity, gradient, ("periodic_cube", "homogeneous")


@ClosureRegistry.closure("velocity", "taylor_green")
def _taylor_green(amplitude: float = 1.0, length: float = 1.0, **_: Any):
    a, k = float(amplitude), 2.0 * math.pi / float(length)

    def velocity(y):
        sx, cx = np.sin(k * y[..., 0]), np.cos(k * y[..., 0])
        sy, cy = np.sin(k * y[..., 1]), np.cos(k * y[..., 1])
        return np.stack([a * sx * cy, -a * cx * sy, np.zeros_like(sx)], axis=-1)

    def gradient(y):
        sx, cx = np.sin(k * y[..., 0]), np.cos(k * y[..., 0])
        sy, cy = np.sin(k * y[..., 1]), np.cos(k * y[..., 1])
        grad = np.zeros(y.shape[:-1] + (3, 3))
        grad[..., 0, 0] = a * k * cx * cy
        grad[..., 0, 1] = -a * k * sx * sy
        grad[..., 1, 0] = a * k * sx * sy
        grad[..., 1, 1] = -a * k * cx * cy
        return grad

    return velocity, gradient, ("periodic_cube", "closed_cube", "homogeneous")


@ClosureRegistry.closure("velocity", "linear")
def _linear_field(gradient: Any = ((0.0, 1.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)), **_: Any):
    g = np.asarray(gradient, dtype=float)
    if g.shape != (3, 3):
        raise ConfigurationError(f"Градиент линейного поля должен быть 3x3, получено {g.shape}", "bad_shape")
    if abs(np.trace(g)) > 1e-12:
        raise ConfigurationError(f"След градиента линейного поля должен быть 0, получено {np.trace(g):.3e}", "not_solenoidal")
    return (
        lambda y: np.einsum("ab,...b->...a", g, y),
        lambda y: np.broadcast_to(g, y.shape[:-1] + (3, 3)).copy(),
        ("homogeneous",),
    )


def builtin_field(kind: str, domain: Domain, ramp_time: Optional[float] = None, **params: Any) -> VelocityField:
    """
    Встроенное поле скорости.

    Аргументы:
        kind: "zero", "rigid_rotation", "periodic_shear", "taylor_green" или "linear"
        domain: Область, в которой используется поле
        ramp_time: Время разгона s(t) = 1 - e^{-t/t_ramp}; None - без разгона
        **params: Параметры поля (omega, shear_rate, wavenumber, amplitude, gradient)

    Возвращает:
        Экземпляр VelocityField

    Вызывает:
        UnsupportedDomainPairing: Если поле не удовлетворяет условиям в данной области
        ConfigurationError: Если вид поля неизвестен или параметры не конечны
    """
    if not ClosureRegistry.exists("velocity", kind):
        raise ConfigurationError(f"Неизвестное поле скорости: {kind}", "unknown_closure")
    for name, value in params.items():
        if not np.all(np.isfinite(np.asarray(value, dtype=float))):
            raise ConfigurationError(f"Параметр поля '{name}' не конечен", "not_finite")
    if ramp_time is not None and not ramp_time > 0.0:
        raise ConfigurationError(f"ramp_time должно быть > 0, получено {ramp_time}", "non_positive")

    if kind == "taylor_green" and "length" not in params:
        params = dict(params, length=domain.length)
    velocity, gradient, allowed = ClosureRegistry.create("velocity", kind, **params)
    if domain.kind not in allowed:
        raise UnsupportedDomainPairing(
            f"Поле '{kind}' несовместимо с областью '{domain.kind}' (допустимо: {', '.join(allowed)})",
            "unsupported_domain_pairing",
            {"kind": kind, "domain": domain.kind},
        )
    if kind == "periodic_shear" and domain.periodic:
        k = float(params.get("wavenumber", 2.0 * math.pi))
        if abs(math.remainder(k * domain.length, 2.0 * math.pi)) > 1e-9:
            raise UnsupportedDomainPairing(
                f"Волновое число {k} несовместимо с периодом {domain.length}",
                "unsupported_domain_pairing",
            )

    logger.debug(f"Построено поле скорости '{kind}' в области '{domain.kind}' с параметрами {params}")
    return VelocityField(kind, dict(params), domain, velocity, gradient, ramp_time)


@dataclass(frozen=True)
class FlowMap:
    """
    Отображения характеристик шага n: прямое x_n и обратное z_n в узлах сетки.
    """

    step: int
    forward: np.ndarray
    backward: np.ndarray
    jacobian_defect: float = 0.0
    roundtrip_error: float = 0.0
    substeps: int = 0

    @classmethod
    def identity(cls, nodes: np.ndarray, step: int = 0) -> "FlowMap":
        return cls(step, np.array(nodes, dtype=float), np.array(nodes, dtype=float))


def _rk4(u: VelocityField, t: float, sign: float, y0: np.ndarray, dt: float, n_sub: int) -> Tuple[np.ndarray, np.ndarray]:
    """RK4 для y' = ±uⁿ(y), J' = ±∇uⁿ(y) J с полем, замороженным в момент t."""

    def rhs(y, jac):
        return sign * u.velocity(t, y), sign * np.einsum("...ab,...bc->...ac", u.gradient(t, y), jac)

    h = dt / n_sub
    y = np.array(y0, dtype=float)
    jac = np.broadcast_to(np.eye(3), y.shape[:-1] + (3, 3)).copy()
    for _ in range(n_sub):
        k1y, k1j = rhs(y, jac)
        k2y, k2j = rhs(y + 0.5 * h * k1y, jac + 0.5 * h * k1j)
        k3y, k3j = rhs(y + 0.5 * h * k2y, jac + 0.5 * h * k2j)
        k4y, k4j = rhs(y + h * k3y, jac + h * k3j)
        y = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        jac = jac + h / 6.0 * (k1j + 2.0 * k2j + 2.0 * k3j + k4j)
    return y, jac


def compute_flow_map(
    u: VelocityField,
    t_prev: float,
    t_now: float,
    nodes: Any,
    cell_size: float = 1.0,
    step: int = 0,
) -> FlowMap:
    """
    Характеристики шага: χ' = uⁿ(χ) на [t_prev, t_now] с uⁿ = u(t_now, ·).

    Аргументы:
        u: Поле скорости
        t_prev: Начало шага
        t_now: Конец шага
        nodes: Пространственные узлы формы (n_y, 3)
        cell_size: Размер ячейки, задающий подшаги RK4
        step: Номер шага

    Возвращает:
        FlowMap с прямым и обратным отображениями

    Вызывает:
        ValueError: Если t_now <= t_prev
        OdeToleranceExceeded: Если обратимость или сохранение объема нарушены
    """
    dt = t_now - t_prev
    if not dt > 0.0:
        raise ValueError(f"Шаг по времени должен быть > 0, получено {dt}")
    nodes = np.asarray(nodes, dtype=float)
    domain = u.domain
    if domain.kind == "homogeneous" or u.kind == "zero":
        return FlowMap.identity(nodes, step)

    umax = float(np.max(np.linalg.norm(u.velocity(t_now, nodes), axis=-1), initial=0.0))
    gmax = float(np.max(np.linalg.norm(u.gradient(t_now, nodes), axis=(-2, -1)), initial=0.0))
    n_sub = max(1, math.ceil(umax * dt / (cell_size / 4.0)), math.ceil(gmax * dt / GRADIENT_STEP))

    forward, jac_f = _rk4(u, t_now, 1.0, nodes, dt, n_sub)
    backward, jac_b = _rk4(u, t_now, -1.0, nodes, dt, n_sub)
    returned, _ = _rk4(u, t_now, -1.0, forward, dt, n_sub)

    roundtrip = float(np.max(np.linalg.norm(domain.minimal_image(returned - nodes), axis=-1)))
    defect = float(max(np.max(np.abs(np.linalg.det(jac_f) - 1.0)), np.max(np.abs(np.linalg.det(jac_b) - 1.0))))
    logger.debug(
        f"Характеристики шага {step}: подшагов {n_sub}, ошибка обращения {roundtrip:.3e}, "
        f"дефект якобиана {defect:.3e}"
    )
    if roundtrip > ROUNDTRIP_TOL or defect > JACOBIAN_TOL:
        raise OdeToleranceExceeded(
            f"Характеристики шага {step}: ошибка обращения {roundtrip:.3e}, дефект якобиана {defect:.3e}",
            "ode_tolerance",
            {"roundtrip": roundtrip, "jacobian_defect": defect, "substeps": n_sub},
        )

    return FlowMap(step, domain.wrap(forward), domain.wrap(backward), defect, roundtrip, n_sub)


def interpolation_matrix(points: Any, grid: SpatialGrid) -> sp.csr_matrix:
    """
    Разреженная матрица трилинейной интерполяции значений в узлах сетки в точки.

    Аргументы:
        points: Точки формы (m, 3)
        grid: Пространственная сетка

    Возвращает:
        Матрицу (m, n_y) со строками из неотрицательных весов с суммой 1

    Вызывает:
        PointLeftDomain: Если точка вне закрытой области
    """
    points = np.asarray(points, dtype=float)
    m = points.shape[0]
    if grid.homogeneous:
        return sp.identity(1, format="csr")

    domain = grid.domain
    inside = domain.contains(points)
    if not np.all(inside):
        bad = points[~inside][0]
        raise PointLeftDomain(f"Точка характеристики {bad} покинула область", "point_left_domain")

    n, h = grid.n, grid.h
    s = domain.wrap(points) / h - 0.5
    if not domain.periodic:
        s = np.clip(s, 0.0, n - 1.0)
    base = np.floor(s).astype(int)
    frac = s - base
    if not domain.periodic:
        # точки на верхней грани берут последний отрезок целиком
        top = base >= n - 1
        base[top] = n - 2
        frac[top] = 1.0

    rows, cols, vals = [], [], []
    for dx in (0, 1):
        wx = frac[:, 0] if dx else 1.0 - frac[:, 0]
        for dy in (0, 1):
            wy = frac[:, 1] if dy else 1.0 - frac[:, 1]
            for dz in (0, 1):
                wz = frac[:, 2] if dz else 1.0 - frac[:, 2]
                i = (base[:, 0] + dx) % n
                j = (base[:, 1] + dy) % n
                k = (base[:, 2] + dz) % n
                rows.append(np.arange(m))
                cols.append((i * n + j) * n + k)
                vals.append(wx * wy * wz)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, grid.size)
    )


def pullback(field: Any, flow_map: FlowMap, grid: SpatialGrid) -> np.ndarray:
    """
    Перенос поля вдоль характеристик: f(z_n(y)) трилинейной интерполяцией.

    Аргументы:
        field: Значения с последней осью по узлам сетки (..., n_y)
        flow_map: Отображение шага (используется backward)
        grid: Пространственная сетка

    Возвращает:
        Массив той же формы; глобальные min/max входа сохраняются
    """
    field = np.asarray(field, dtype=float)
    if grid.homogeneous:
        return field.copy()
    if flow_map.backward.shape != grid.nodes.shape:
        raise ValueError("Отображение и поле заданы на разных сетках")
    matrix = interpolation_matrix(flow_map.backward, grid)
    flat = field.reshape(-1, grid.size)
    return (matrix @ flat.T).T.reshape(field.shape)
