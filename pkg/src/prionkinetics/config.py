"""
Конфигурация расчета: разбор TOML, проверка и хеш происхождения.
"""
import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from cryptography.hazmat.primitives import hashes

from ._compat import tomllib
from .exceptions import ConfigurationError, MissingField, NonPositiveCoefficient
from .length import MIN_ALPHA_RMAX
from .params import ModelParams, params_from_mapping

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "PRIONKINETICS_OUTPUT_DIR"
SPACE_MODES = ("homogeneous", "periodic_cube", "closed_cube")
PROFILES = ("test", "performance")

# Ключ, единицы, описание - печатается командой describe
CONFIG_SCHEMA: Tuple[Tuple[str, str, str], ...] = (
    ("model.tau0", "1/(концентрация·время)", "коэффициент скорости полимеризации τ₀ >= 0"),
    ("model.alpha", "1/длина", "показатель веса a(r) = e^{αr}, α > 0"),
    ("model.d1", "1/время", "коэффициент вращательной диффузии D₁ > 0"),
    ("model.d2", "длина²/время", "коэффициент диффузии мономеров D₂ > 0"),
    ("model.rho0", "концентрация", "ожидаемая полная масса ρ (необязательно)"),
    ("model.t_final", "время", "горизонт T"),
    ("model.g.kind", "-", "constant | strain_rate | orientation"),
    ("model.g.g0", "1/(длина·время)", "постоянная интенсивность разрыва g₀"),
    ("model.g.g_lo, model.g.g_hi", "1/(длина·время)", "границы 0 < g̲ <= g <= ḡ"),
    ("model.g.c", "1/длина", "коэффициент при скорости деформации"),
    ("model.a_weight.kind", "-", "constant (value) | rod_mobility | table (r, values)"),
    ("model.kernel.kind", "-", "uniform | table (r_nodes, values[i][k] = κ(r_i, r_k))"),
    ("grid.length.n_r, grid.length.r_max", "-, длина", "узлы по длине и длина усечения, α·r_max >= 23"),
    ("grid.sphere.n_theta, grid.sphere.n_phi", "-", "узлы на сфере, n_phi четное"),
    ("grid.space.mode", "-", "homogeneous | periodic_cube | closed_cube"),
    ("grid.space.n, grid.space.length", "-, длина", "ячеек по оси и сторона куба"),
    ("flow.kind", "-", "zero | rigid_rotation | periodic_shear | taylor_green | linear"),
    ("flow.params", "1/время, 1/длина", "omega | shear_rate, wavenumber | amplitude | gradient"),
    ("flow.ramp_time", "время", "время разгона s(t) = 1 - e^{-t/t_ramp} (необязательно)"),
    ("initial.psi", "-", "gamma | zero"),
    ("initial.amplitude", "1/(длина²·объем·стерадиан)", "ψ⁰ = amplitude·r·e^{-λr}·p(η)"),
    ("initial.decay", "1/длина", "λ > α/2"),
    ("initial.orientation", "-", "uniform | aligned (anisotropy b, axis n)"),
    ("initial.phi0", "концентрация", "φ⁰ = phi0·(1 + phi_bump·cos(2πy₁/L)), |phi_bump| <= 1"),
    ("time.dt", "время", "шаг Δt"),
    ("time.n_steps", "-", "число шагов (по умолчанию T/Δt)"),
    ("solver.tol", "-", "относительный допуск невязки"),
    ("solver.eps", "длина²", "регуляризация ε или \"auto\" (Δr²)"),
    ("solver.max_iter, solver.restart", "-", "параметры GMRES"),
    ("solver.drop_tol, solver.max_retries", "-", "неполное LU и повторы"),
    ("solver.workers", "-", "потоки для решения по пространственным узлам"),
    ("output.directory", "-", f"каталог результатов (переопределяется {OUTPUT_DIR_ENV})"),
    ("output.cadence", "шаги", "период записи диагностики"),
    ("output.check_cadence", "шаги", "период проверки инвариантов"),
    ("output.snapshot_cadence", "шаги", "период записи снимков (0 - только последний)"),
    ("output.strict", "-", "прерывать расчет при нарушении инварианта"),
    ("output.profile", "-", "test | performance"),
)


@dataclass(frozen=True)
class LengthSection:
    n_r: int
    r_max: float


@dataclass(frozen=True)
class SphereSection:
    n_theta: int
    n_phi: int


@dataclass(frozen=True)
class SpaceSection:
    mode: str = "homogeneous"
    n: int = 1
    length: float = 1.0


@dataclass(frozen=True)
class FlowSection:
    kind: str = "zero"
    params: Dict[str, Any] = field(default_factory=dict)
    ramp_time: Optional[float] = None


@dataclass(frozen=True)
class InitialSection:
    psi_kind: str = "gamma"
    amplitude: float = 1.0
    decay: float = 2.0
    orientation: str = "uniform"
    anisotropy: float = 0.0
    axis: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    phi0: float = 1.0
    phi_bump: float = 0.0


@dataclass(frozen=True)
class TimeSection:
    dt: float
    n_steps: int

    @property
    def horizon(self) -> float:
        return self.dt * self.n_steps


@dataclass(frozen=True)
class SolverSection:
    tol: float = 1e-11
    eps: Optional[float] = None
    max_iter: int = 200
    restart: int = 50
    drop_tol: float = 1e-10
    max_retries: int = 3
    workers: int = 1


@dataclass(frozen=True)
class OutputSection:
    directory: str = "output"
    cadence: int = 1
    check_cadence: int = 1
    snapshot_cadence: int = 0
    strict: bool = True
    profile: str = "test"


@dataclass(frozen=True)
class RunConfig:
    """Полная конфигурация одного расчета."""

    model: ModelParams
    length: LengthSection
    sphere: SphereSection
    space: SpaceSection
    flow: FlowSection
    initial: InitialSection
    time: TimeSection
    solver: SolverSection
    output: OutputSection
    raw: Dict[str, Any] = field(repr=False, compare=False, default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def refined(self, level: int) -> "RunConfig":
        """
        Конфигурация уровня измельчения: Δt/2^l, (n_r - 1)·2^l + 1 узлов, шагов ·2^l.

        Аргументы:
            level: Номер уровня (0 - исходная конфигурация)

        Возвращает:
            Новую RunConfig с обновленным raw для хеша
        """
        factor = 2 ** level
        raw = json.loads(json.dumps(self.raw))
        n_r = (self.length.n_r - 1) * factor + 1
        raw.setdefault("grid", {}).setdefault("length", {})["n_r"] = n_r
        raw.setdefault("time", {})["dt"] = self.time.dt / factor
        raw["time"]["n_steps"] = self.time.n_steps * factor
        return replace(
            self,
            length=replace(self.length, n_r=n_r),
            time=TimeSection(self.time.dt / factor, self.time.n_steps * factor),
            raw=raw,
        )


def config_hash(raw: Mapping[str, Any]) -> str:
    """
    SHA-256 канонического JSON конфигурации.

    Аргументы:
        raw: Разобранная конфигурация

    Возвращает:
        Шестнадцатеричную строку хеша
    """
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str).encode("utf-8")
    digest = hashes.Hash(hashes.SHA256())
    digest.update(canonical)
    return digest.finalize().hex()


def _section(data: Mapping[str, Any], *path: str, required: bool = True) -> Dict[str, Any]:
    node: Any = data
    for key in path:
        if not isinstance(node, Mapping) or key not in node:
            if required:
                raise MissingField(f"Отсутствует секция [{'.'.join(path)}]", "missing_field", {"field": ".".join(path)})
            return {}
        node = node[key]
    return dict(node)


def _get(section: Mapping[str, Any], key: str, where: str, kind: type, default: Any = ...) -> Any:
    if key not in section:
        if default is ...:
            raise MissingField(f"Отсутствует обязательное поле '{where}.{key}'", "missing_field", {"field": f"{where}.{key}"})
        return default
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, float) and value.is_integer():
        value = int(value)
    if not isinstance(value, kind) or (kind in (int, float) and isinstance(value, bool)):
        raise ConfigurationError(f"Поле '{where}.{key}' должно иметь тип {kind.__name__}", "bad_type")
    return value


def _positive(value: float, name: str) -> float:
    if not value > 0:
        raise NonPositiveCoefficient(f"Поле '{name}' должно быть > 0, получено {value}", "non_positive", {"field": name})
    return value


def config_from_mapping(data: Mapping[str, Any]) -> RunConfig:
    """
    Построение RunConfig из разобранного TOML.

    Аргументы:
        data: Словарь конфигурации

    Возвращает:
        Проверенную RunConfig

    Вызывает:
        ConfigurationError и ее подклассы
    """
    model = params_from_mapping(_section(data, "model"))

    length_s = _section(data, "grid", "length")
    length = LengthSection(
        n_r=_get(length_s, "n_r", "grid.length", int),
        r_max=_positive(_get(length_s, "r_max", "grid.length", float), "grid.length.r_max"),
    )
    if model.alpha * length.r_max < MIN_ALPHA_RMAX:
        raise ConfigurationError(
            f"Требуется α·r_max >= {MIN_ALPHA_RMAX}, получено {model.alpha * length.r_max:.3f}",
            "truncation_too_short",
        )

    sphere_s = _section(data, "grid", "sphere")
    sphere = SphereSection(
        n_theta=_get(sphere_s, "n_theta", "grid.sphere", int),
        n_phi=_get(sphere_s, "n_phi", "grid.sphere", int),
    )
    if sphere.n_theta < 2 or sphere.n_phi < 4 or sphere.n_phi % 2:
        raise ConfigurationError(
            f"Недопустимая сетка на сфере {sphere.n_theta}x{sphere.n_phi} (n_theta >= 2, n_phi четное >= 4)",
            "bad_sphere_grid",
        )

    space_s = _section(data, "grid", "space", required=False)
    space = SpaceSection(
        mode=_get(space_s, "mode", "grid.space", str, "homogeneous"),
        n=_get(space_s, "n", "grid.space", int, 1),
        length=_positive(_get(space_s, "length", "grid.space", float, 1.0), "grid.space.length"),
    )
    if space.mode not in SPACE_MODES:
        raise ConfigurationError(f"Неизвестный режим пространства: {space.mode}", "unknown_space_mode")

    flow_s = _section(data, "flow", required=False)
    flow = FlowSection(
        kind=_get(flow_s, "kind", "flow", str, "zero"),
        params=dict(_get(flow_s, "params", "flow", dict, {})),
        ramp_time=_get(flow_s, "ramp_time", "flow", float, None),
    )

    init_s = _section(data, "initial", required=False)
    initial = InitialSection(
        psi_kind=_get(init_s, "psi", "initial", str, "gamma"),
        amplitude=_get(init_s, "amplitude", "initial", float, 1.0),
        decay=_get(init_s, "decay", "initial", float, 2.0),
        orientation=_get(init_s, "orientation", "initial", str, "uniform"),
        anisotropy=_get(init_s, "anisotropy", "initial", float, 0.0),
        axis=tuple(float(v) for v in _get(init_s, "axis", "initial", list, [0.0, 0.0, 1.0])),
        phi0=_get(init_s, "phi0", "initial", float, 1.0),
        phi_bump=_get(init_s, "phi_bump", "initial", float, 0.0),
    )
    if initial.psi_kind not in ("gamma", "zero"):
        raise ConfigurationError(f"Неизвестный вид начального ψ: {initial.psi_kind}", "unknown_initial")
    if initial.orientation not in ("uniform", "aligned"):
        raise ConfigurationError(f"Неизвестная ориентация: {initial.orientation}", "unknown_initial")
    if initial.amplitude < 0.0 or initial.phi0 < 0.0:
        raise NonPositiveCoefficient("Начальные данные должны быть неотрицательны", "non_positive")
    if abs(initial.phi_bump) > 1.0:
        raise ConfigurationError("|phi_bump| должно быть <= 1", "bad_initial")
    if initial.anisotropy < 0.0:
        raise ConfigurationError("Анизотропия b должна быть >= 0", "bad_initial")
    if initial.psi_kind == "gamma" and not initial.decay > model.alpha / 2.0:
        raise ConfigurationError(
            f"Начальное ψ должно убывать быстрее e^(-αr/2): decay={initial.decay}, α={model.alpha}",
            "bad_initial",
        )

    time_s = _section(data, "time")
    dt = _positive(_get(time_s, "dt", "time", float), "time.dt")
    n_steps = _get(time_s, "n_steps", "time", int, None)
    if n_steps is None:
        ratio = model.t_final / dt
        n_steps = int(round(ratio))
        if abs(ratio - n_steps) > 1e-9 * max(1.0, ratio):
            raise ConfigurationError(f"T/Δt = {ratio:.6f} не является целым числом", "bad_time_grid")
    if n_steps < 1:
        raise ConfigurationError(f"Число шагов должно быть >= 1, получено {n_steps}", "bad_time_grid")

    solver_s = _section(data, "solver", required=False)
    eps_raw = solver_s.get("eps", "auto")
    if eps_raw == "auto":
        eps = None
    elif isinstance(eps_raw, (int, float)) and not isinstance(eps_raw, bool) and eps_raw >= 0:
        eps = float(eps_raw)
    else:
        raise ConfigurationError(f"solver.eps должно быть \"auto\" или числом >= 0, получено {eps_raw!r}", "bad_eps")
    solver = SolverSection(
        tol=_positive(_get(solver_s, "tol", "solver", float, 1e-11), "solver.tol"),
        eps=eps,
        max_iter=_get(solver_s, "max_iter", "solver", int, 200),
        restart=_get(solver_s, "restart", "solver", int, 50),
        drop_tol=_get(solver_s, "drop_tol", "solver", float, 1e-10),
        max_retries=_get(solver_s, "max_retries", "solver", int, 3),
        workers=_get(solver_s, "workers", "solver", int, 1),
    )

    out_s = _section(data, "output", required=False)
    profile = _get(out_s, "profile", "output", str, "test")
    if profile not in PROFILES:
        raise ConfigurationError(f"Неизвестный профиль: {profile}", "unknown_profile")
    output = OutputSection(
        directory=os.environ.get(OUTPUT_DIR_ENV) or _get(out_s, "directory", "output", str, "output"),
        cadence=_get(out_s, "cadence", "output", int, 1),
        check_cadence=_get(out_s, "check_cadence", "output", int, 1 if profile == "test" else 10),
        snapshot_cadence=_get(out_s, "snapshot_cadence", "output", int, 0),
        strict=_get(out_s, "strict", "output", bool, True),
        profile=profile,
    )
    if output.cadence < 1 or output.check_cadence < 1 or output.snapshot_cadence < 0:
        raise ConfigurationError("Периоды вывода должны быть положительными", "bad_cadence")

    return RunConfig(model, length, sphere, space, flow, initial, TimeSection(dt, n_steps), solver, output, dict(data))


def load_config(source: Union[str, Path]) -> RunConfig:
    """
    Загрузка конфигурации из файла или текста TOML.

    Аргументы:
        source: Путь к файлу или текст конфигурации

    Возвращает:
        Проверенную RunConfig

    Вызывает:
        ConfigurationError: Если конфигурация не разбирается или не проходит проверку
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.endswith(".toml")):
        path = Path(source)
        if not path.exists():
            raise ConfigurationError(f"Файл конфигурации не найден: {path}", "not_found")
        text = path.read_text(encoding="utf-8")
        logger.info(f"Загрузка конфигурации из {path}")
    else:
        text = str(source)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"Не удалось разобрать конфигурацию: {e}", "parse_error") from e
    config = config_from_mapping(data)
    logger.debug(f"Хеш конфигурации: {config.hash}")
    return config


def describe_schema() -> str:
    """Текстовое описание схемы конфигурации с единицами."""
    width = max(len(key) for key, _, _ in CONFIG_SCHEMA)
    lines = [f"{key.ljust(width)}  [{unit}]  {text}" for key, unit, text in CONFIG_SCHEMA]
    return "\n".join(lines)
