"""
Основной цикл расчета: чередование шагов по ψ и φ, журнал устойчивости,
проверка инвариантов, диагностика и снимки.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, List, Optional, Tuple

import numpy as np

from .config import RunConfig
from .exceptions import InvariantBreach, TimestepTooLarge
from .flow import Domain, SpatialGrid, VelocityField, builtin_field, compute_flow_map
from .length import LengthGrid, total_integral
from .modules.diagnostics import DiagnosticsModule, DiagnosticsRecord
from .modules.monomer import MonomerModule
from .modules.polymer import PolymerModule
from .params import ModelParams, evaluate_g
from .solver import SparseSolver
from .sphere import SphereGrid, divergence_of_projected_drift, projected_drift, surface_gradient
from .storage import DiagnosticsWriter, SnapshotWriter

logger = logging.getLogger(__name__)

ENVELOPE_TOL = 1e-8
# относительный допуск огибающей
ENVELOPE_RTOL = 1e-12
NEGATIVITY_TOL = 1e-10
PHI_TOL = 1e-12
LEDGER_SAMPLES = 8


def build_grids(config: RunConfig) -> Tuple[LengthGrid, SphereGrid, SpatialGrid]:
    """Сетки по длине, на сфере и в пространстве для конфигурации."""
    lgrid = LengthGrid(config.length.n_r, config.length.r_max, config.model.alpha)
    sgrid = SphereGrid(config.sphere.n_theta, config.sphere.n_phi)
    ygrid = SpatialGrid(Domain(config.space.mode, config.space.length), config.space.n)
    return lgrid, sgrid, ygrid


def orientation_density(sgrid: SphereGrid, kind: str, anisotropy: float = 0.0, axis: Any = (0.0, 0.0, 1.0)) -> np.ndarray:
    """
    Плотность ориентаций p(η) с ∫p dη = 1 по квадратуре сетки.

    Аргументы:
        sgrid: Сетка на сфере
        kind: "uniform" или "aligned" (p ∝ 1 + b(η·n)²)
        anisotropy: Коэффициент b >= 0
        axis: Ось n

    Возвращает:
        Массив формы (n_eta,)
    """
    if kind == "uniform":
        return np.full(sgrid.size, 1.0 / sgrid.weights.sum())
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    p = 1.0 + anisotropy * (sgrid.nodes @ n) ** 2
    return p / sgrid.integrate(p)


def build_initial_fields(
    config: RunConfig, lgrid: LengthGrid, sgrid: SphereGrid, ygrid: SpatialGrid
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Начальные поля ψ⁰ = amplitude·r·e^{-λr}·p(η) и φ⁰ = c(1 + b cos(2πy₁/L)).

    Возвращает:
        Кортеж (ψ⁰ формы (n_r, n_eta, n_y), φ⁰ формы (n_y,))
    """
    init = config.initial
    shape = (lgrid.n_r, sgrid.size, ygrid.size)
    if init.psi_kind == "zero":
        psi0 = np.zeros(shape)
    else:
        radial = init.amplitude * lgrid.nodes * np.exp(-init.decay * lgrid.nodes)
        radial[-1] = 0.0
        p = orientation_density(sgrid, init.orientation, init.anisotropy, init.axis)
        psi0 = np.broadcast_to(np.outer(radial, p)[:, :, None], shape).copy()

    y1 = ygrid.nodes[:, 0]
    phi0 = init.phi0 * (1.0 + init.phi_bump * np.cos(2.0 * math.pi * y1 / ygrid.domain.length))
    return psi0, phi0


@dataclass(frozen=True)
class EnvelopeCheck:
    """Результат проверки ψ⁰ <= C₀e^{-αr}."""

    passed: bool
    max_violation: float
    witness: Tuple[int, ...]
    witness_r: float


def check_initial_envelope(psi0: Any, c0: float, alpha: float, lgrid: LengthGrid, tol: float = 0.0) -> EnvelopeCheck:
    """
    Проверка огибающей начального поля.

    Аргументы:
        psi0: Поле формы (n_r, ...)
        c0: Константа C₀
        alpha: Показатель α
        lgrid: Сетка по длине
        tol: Абсолютный допуск на превышение сверх относительного ENVELOPE_RTOL·C₀e^{-αr}

    Возвращает:
        EnvelopeCheck с наибольшим превышением и его положением
    """
    psi0 = np.asarray(psi0, dtype=float)
    envelope = c0 * np.exp(-alpha * lgrid.nodes)
    excess = psi0 - envelope.reshape((-1,) + (1,) * (psi0.ndim - 1))
    flat = int(np.argmax(excess[::-1].reshape(-1)))
    # при равенстве берется узел с наибольшим r
    witness = np.unravel_index(flat, excess.shape)
    witness = (excess.shape[0] - 1 - int(witness[0]),) + tuple(int(i) for i in witness[1:])
    violation = float(excess[witness])
    slack = excess - ENVELOPE_RTOL * np.abs(envelope).reshape(excess.shape[:1] + (1,) * (psi0.ndim - 1))
    passed = float(np.max(slack, initial=-np.inf)) <= tol and bool(np.all(psi0 >= 0.0))
    return EnvelopeCheck(passed, violation, witness, float(lgrid.nodes[witness[0]]))


def envelope_constant(psi0: Any, alpha: float, lgrid: LengthGrid) -> float:
    """Наименьшее C₀ с ψ⁰ <= C₀e^{-αr} на сетке."""
    psi0 = np.asarray(psi0, dtype=float)
    scaled = psi0 * np.exp(alpha * lgrid.nodes).reshape((-1,) + (1,) * (psi0.ndim - 1))
    return float(np.max(scaled, initial=0.0))


@dataclass
class StabilityLedger:
    """
    Константы устойчивости k₁, k₂, k₃ и рекурсия огибающей Cₙ.

    k₁ и k₂ берутся в форме, согласованной с сеткой: при Δr → 0 они
    переходят в 2ḡ/α и ατ₀‖φ⁰‖∞ + C_D·C_A.
    """

    k1: float
    k2: float
    k3: float
    c0: float
    c_inf: float
    c_p: float
    c_d: float
    c_a: float
    dt: float
    n_steps: int
    cn: float = 0.0
    step: int = 0
    history: List[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.history:
            self.cn = self.c0
            self.history = [self.c0]

    @property
    def horizon(self) -> float:
        return self.dt * self.n_steps

    @property
    def growth(self) -> float:
        return (1.0 + self.k1 * self.dt) / (1.0 - self.k2 * self.dt)

    @classmethod
    def build(
        cls,
        params: ModelParams,
        lgrid: LengthGrid,
        sgrid: SphereGrid,
        ygrid: SpatialGrid,
        velocity: VelocityField,
        gain_matrix: np.ndarray,
        phi0: Any,
        c0: float,
        dt: float,
        n_steps: int,
        samples: int = LEDGER_SAMPLES,
    ) -> "StabilityLedger":
        """
        Построение журнала по параметрам, сеткам и начальным данным.

        C_P и C_D измеряются по узлам сетки на сфере, пространственным узлам
        и моментам времени t_n (не более samples штук).

        Возвращает:
            StabilityLedger
        """
        alpha, dr = params.alpha, lgrid.dr
        phi_max = float(np.max(np.abs(phi0), initial=0.0))
        horizon = dt * n_steps

        steps = np.unique(np.linspace(1, n_steps, min(samples, n_steps)).round().astype(int))
        grads = np.concatenate([velocity.gradient(n * dt, ygrid.nodes).reshape(-1, 3, 3) for n in steps])
        grads = np.unique(grads, axis=0)
        eta = sgrid.nodes
        drift = projected_drift(grads[:, None], eta[None])
        c_p = float(np.max(np.linalg.norm(drift, axis=-1), initial=0.0))
        continuum_div = divergence_of_projected_drift(grads[:, None], eta[None])
        discrete_div = sgrid.drift_divergence(grads)
        c_d = float(max(np.max(np.abs(continuum_div), initial=0.0), np.max(np.abs(discrete_div), initial=0.0)))
        c_a = params.c_a

        decay = np.exp(-alpha * lgrid.nodes)
        interior = lgrid.interior
        gain_ratio = float(np.max((gain_matrix @ decay)[interior] / decay[interior], initial=0.0))
        k1 = max(2.0 * params.g_hi / alpha, 2.0 * params.g_hi * gain_ratio)
        k2 = params.tau0 * phi_max * math.expm1(alpha * dr) / dr + c_d * c_a
        with np.errstate(over="ignore"):
            c_inf = float(2.0 * c0 * np.exp((k1 + k2) * horizon))
        omega = ygrid.domain.volume
        k3 = (
            alpha * params.tau0 * phi_max
            + c_p ** 2 * c_a / params.d1
            + 4.0 * params.g_hi * alpha ** -1.5 * c_inf * math.sqrt(omega * 4.0 * math.pi)
        )
        ledger = cls(k1, k2, k3, c0, c_inf, c_p, c_d, c_a, dt, n_steps)
        logger.info(
            f"Журнал устойчивости: k1={k1:.6g}, k2={k2:.6g}, k3={k3:.6g}, C0={c0:.6g}, C∞={c_inf:.6g}, "
            f"C_P={c_p:.6g}, C_D={c_d:.6g}, C_A={c_a:.6g}"
        )
        return ledger

    def precheck(self) -> None:
        """
        Проверка k₂Δt < 1 и k₃Δt < 1 до первого шага.

        Вызывает:
            TimestepTooLarge: Если условие нарушено
        """
        for name, k in (("k2", self.k2), ("k3", self.k3)):
            if not k * self.dt < 1.0:
                raise TimestepTooLarge(
                    f"Шаг Δt = {self.dt:g} слишком велик: {name}·Δt = {k * self.dt:.4g} >= 1",
                    "timestep_too_large",
                    {name: k, "dt": self.dt},
                )

    def advance(self) -> float:
        """Cₙ = (1 + k₁Δt)/(1 - k₂Δt)·C_{n-1}."""
        self.cn = self.cn * self.growth
        self.step += 1
        self.history.append(self.cn)
        return self.cn

    def closed_form(self, n: int) -> float:
        """Cₙ = C₀((1 + k₁Δt)/(1 - k₂Δt))ⁿ."""
        return self.c0 * self.growth ** n

    def psi_energy_budget(self, psi0_norm_sq: float) -> float:
        with np.errstate(over="ignore"):
            return float(4.0 * np.exp(self.k3 * self.horizon) * psi0_norm_sq)


@dataclass
class EnergyAccumulator:
    """Левые части дискретных энергетических оценок для ψ и φ."""

    psi_max: float = 0.0
    psi_dissipation: float = 0.0
    phi_max: float = 0.0
    phi_jumps: float = 0.0
    phi_dissipation: float = 0.0

    @property
    def psi_energy(self) -> float:
        return self.psi_max + self.psi_dissipation

    @property
    def phi_energy(self) -> float:
        return self.phi_max + self.phi_jumps + self.phi_dissipation


@dataclass
class SimulationState:
    """Состояние расчета после шага n."""

    step: int
    t: float
    psi: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    energy: EnergyAccumulator = field(default_factory=EnergyAccumulator)
    record: Optional[DiagnosticsRecord] = None


@dataclass
class RunArtifacts:
    """Итог расчета."""

    final: SimulationState
    records: List[DiagnosticsRecord]
    ledger: StabilityLedger
    config_hash: str
    diagnostics_path: Optional[Path] = None
    snapshots: List[Path] = field(default_factory=list)
    breaches: List[Tuple[str, int, float]] = field(default_factory=list)


class Simulator:
    """Расчет связанной системы ψ, φ по конфигурации."""

    def __init__(self, config: RunConfig, log_level: Optional[int] = None, write_outputs: bool = True):
        """
        Инициализация расчета.

        Аргументы:
            config: Конфигурация расчета
            log_level: Уровень логирования пакета; None - не менять
            write_outputs: Записывать ли CSV и снимки

        Вызывает:
            ConfigurationError: Если конфигурация несовместима (поле и область)
            TimestepTooLarge: Если Δt не проходит проверку журнала устойчивости
        """
        # Настройка логирования
        self.logger = logging.getLogger("prionkinetics")
        if log_level is not None:
            self.logger.setLevel(log_level)
        if not self.logger.hasHandlers():
            handler = logging.StreamHandler()
            formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)

        self.config = config
        self.config_hash = config.hash
        self.write_outputs = write_outputs
        self.params = config.model
        self.dt = config.time.dt
        self.n_steps = config.time.n_steps
        self.logger.info(
            f"Инициализация расчета {self.config_hash[:12]}: Δt={self.dt:g}, шагов {self.n_steps}, "
            f"режим '{config.space.mode}', поле '{config.flow.kind}'"
        )

        self.lgrid, self.sgrid, self.ygrid = build_grids(config)
        self.velocity = builtin_field(
            config.flow.kind, self.ygrid.domain, ramp_time=config.flow.ramp_time, **config.flow.params
        )
        self.params.kernel.check_on_grid(self.lgrid.nodes)

        solver_cfg = config.solver
        self.solver = SparseSolver(
            tol=solver_cfg.tol,
            restart=solver_cfg.restart,
            max_iter=solver_cfg.max_iter,
            drop_tol=solver_cfg.drop_tol,
            max_retries=solver_cfg.max_retries,
            workers=solver_cfg.workers,
        )
        grids = (self.params, self.lgrid, self.sgrid, self.ygrid)
        self.polymer = PolymerModule(*grids, solver=self.solver)
        self.monomer = MonomerModule(*grids, solver=self.solver)
        self.diagnostics = DiagnosticsModule(*grids)
        self.eps = self.polymer.default_eps() if solver_cfg.eps is None else solver_cfg.eps

        self.psi0, self.phi0 = build_initial_fields(config, self.lgrid, self.sgrid, self.ygrid)
        c0 = envelope_constant(self.psi0, self.params.alpha, self.lgrid)
        self.initial_envelope = check_initial_envelope(self.psi0, c0, self.params.alpha, self.lgrid)
        if not self.initial_envelope.passed:
            raise InvariantBreach("psi_envelope", 0, self.initial_envelope.max_violation)

        self.ledger = StabilityLedger.build(
            self.params,
            self.lgrid,
            self.sgrid,
            self.ygrid,
            self.velocity,
            self.polymer.fragmentation.gain_matrix,
            self.phi0,
            c0,
            self.dt,
            self.n_steps,
        )
        self.ledger.precheck()

        self.phi0_max = float(np.max(np.abs(self.phi0), initial=0.0))
        self.psi0_norm_sq = self._psi_norm_sq(self.psi0)
        self.phi0_norm_sq = self._phi_norm_sq(self.phi0)
        self.psi_budget = self.ledger.psi_energy_budget(self.psi0_norm_sq)
        self.phi_budget = 2.0 * self.phi0_norm_sq
        self.rho_initial: Optional[float] = None
        self.breaches: List[Tuple[str, int, float]] = []
        self.records: List[DiagnosticsRecord] = []

        self.output_dir = Path(config.output.directory)
        self._csv: Optional[DiagnosticsWriter] = None
        self._snapshots: Optional[SnapshotWriter] = None
        if write_outputs:
            self._csv = DiagnosticsWriter(self.output_dir / "diagnostics.csv", self.config_hash)
            self._snapshots = SnapshotWriter(self.output_dir, self.config_hash)

    # Нормы

    def _psi_norm_sq(self, psi: np.ndarray, weight: Optional[np.ndarray] = None) -> float:
        w_r = self.lgrid.weights * self.lgrid.a
        if weight is not None:
            w_r = w_r * weight
        return float(np.einsum("r,e,rey->", w_r, self.sgrid.weights, psi * psi) * self.ygrid.cell_volume)

    def _psi_gradient_sq(self, psi: np.ndarray) -> float:
        grad = surface_gradient(psi.transpose(1, 0, 2), self.sgrid)
        density = np.sum(grad * grad, axis=-1)
        w_r = self.lgrid.weights * self.lgrid.a * self.params.a_weight(self.lgrid.nodes)
        return float(np.einsum("r,e,ery->", w_r, self.sgrid.weights, density) * self.ygrid.cell_volume)

    def _phi_norm_sq(self, phi: np.ndarray) -> float:
        return float(np.sum(phi * phi) * self.ygrid.cell_volume)

    def _update_energy(self, energy: EnergyAccumulator, psi: np.ndarray, phi: np.ndarray, phi_prev: np.ndarray) -> EnergyAccumulator:
        dt = self.dt
        return EnergyAccumulator(
            psi_max=max(energy.psi_max, self._psi_norm_sq(psi)),
            psi_dissipation=energy.psi_dissipation
            + dt * self.params.d1 * self._psi_gradient_sq(psi)
            + 2.0 * self.params.g_lo * dt * self._psi_norm_sq(psi, weight=self.lgrid.nodes),
            phi_max=max(energy.phi_max, self._phi_norm_sq(phi)),
            phi_jumps=energy.phi_jumps + self._phi_norm_sq(phi - phi_prev),
            phi_dissipation=energy.phi_dissipation + 2.0 * self.params.d2 * dt * self.monomer.gradient_energy(phi),
        )

    # Шаг

    def step(self, state: SimulationState) -> SimulationState:
        """
        Один шаг схемы: ψⁿ из (ψ^{n-1}, φ^{n-1}), затем φⁿ из (φ^{n-1}, ψ^{n-1}).

        Аргументы:
            state: Состояние после шага n-1

        Возвращает:
            Состояние после шага n

        Вызывает:
            SolverDiverged: Если линейный решатель не сошелся
            OdeToleranceExceeded: Если характеристики не удовлетворяют допускам
        """
        n = state.step + 1
        t_prev, t_now = state.t, n * self.dt
        nodes = self.ygrid.nodes

        grad = self.velocity.gradient(t_now, nodes)
        vel = self.velocity.velocity(t_now, nodes)
        g_field = evaluate_g(self.params, grad[None], vel[None], self.sgrid.nodes[:, None])
        flow_map = compute_flow_map(self.velocity, t_prev, t_now, nodes, cell_size=self.ygrid.h, step=n)

        op = self.polymer.assemble_polymer_operator(
            grad, state.phi, g_field, self.dt, eps=self.eps, k2=self.ledger.k2, k3=self.ledger.k3, step=n
        )
        rhs = self.polymer.polymer_rhs(state.psi, flow_map, g_field, self.dt)
        psi = self.polymer.solve_polymer_step(op, rhs)

        sink = self.params.tau0 * total_integral(state.psi, self.lgrid, self.sgrid)
        mop = self.monomer.assemble_monomer_operator(self.velocity, t_now, sink, self.dt)
        phi = self.monomer.solve_monomer_step(mop, state.phi / self.dt)

        self.ledger.advance()
        energy = self._update_energy(state.energy, psi, phi, state.phi)
        return SimulationState(n, t_now, psi, phi, energy)

    # Инварианты

    def check_invariants(self, state: SimulationState) -> List[Tuple[str, float]]:
        """
        Проверка инвариантов состояния.

        Возвращает:
            Список нарушений (имя, величина); пустой, если все выполнено
        """
        psi, phi = state.psi, state.phi
        breaches = []
        psi_norm = float(np.linalg.norm(psi))
        negative = float(np.linalg.norm(np.minimum(psi, 0.0)))
        if negative > NEGATIVITY_TOL * psi_norm:
            breaches.append(("psi_negativity", negative))

        envelope = self.ledger.cn * np.exp(-self.params.alpha * self.lgrid.nodes)
        excess = float(np.max(psi - (1.0 + ENVELOPE_RTOL) * envelope[:, None, None], initial=-np.inf))
        if excess > ENVELOPE_TOL:
            breaches.append(("psi_envelope", excess))

        low = float(np.min(phi, initial=0.0))
        high = float(np.max(phi, initial=0.0))
        if low < -PHI_TOL:
            breaches.append(("phi_bounds", -low))
        elif high > self.phi0_max + PHI_TOL:
            breaches.append(("phi_bounds", high - self.phi0_max))

        if self.ledger.cn > self.ledger.c_inf * (1.0 + 1e-12):
            breaches.append(("ledger_envelope", self.ledger.cn - self.ledger.c_inf))
        if state.energy.psi_energy > self.psi_budget * (1.0 + 1e-12):
            breaches.append(("energy_psi", state.energy.psi_energy - self.psi_budget))
        if state.energy.phi_energy > self.phi_budget * (1.0 + 1e-12) + 1e-300:
            breaches.append(("energy_phi", state.energy.phi_energy - self.phi_budget))
        return breaches

    def _handle_breaches(self, state: SimulationState) -> None:
        for name, magnitude in self.check_invariants(state):
            self.breaches.append((name, state.step, magnitude))
            if self.config.output.strict:
                self.logger.error(f"Нарушен инвариант {name} на шаге {state.step}: {magnitude:.3e}")
                raise InvariantBreach(name, state.step, magnitude)
            self.logger.warning(f"Нарушен инвариант {name} на шаге {state.step}: {magnitude:.3e}")

    # Вывод

    def _record(self, state: SimulationState) -> DiagnosticsRecord:
        record = self.diagnostics.compute_diagnostics(
            state.psi,
            state.phi,
            t=state.t,
            step=state.step,
            c_n=self.ledger.cn,
            psi_energy=state.energy.psi_energy,
            phi_energy=state.energy.phi_energy,
            rho_initial=self.rho_initial,
        )
        if self.rho_initial is None:
            self.rho_initial = record.total_mass
            expected = self.params.rho0
            if expected is not None and not math.isclose(expected, record.total_mass, rel_tol=1e-6):
                self.logger.warning(
                    f"Начальная масса {record.total_mass:.12g} не совпадает с заданной rho0 = {expected:.12g}"
                )
        return record

    def _emit(self, state: SimulationState) -> None:
        output = self.config.output
        last = state.step == self.n_steps
        if state.step % output.check_cadence == 0 or last:
            self._handle_breaches(state)
        if state.step % output.cadence == 0 or last:
            state.record = self._record(state)
            self.records.append(state.record)
            if self._csv is not None:
                self._csv.append(state.record)
            self.logger.info(
                f"Шаг {state.step}/{self.n_steps}, t={state.t:.6g}: ρ={state.record.total_mass:.12g}, "
                f"дрейф {state.record.mass_drift:.3e}"
            )
        if self._snapshots is not None:
            cadence = output.snapshot_cadence
            if last or (cadence and state.step % cadence == 0):
                self._snapshots.submit(state.psi, state.phi, state.step, state.t, self.params.alpha)

    def initial_state(self) -> SimulationState:
        energy = EnergyAccumulator(psi_max=self.psi0_norm_sq, phi_max=self.phi0_norm_sq)
        return SimulationState(0, 0.0, self.psi0.copy(), self.phi0.copy(), energy)

    def steps(self, n_steps: Optional[int] = None) -> Iterator[SimulationState]:
        """
        Генератор состояний: сначала начальное, затем после каждого шага.

        Аргументы:
            n_steps: Число шагов; None - из конфигурации

        Возвращает:
            Итератор SimulationState
        """
        total = self.n_steps if n_steps is None else n_steps
        if total > self.n_steps:
            raise TimestepTooLarge(
                f"Запрошено {total} шагов при журнале устойчивости на {self.n_steps}",
                "steps_exceed_ledger",
            )
        state = self.initial_state()
        self._emit(state)
        yield state
        for _ in range(total):
            if self._snapshots is not None:
                self._snapshots.barrier()
            state = self.step(state)
            self._emit(state)
            yield state
        if self._snapshots is not None:
            self._snapshots.barrier()

    def run(self) -> RunArtifacts:
        """
        Выполнить расчет до конца.

        Возвращает:
            RunArtifacts с последним состоянием, рядом диагностики и путями файлов

        Вызывает:
            InvariantBreach: При нарушении инварианта в строгом режиме
            SolverDiverged: Если линейный решатель не сошелся
        """
        state = None
        for state in self.steps():
            pass
        self.logger.info(f"Расчет завершен: {state.step} шагов, t={state.t:.6g}")
        return RunArtifacts(
            final=state,
            records=list(self.records),
            ledger=self.ledger,
            config_hash=self.config_hash,
            diagnostics_path=self._csv.path if self._csv is not None else None,
            snapshots=list(self._snapshots.written) if self._snapshots is not None else [],
            breaches=list(self.breaches),
        )

    def close(self) -> None:
        """Закрыть файлы вывода."""
        if self._snapshots is not None:
            self._snapshots.close()
        if self._csv is not None:
            self._csv.close()

    def __enter__(self):
        """Вход в контекстный менеджер."""
        self.logger.debug("Вход в контекстный менеджер")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Выход из контекстного менеджера."""
        self.logger.debug("Выход из контекстного менеджера")
        self.close()
