"""
Пример использования симулятора prionkinetics.
"""
import logging
import time

import numpy as np

from prionkinetics import (
    ClosureRegistry,
    ConfigurationError,
    InvariantBreach,
    SimulationError,
    Simulator,
    TimestepTooLarge,
    compare_with_full,
    convergence_study,
    load_config,
    read_snapshot,
)
from prionkinetics.params import ScissionRate


def simple_example():
    """Простой пример расчета по готовой конфигурации."""
    print("Запуск простого примера...")

    config = load_config("configs/shear.toml")
    print(f"Конфигурация загружена, хеш: {config.hash[:16]}...")

    with Simulator(config, log_level=logging.INFO) as sim:
        # Пример 1: Журнал устойчивости до расчета
        ledger = sim.ledger
        print("\n1. Журнал устойчивости...")
        print(f"k1={ledger.k1:.4g}, k2={ledger.k2:.4g}, k3={ledger.k3:.4g}")
        print(f"k2*dt={ledger.k2 * ledger.dt:.3e}, C0={ledger.c0:.4g}, C_inf={ledger.c_inf:.4g}")

        # Пример 2: Расчет
        print("\n2. Расчет...")
        start_time = time.perf_counter()
        artifacts = sim.run()
        elapsed = time.perf_counter() - start_time

    last = artifacts.records[-1]
    print(f"Выполнено {artifacts.final.step} шагов за {elapsed:.2f} с")
    print(f"Масса: {last.total_mass:.12g}, дрейф: {last.mass_drift:.3e}")
    print(f"Минимальное собственное число напряжений: {last.stress_min_eig:.3e}")
    print(f"Запас до огибающей: {last.envelope_margin:.3e}")

    # Пример 3: Чтение последнего снимка
    if artifacts.snapshots:
        print("\n3. Чтение снимка...")
        snapshot = read_snapshot(artifacts.snapshots[-1], expected_hash=artifacts.config_hash)
        print(f"Снимок шага {snapshot.header['step']}: ψ {snapshot.psi.shape}, min ψ = {snapshot.psi.min():.3e}")

    print("Простой пример завершен!")


@ClosureRegistry.closure("g", "vorticity")
def vorticity_rate(g_lo, g_hi, c=1.0, **_):
    """Интенсивность разрыва, растущая с завихренностью."""
    g_lo, c = float(g_lo), float(c)

    def func(grad_u, u, eta):
        w = grad_u - np.swapaxes(grad_u, -1, -2)
        value = g_lo + c * np.sqrt(np.sum(w * w, axis=(-2, -1)))
        shape = np.broadcast_shapes(grad_u.shape[:-2], u.shape[:-1], eta.shape[:-1])
        return np.broadcast_to(value, shape).copy()

    return ScissionRate("vorticity", g_lo, float(g_hi), c, func)


CUSTOM_CONFIG = """
[model]
tau0 = 0.3
alpha = 1.0
d1 = 0.5
d2 = 1.0
t_final = 0.2

[model.g]
kind = "vorticity"
g_lo = 1.0
g_hi = 2.0
c = 0.5

[grid.length]
n_r = 64
r_max = 30.0

[grid.sphere]
n_theta = 4
n_phi = 8

[flow]
kind = "linear"
params = { gradient = [[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]] }

[initial]
psi = "gamma"
amplitude = 0.1
decay = 2.0
phi0 = 1.0

[time]
dt = 0.002

[output]
directory = "output/custom"
cadence = 25
"""


def custom_closure_example():
    """Пример регистрации собственного замыкания g."""
    print("\n" + "=" * 80)
    print("ПРИМЕР СОБСТВЕННОГО ЗАМЫКАНИЯ")
    print("=" * 80)

    print(f"Замыкания g: {', '.join(ClosureRegistry.names('g'))}")

    config = load_config(CUSTOM_CONFIG)
    print(f"g в [{config.model.g_lo}, {config.model.g_hi}], шагов: {config.time.n_steps}")

    with Simulator(config, log_level=logging.WARNING) as sim:
        artifacts = sim.run()

    for record in artifacts.records:
        print(f"t={record.t:.3f}: полимеры {record.polymer_count:.6f}, мономеры {record.monomer_total:.6f}")

    print("Пример собственного замыкания завершен!")


def greer_example():
    """Сравнение полного решателя с одномерной системой."""
    print("\n" + "=" * 80)
    print("СРАВНЕНИЕ С ОДНОМЕРНОЙ СИСТЕМОЙ")
    print("=" * 80)

    config = load_config("configs/greer.toml")
    result = compare_with_full(config)
    reference = result["reference"]

    print(f"Шагов: {len(result['discrepancies'])}")
    print(f"Максимальное расхождение: {result['max_discrepancy']:.3e}")
    print(f"Одномерная система при t={reference.t:.3f}: число {reference.count():.6f}, масса {reference.mass():.6f}")

    try:
        compare_with_full(load_config("configs/shear.toml"))
    except ConfigurationError as e:
        print(f"Сдвиговая конфигурация не сводится к одномерной: {e.code}")


def convergence_example():
    """Исследование сходимости по уровням измельчения."""
    print("\n" + "=" * 80)
    print("ИССЛЕДОВАНИЕ СХОДИМОСТИ")
    print("=" * 80)

    config = load_config("configs/convergence.toml")
    table = convergence_study(config, levels=3)
    print(table.format())
    print(f"Наблюдаемый порядок по времени: {table.temporal_order:.2f}")


def error_handling_example():
    """Пример обработки ошибок."""
    print("\n" + "=" * 80)
    print("ОБРАБОТКА ОШИБОК")
    print("=" * 80)

    # Пример 1: Слишком большой шаг
    try:
        Simulator(load_config("configs/stability_reject.toml"), write_outputs=False)
    except TimestepTooLarge as e:
        print(f"1. Шаг отклонен до расчета: {e.code} - {e.message}")

    # Пример 2: Отсутствующий файл
    try:
        load_config("configs/no_such_file.toml")
    except ConfigurationError as e:
        print(f"2. Ошибка конфигурации: {e.code}")

    # Пример 3: Общий обработчик
    try:
        with Simulator(load_config("configs/greer.toml"), write_outputs=False) as sim:
            sim.run()
        print("3. Расчет без нарушений")
    except InvariantBreach as e:
        print(f"3. Инвариант {e.name} нарушен на шаге {e.step}: {e.magnitude:.3e}")
    except SimulationError as e:
        print(f"3. Ошибка расчета: {e}")


if __name__ == "__main__":
    simple_example()
    custom_closure_example()
    greer_example()
    convergence_example()
    error_handling_example()
