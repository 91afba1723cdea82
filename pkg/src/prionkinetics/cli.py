"""
Командная строка: run, describe, validate, greer, converge.
"""
import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

from .config import describe_schema, load_config
from .convergence import convergence_study
from .exceptions import EXIT_OK, SimulationError, exit_code_for
from .greer import compare_with_full, run_greer
from .modules.diagnostics import CSV_FIELDS
from .simulation import Simulator
from .storage import DiagnosticsWriter

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prionkinetics", description="Кинетика полимеров и мономеров в заданном течении")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default="INFO", help="Уровень логирования")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Выполнить расчет")
    run.add_argument("config", type=Path)

    describe = sub.add_parser("describe", help="Схема конфигурации и журнал устойчивости")
    describe.add_argument("config", type=Path, nargs="?")

    validate = sub.add_parser("validate", help="Проверить конфигурацию без расчета")
    validate.add_argument("config", type=Path)

    greer = sub.add_parser("greer", help="Одномерная редуцированная система")
    greer.add_argument("config", type=Path)
    greer.add_argument("--compare", action="store_true", help="Сравнить с полным решателем")
    greer.add_argument("--steps", type=int, default=None, help="Число шагов")

    converge = sub.add_parser("converge", help="Исследование сходимости")
    converge.add_argument("config", type=Path)
    converge.add_argument("--levels", type=int, default=4)
    return parser


def _cmd_run(args: argparse.Namespace, log_level: int) -> int:
    config = load_config(args.config)
    with Simulator(config, log_level=log_level) as sim:
        artifacts = sim.run()
    last = artifacts.records[-1]
    print(f"config_sha256={artifacts.config_hash}")
    print(f"steps={artifacts.final.step} t={artifacts.final.t:.6g} mass_drift={last.mass_drift:.3e}")
    print(f"diagnostics={artifacts.diagnostics_path}")
    if artifacts.breaches:
        print(f"invariant_breaches={len(artifacts.breaches)}")
    return EXIT_OK


def _cmd_describe(args: argparse.Namespace, log_level: int) -> int:
    print(describe_schema())
    if args.config is None:
        return EXIT_OK
    config = load_config(args.config)
    print()
    print(f"config_sha256={config.hash}")
    print(
        f"grid: n_r={config.length.n_r} r_max={config.length.r_max} "
        f"sphere={config.sphere.n_theta}x{config.sphere.n_phi} space={config.space.mode}"
    )
    print(f"time: dt={config.time.dt} n_steps={config.time.n_steps} T={config.time.horizon:g}")
    with Simulator(config, log_level=log_level, write_outputs=False) as sim:
        ledger = sim.ledger
    print(
        f"ledger: k1={ledger.k1:.6g} k2={ledger.k2:.6g} k3={ledger.k3:.6g} C0={ledger.c0:.6g} "
        f"Cinf={ledger.c_inf:.6g} C_P={ledger.c_p:.6g} C_D={ledger.c_d:.6g} C_A={ledger.c_a:.6g}"
    )
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace, log_level: int) -> int:
    config = load_config(args.config)
    with Simulator(config, log_level=log_level, write_outputs=False) as sim:
        k2dt, k3dt = sim.ledger.k2 * config.time.dt, sim.ledger.k3 * config.time.dt
    print(f"OK config_sha256={config.hash} k2*dt={k2dt:.4g} k3*dt={k3dt:.4g}")
    return EXIT_OK


def _cmd_greer(args: argparse.Namespace, log_level: int) -> int:
    config = load_config(args.config)
    logging.getLogger("prionkinetics").setLevel(log_level)
    if args.compare:
        result = compare_with_full(config, n_steps=args.steps)
        print(f"max_discrepancy={result['max_discrepancy']:.3e}")
        return EXIT_OK

    states = run_greer(config, n_steps=args.steps)
    rho = states[0].mass()
    path = Path(config.output.directory) / "greer_diagnostics.csv"
    nan = float("nan")
    with DiagnosticsWriter(path, config.hash) as writer:
        for state in states:
            row = dict.fromkeys(CSV_FIELDS, nan)
            polymer_mass = state.mass() - state.phi
            row.update(
                step=state.step,
                t=state.t,
                total_mass=state.mass(),
                monomer_total=state.phi,
                polymer_mass=polymer_mass,
                polymer_count=state.count(),
                mass_drift=(state.mass() - rho) / rho if rho else 0.0,
            )
            writer.append(row)
    last = states[-1]
    drift = (last.mass() - rho) / rho if rho else math.nan
    print(f"steps={last.step} t={last.t:.6g} mass_drift={drift:.3e}")
    print(f"diagnostics={path}")
    return EXIT_OK


def _cmd_converge(args: argparse.Namespace, log_level: int) -> int:
    config = load_config(args.config)
    logging.getLogger("prionkinetics").setLevel(log_level)
    table = convergence_study(config, levels=args.levels)
    print(table.format())
    print(f"temporal_order={table.temporal_order:.3f}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "describe": _cmd_describe,
    "validate": _cmd_validate,
    "greer": _cmd_greer,
    "converge": _cmd_converge,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Точка входа CLI.

    Аргументы:
        argv: Аргументы командной строки; None - sys.argv[1:]

    Возвращает:
        Код завершения: 0 - успех, 1 - конфигурация, 2 - инвариант, 3 - решатель
    """
    args = _build_parser().parse_args(argv)
    log_level = getattr(logging, args.log_level)
    try:
        return COMMANDS[args.command](args, log_level)
    except SimulationError as e:
        code = exit_code_for(e)
        logger.error(f"Команда {args.command} завершилась ошибкой: {e}")
        print(f"error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
