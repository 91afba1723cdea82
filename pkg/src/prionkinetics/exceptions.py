"""
Исключения симулятора prionkinetics.
"""
from typing import Any, Dict, List, Optional


class SimulationError(Exception):
    """Базовое исключение для всех ошибок симулятора."""

    def __init__(
        self,
        message: str,
        code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        """
        Инициализация ошибки симулятора.

        Аргументы:
            message: Сообщение об ошибке
            code: Короткий машинный код ошибки
            details: Дополнительные данные (шаг, величина нарушения и т.п.)
        """
        self.message = message
        self.code = code
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        """Возвращает строковое представление ошибки."""
        if self.code:
            return f"{self.code} - {self.message}"
        return self.message


# Ошибки конфигурации
class ConfigurationError(SimulationError):
    """Неверная или неполная конфигурация."""
    pass


class MissingField(ConfigurationError):
    """В конфигурации отсутствует обязательное поле."""
    pass


class NonPositiveCoefficient(ConfigurationError):
    """Коэффициент, который должен быть положительным, таковым не является."""
    pass


class KernelNormalizationFailure(ConfigurationError):
    """Табличное ядро фрагментации не нормировано или не симметрично."""
    pass


class UnsupportedDomainPairing(ConfigurationError):
    """Поле скорости несовместимо с выбранной областью."""
    pass


class ConfigurationNotDegenerate(ConfigurationError):
    """Конфигурация не удовлетворяет условиям одномерной редукции."""
    pass


class ProvenanceMismatch(ConfigurationError):
    """Сравниваются результаты, полученные из разных конфигураций."""
    pass


# Нарушение границ замыканий
class BoundViolation(SimulationError):
    """Значение замыкания вышло за объявленные границы."""
    pass


# Численные ошибки
class NumericalError(SimulationError):
    """Сбой численного алгоритма."""
    pass


class TruncationTail(NumericalError):
    """Поле не затухает к границе усечения по длине."""
    pass


class OdeToleranceExceeded(NumericalError):
    """Характеристики вычислены с недостаточной точностью."""
    pass


class PointLeftDomain(NumericalError):
    """Точка характеристики покинула область."""
    pass


class SolverDiverged(NumericalError):
    """Итерационный решатель не сошелся."""

    def __init__(
        self,
        message: str,
        trace: Optional[List[float]] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        """
        Инициализация ошибки решателя.

        Аргументы:
            message: Сообщение об ошибке
            trace: История норм невязки по итерациям
            details: Дополнительные данные
        """
        super().__init__(message, "solver_diverged", details)
        self.trace = list(trace or [])


# Нарушения инвариантов и устойчивости
class InvariantError(SimulationError):
    """Нарушен инвариант схемы или условие устойчивости."""
    pass


class TimestepTooLarge(InvariantError):
    """Шаг по времени не удовлетворяет ограничениям k2*dt < 1, k3*dt < 1."""
    pass


class NegativeMonomerInput(InvariantError):
    """Концентрация мономеров на входе шага отрицательна."""
    pass


class NegativeSink(InvariantError):
    """Сток мономеров отрицателен."""
    pass


class InvariantBreach(InvariantError):
    """Нарушен проверяемый инвариант во время расчета."""

    def __init__(self, name: str, step: int, magnitude: float, message: Optional[str] = None):
        """
        Инициализация нарушения инварианта.

        Аргументы:
            name: Имя инварианта
            step: Номер шага
            magnitude: Величина нарушения
            message: Необязательное пояснение
        """
        text = message or f"Инвариант '{name}' нарушен на шаге {step}: величина {magnitude:.3e}"
        super().__init__(text, "invariant_breach", {"name": name, "step": step, "magnitude": magnitude})
        self.name = name
        self.step = step
        self.magnitude = magnitude


EXIT_OK = 0
EXIT_CONFIGURATION = 1
EXIT_INVARIANT = 2
EXIT_SOLVER = 3


def exit_code_for(error: BaseException) -> int:
    """
    Код завершения CLI для исключения.

    Аргументы:
        error: Перехваченное исключение

    Возвращает:
        0 - успех, 1 - конфигурация, 2 - инвариант/устойчивость, 3 - решатель
    """
    if isinstance(error, InvariantError):
        return EXIT_INVARIANT
    elif isinstance(error, (NumericalError, BoundViolation)):
        return EXIT_SOLVER
    elif isinstance(error, SimulationError):
        return EXIT_CONFIGURATION
    else:
        return EXIT_CONFIGURATION
