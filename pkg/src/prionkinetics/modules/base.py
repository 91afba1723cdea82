"""
Базовый модуль шагов схемы.
"""
import logging
from abc import ABC
from typing import Any, Dict

import numpy as np

from ..flow import SpatialGrid
from ..length import LengthGrid
from ..params import ModelParams
from ..sphere import SphereGrid


class BaseStepModule(ABC):
    """Базовый класс для всех модулей схемы."""

    def __init__(
        self,
        params: ModelParams,
        length_grid: LengthGrid,
        sphere_grid: SphereGrid,
        spatial_grid: SpatialGrid,
    ):
        """
        Инициализация модуля.

        Аргументы:
            params: Параметры модели
            length_grid: Сетка по длине
            sphere_grid: Сетка на сфере
            spatial_grid: Пространственная сетка
        """
        self.params = params
        self.lgrid = length_grid
        self.sgrid = sphere_grid
        self.ygrid = spatial_grid
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    @property
    def field_shape(self) -> tuple:
        """Форма поля ψ: (n_r, n_eta, n_y)."""
        return (self.lgrid.n_r, self.sgrid.size, self.ygrid.size)

    def _debug_log_method_call(self, method_name: str, **kwargs):
        """
        Логирование вызова метода в debug режиме.

        Аргументы:
            method_name: Название метода
            **kwargs: Параметры метода
        """
        if self.logger.isEnabledFor(logging.DEBUG):
            self.logger.debug(f"*** ВЫЗОВ МЕТОДА {self.__class__.__name__}.{method_name} ***")
            for key, value in self._summarize(**kwargs).items():
                self.logger.debug(f"  {key}: {value}")
            self.logger.debug(f"*** КОНЕЦ ПАРАМЕТРОВ МЕТОДА ***")

    def _summarize(self, **kwargs) -> Dict[str, Any]:
        """
        Подготовка параметров для журнала: массивы заменяются формой и диапазоном.

        Аргументы:
            **kwargs: Параметры для подготовки

        Возвращает:
            Словарь с параметрами, отличными от None
        """
        summary = {}
        for key, value in kwargs.items():
            if value is None:
                continue
            if isinstance(value, np.ndarray) and value.size > 1:
                summary[key] = f"массив {value.shape}, min={value.min():.3e}, max={value.max():.3e}"
            else:
                summary[key] = value
        return summary
