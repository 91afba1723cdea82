"""
Реестр именованных замыканий.

Предоставляет централизованную регистрацию фабрик замыканий модели:
интенсивности разрыва g, весовой функции длины A(r) и полей скорости.
"""
import logging
from typing import Any, Callable, Dict, List

Factory = Callable[..., Any]


class ClosureRegistry:
    """
    Реестр фабрик замыканий.

    Фабрики хранятся по категориям ("g", "a_weight", "velocity") и
    извлекаются по имени из конфигурации.
    """
    _factories: Dict[str, Dict[str, Factory]] = {}
    _logger = logging.getLogger(__name__)

    @classmethod
    def register(cls, category: str, name: str, factory: Factory) -> Factory:
        """
        Регистрирует фабрику в указанной категории.

        Аргументы:
            category: Категория замыкания
            name: Уникальное в категории имя
            factory: Вызываемый объект, строящий замыкание

        Возвращает:
            Зарегистрированную фабрику

        Вызывает:
            ValueError: Если имя в категории уже занято
        """
        bucket = cls._factories.setdefault(category, {})
        if name in bucket:
            raise ValueError(f"Замыкание '{category}/{name}' уже зарегистрировано")

        bucket[name] = factory
        cls._logger.debug(f"Зарегистрировано замыкание '{category}/{name}'")
        return factory

    @classmethod
    def closure(cls, category: str, name: str) -> Callable[[Factory], Factory]:
        """
        Декоратор регистрации фабрики.

        Аргументы:
            category: Категория замыкания
            name: Имя замыкания

        Возвращает:
            Декоратор, регистрирующий функцию
        """
        def decorator(factory: Factory) -> Factory:
            return cls.register(category, name, factory)
        return decorator

    @classmethod
    def create(cls, category: str, name: str, **config: Any) -> Any:
        """
        Строит замыкание по имени и параметрам.

        Аргументы:
            category: Категория замыкания
            name: Имя замыкания
            **config: Параметры фабрики

        Возвращает:
            Построенное замыкание
        """
        return cls.get(category, name)(**config)

    @classmethod
    def get(cls, category: str, name: str) -> Factory:
        """
        Получает фабрику по имени.

        Аргументы:
            category: Категория замыкания
            name: Имя замыкания

        Возвращает:
            Фабрику замыкания

        Вызывает:
            KeyError: Если замыкание не зарегистрировано
        """
        bucket = cls._factories.get(category, {})
        if name not in bucket:
            raise KeyError(f"Замыкание '{category}/{name}' не зарегистрировано")

        return bucket[name]

    @classmethod
    def exists(cls, category: str, name: str) -> bool:
        """
        Проверяет, зарегистрировано ли замыкание.

        Аргументы:
            category: Категория замыкания
            name: Имя замыкания

        Возвращает:
            True, если замыкание существует, иначе False
        """
        return name in cls._factories.get(category, {})

    @classmethod
    def names(cls, category: str) -> List[str]:
        """Имена зарегистрированных замыканий категории в порядке регистрации."""
        return list(cls._factories.get(category, {}).keys())

    @classmethod
    def unregister(cls, category: str, name: str) -> None:
        """
        Удаляет замыкание из реестра.

        Аргументы:
            category: Категория замыкания
            name: Имя замыкания

        Вызывает:
            KeyError: Если замыкание не зарегистрировано
        """
        bucket = cls._factories.get(category, {})
        if name not in bucket:
            raise KeyError(f"Замыкание '{category}/{name}' не зарегистрировано")

        del bucket[name]
        cls._logger.info(f"Замыкание '{category}/{name}' удалено из реестра")
