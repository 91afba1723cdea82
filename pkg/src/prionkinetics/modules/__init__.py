"""
Модули шагов схемы.
"""

from .base import BaseStepModule
from .diagnostics import CSV_FIELDS, DiagnosticsModule, DiagnosticsRecord
from .fragmentation import FragmentationModule, FragmentationTerms
from .monomer import MonomerField, MonomerModule
from .polymer import PolymerField, PolymerModule, StepOperator

__all__ = [
    "BaseStepModule",
    "CSV_FIELDS",
    "DiagnosticsModule",
    "DiagnosticsRecord",
    "FragmentationModule",
    "FragmentationTerms",
    "MonomerField",
    "MonomerModule",
    "PolymerField",
    "PolymerModule",
    "StepOperator",
]
