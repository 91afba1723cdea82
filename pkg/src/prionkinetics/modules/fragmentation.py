"""
Модуль оператора фрагментации Fψ = -g r ψ + 2g ∫_r^∞ ψ dr'.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from ..length import tail_integral
from .base import BaseStepModule


@dataclass(frozen=True)
class FragmentationTerms:
    """Слагаемые оператора фрагментации для одного поля."""

    loss: np.ndarray
    gain: np.ndarray
    g_field: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.loss + self.gain


class FragmentationModule(BaseStepModule):
    """Модуль для работы с оператором фрагментации."""

    @cached_property
    def gain_matrix(self) -> np.ndarray:
        """
        Матрица Q = T∘K: (Q ψ)_j = ∫_{r_j}^{r_max} r' κ(r_j, r') ψ(r') dr' (трапеции).

        Для ядра 1/r' совпадает с хвостовым интегралом Λ₂.
        """
        n = self.lgrid.n_r
        dr = self.lgrid.dr
        trapezoid = np.triu(np.full((n, n), dr))
        trapezoid[np.arange(n), np.arange(n)] = 0.5 * dr
        trapezoid[:, -1] = np.where(np.arange(n) < n - 1, 0.5 * dr, 0.0)
        return trapezoid * self.params.kernel.moment_matrix(self.lgrid.nodes)

    def _gain_integral(self, psi: np.ndarray) -> np.ndarray:
        if self.params.kernel.kind == "uniform":
            return tail_integral(psi, self.lgrid)
        return np.tensordot(self.gain_matrix, psi, axes=(1, 0))

    def terms(self, psi: Any, g_field: Any) -> FragmentationTerms:
        """
        Слагаемые потерь и приобретения.

        Аргументы:
            psi: Поле формы (n_r, n_eta, n_y)
            g_field: Интенсивность разрыва формы (n_eta, n_y)

        Возвращает:
            FragmentationTerms
        """
        psi = np.asarray(psi, dtype=float)
        g = np.broadcast_to(np.asarray(g_field, dtype=float), psi.shape[1:])
        r = self.lgrid.nodes.reshape((-1,) + (1,) * (psi.ndim - 1))
        loss = -g[None] * r * psi
        gain = 2.0 * g[None] * self._gain_integral(psi)
        return FragmentationTerms(loss, gain, np.array(g))

    def apply_fragmentation(self, psi: Any, g_field: Any) -> np.ndarray:
        """
        Применить оператор фрагментации.

        Аргументы:
            psi: Поле формы (n_r, n_eta, n_y)
            g_field: Интенсивность разрыва формы (n_eta, n_y)

        Возвращает:
            Fψ той же формы

        Вызывает:
            TruncationTail: Если ψ не затухает к r_max
        """
        self._debug_log_method_call("apply_fragmentation", psi=np.asarray(psi), g_field=np.asarray(g_field))
        return self.terms(psi, g_field).total

    def gain(self, psi: Any, g_field: Any) -> np.ndarray:
        """Слагаемое приобретения 2g Λ₂[ψ]."""
        psi = np.asarray(psi, dtype=float)
        g = np.broadcast_to(np.asarray(g_field, dtype=float), psi.shape[1:])
        return 2.0 * g[None] * self._gain_integral(psi)
