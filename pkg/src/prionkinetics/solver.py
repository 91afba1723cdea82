"""
Итерационный решатель разреженных систем для неявных шагов.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, spilu

from .exceptions import SolverDiverged


@dataclass
class SolveReport:
    """Итог решения одной системы."""

    residual: float
    iterations: int
    attempts: int
    trace: List[float] = field(default_factory=list)


class SparseSolver:
    """GMRES с неполным LU-предобуславливателем и повторными попытками."""

    def __init__(
        self,
        tol: float = 1e-12,
        restart: int = 50,
        max_iter: int = 200,
        drop_tol: float = 1e-10,
        fill_factor: float = 20.0,
        max_retries: int = 3,
        retry_factor: float = 1e-2,
        workers: int = 1,
    ):
        """
        Инициализация решателя.

        Аргументы:
            tol: Относительный допуск невязки ‖Ax - b‖ <= tol·‖b‖
            restart: Длина рестарта GMRES
            max_iter: Максимальное число внешних итераций GMRES
            drop_tol: Порог отбрасывания неполного LU
            fill_factor: Допустимое заполнение неполного LU
            max_retries: Максимальное количество повторных попыток
            retry_factor: Множитель порога отбрасывания при повторе
            workers: Число потоков для независимых систем
        """
        self.tol = tol
        self.restart = restart
        self.max_iter = max_iter
        self.drop_tol = drop_tol
        self.fill_factor = fill_factor
        self.max_retries = max_retries
        self.retry_factor = retry_factor
        self.workers = max(1, int(workers))
        self.logger = logging.getLogger(__name__)
        self.last_reports: List[SolveReport] = []

    def _preconditioner(self, matrix: sp.csc_matrix, drop_tol: float) -> Optional[LinearOperator]:
        """
        Построить неполный LU-предобуславливатель.

        Аргументы:
            matrix: Матрица системы
            drop_tol: Порог отбрасывания

        Возвращает:
            LinearOperator или None, если разложение не удалось
        """
        try:
            ilu = spilu(matrix, drop_tol=drop_tol, fill_factor=self.fill_factor)
        except RuntimeError as e:
            self.logger.warning(f"Неполное LU-разложение не удалось (drop_tol={drop_tol:.1e}): {e}")
            return None
        return LinearOperator(matrix.shape, ilu.solve)

    def solve(self, matrix: sp.spmatrix, rhs: np.ndarray, tol: Optional[float] = None) -> Tuple[np.ndarray, SolveReport]:
        """
        Решить систему Ax = b с проверкой истинной невязки.

        Аргументы:
            matrix: Разреженная квадратная матрица
            rhs: Правая часть
            tol: Относительный допуск этого вызова; None - допуск решателя

        Возвращает:
            Кортеж (решение, отчет)

        Вызывает:
            SolverDiverged: Если допуск не достигнут после всех повторов
        """
        tol = self.tol if tol is None else float(tol)
        rhs = np.asarray(rhs, dtype=float)
        b_norm = float(np.linalg.norm(rhs))
        if b_norm == 0.0:
            return np.zeros_like(rhs), SolveReport(0.0, 0, 0)

        self.logger.debug(f"Решение системы размера {matrix.shape[0]}, nnz={matrix.nnz}, ‖b‖={b_norm:.3e}")
        csc = sp.csc_matrix(matrix)
        drop_tol = self.drop_tol
        retry_count = 0
        trace: List[float] = []

        while True:
            preconditioner = self._preconditioner(csc, drop_tol)
            attempt_trace: List[float] = []
            x, info = gmres(
                csc,
                rhs,
                rtol=tol,
                atol=0.0,
                restart=self.restart,
                maxiter=self.max_iter,
                M=preconditioner,
                callback=attempt_trace.append,
                callback_type="pr_norm",
            )
            trace.extend(float(v) for v in attempt_trace)
            residual = float(np.linalg.norm(csc @ x - rhs)) / b_norm
            self.logger.debug(
                f"GMRES: info={info}, итераций {len(attempt_trace)}, относительная невязка {residual:.3e}"
            )

            if np.all(np.isfinite(x)) and residual <= tol:
                return x, SolveReport(residual, len(attempt_trace), retry_count + 1, trace)

            # Проверка, следует ли повторить
            if retry_count < self.max_retries:
                retry_count += 1
                drop_tol *= self.retry_factor
                self.logger.warning(
                    f"GMRES не достиг допуска (невязка {residual:.3e} > {tol:.1e}). "
                    f"Повторная попытка с drop_tol={drop_tol:.1e} ({retry_count}/{self.max_retries})"
                )
                continue

            # Нет больше повторных попыток, вызываем ошибку
            self.logger.error(
                f"GMRES не сошелся: невязка {residual:.3e}. Достигнуто максимальное количество повторных попыток."
            )
            raise SolverDiverged(
                f"Итерационный решатель не сошелся: невязка {residual:.3e} > {tol:.1e}",
                trace,
                {"residual": residual, "attempts": retry_count + 1, "size": matrix.shape[0]},
            )

    def solve_many(self, systems: Iterable[Tuple[sp.spmatrix, np.ndarray]], tol: Optional[float] = None) -> List[np.ndarray]:
        """
        Решить набор независимых систем, сохраняя порядок.

        Аргументы:
            systems: Пары (матрица, правая часть)
            tol: Относительный допуск; None - допуск решателя

        Возвращает:
            Список решений в порядке входа
        """
        systems: Sequence = list(systems)
        if self.workers > 1 and len(systems) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(lambda pair: self.solve(*pair, tol=tol), systems))
        else:
            results = [self.solve(matrix, rhs, tol=tol) for matrix, rhs in systems]
        self.last_reports = [report for _, report in results]
        return [x for x, _ in results]
