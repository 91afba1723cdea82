"""
Геометрия единичной сферы S².

Сетка широта-долгота со смещением от полюсов, квадратура, проекция на
касательную плоскость, центральные разностные операторы (градиент,
дивергенция, Лаплас-Бельтрами) и конечно-объемные блоки для неявного шага.
"""
import logging
from functools import cached_property
from typing import Any

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi


def fejer_weights(n: int) -> np.ndarray:
    """
    Веса первого правила Фейера на узлах x_i = cos((i + 1/2)π/n).

    Аргументы:
        n: Количество узлов

    Возвращает:
        Веса, интегрирующие многочлены степени < n на [-1, 1] точно
    """
    theta = (np.arange(n) + 0.5) * np.pi / n
    j = np.arange(1, n // 2 + 1)
    series = np.cos(2.0 * np.outer(theta, j)) / (4.0 * j * j - 1.0)
    return (2.0 / n) * (1.0 - 2.0 * series.sum(axis=1))


class SphereGrid:
    """
    Сетка на S²: θ_i = (i + 1/2)π/n_θ, φ_k = 2πk/n_φ.

    Узлы упорядочены по θ, индекс узла равен i*n_phi + k.
    """

    def __init__(self, n_theta: int, n_phi: int):
        """
        Инициализация сетки.

        Аргументы:
            n_theta: Число узлов по полярному углу
            n_phi: Число узлов по азимуту (четное)

        Вызывает:
            ValueError: Если размеры недопустимы
        """
        if n_theta < 2:
            raise ValueError(f"n_theta должно быть >= 2, получено {n_theta}")
        if n_phi < 4 or n_phi % 2:
            raise ValueError(f"n_phi должно быть четным и >= 4, получено {n_phi}")

        self.n_theta = int(n_theta)
        self.n_phi = int(n_phi)
        self.d_theta = np.pi / self.n_theta
        self.d_phi = 2.0 * np.pi / self.n_phi
        self.theta = (np.arange(self.n_theta) + 0.5) * self.d_theta
        self.phi = np.arange(self.n_phi) * self.d_phi

        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        self._theta_flat = th.ravel()
        self._phi_flat = ph.ravel()
        st, ct = np.sin(self._theta_flat), np.cos(self._theta_flat)
        sf, cf = np.sin(self._phi_flat), np.cos(self._phi_flat)

        self.nodes = np.stack([st * cf, st * sf, ct], axis=-1)
        self.e_theta = np.stack([ct * cf, ct * sf, -st], axis=-1)
        self.e_phi = np.stack([-sf, cf, np.zeros_like(sf)], axis=-1)
        self.sin_theta = st

        self.weights = np.repeat(fejer_weights(self.n_theta), self.n_phi) * self.d_phi
        upper = np.cos(self.theta - 0.5 * self.d_theta)
        lower = np.cos(self.theta + 0.5 * self.d_theta)
        self.cell_areas = np.repeat(upper - lower, self.n_phi) * self.d_phi

        logger.debug(
            f"Сетка на сфере {self.n_theta}x{self.n_phi}: сумма весов {self.weights.sum():.15f}"
        )

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi

    def index(self, i: int, k: int) -> int:
        return i * self.n_phi + (k % self.n_phi)

    def integrate(self, values: Any, axis: int = 0) -> np.ndarray:
        """Квадратура ∫_{S²} f dη вдоль указанной оси."""
        values = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
        return values @ self.weights

    # Центральные разности

    @cached_property
    def _d_theta(self) -> sp.csr_matrix:
        # за полюсом узел (i, k) продолжается узлом (i, k + n_phi/2)
        nt, nf = self.n_theta, self.n_phi
        half = nf // 2
        rows, cols, vals = [], [], []
        scale = 0.5 / self.d_theta
        for i in range(nt):
            for k in range(nf):
                row = self.index(i, k)
                up = self.index(i + 1, k) if i + 1 < nt else self.index(nt - 1, k + half)
                down = self.index(i - 1, k) if i > 0 else self.index(0, k + half)
                rows += [row, row]
                cols += [up, down]
                vals += [scale, -scale]
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))

    @cached_property
    def _d_phi(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        scale = 0.5 / self.d_phi
        for i in range(self.n_theta):
            for k in range(self.n_phi):
                row = self.index(i, k)
                rows += [row, row]
                cols += [self.index(i, k + 1), self.index(i, k - 1)]
                vals += [scale, -scale]
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))

    @cached_property
    def gradient_operators(self) -> tuple:
        """
        Три разреженные матрицы G_c: (∇_η f)_c = G_c f.

        Возвращает:
            Кортеж (G_x, G_y, G_z)
        """
        inv_sin = 1.0 / self.sin_theta
        ops = []
        for c in range(3):
            ops.append(
                (sp.diags(self.e_theta[:, c]) @ self._d_theta
                 + sp.diags(self.e_phi[:, c] * inv_sin) @ self._d_phi).tocsr()
            )
        return tuple(ops)

    @cached_property
    def laplace_beltrami(self) -> sp.csr_matrix:
        """Центральный оператор Лапласа-Бельтрами Σ_c G_c G_c."""
        g = self.gradient_operators
        return (g[0] @ g[0] + g[1] @ g[1] + g[2] @ g[2]).tocsr()

    # Конечные объемы

    @cached_property
    def fv_laplacian(self) -> sp.csr_matrix:
        """
        Двухточечный конечно-объемный оператор Лапласа-Бельтрами.

        Матрица diag(cell_areas) @ L симметрична, отрицательно полуопределена
        и имеет нулевые суммы строк.
        """
        nt, nf = self.n_theta, self.n_phi
        rows, cols, vals = [], [], []
        theta_faces = (np.arange(1, nt)) * self.d_theta
        for i in range(nt):
            for k in range(nf):
                me = self.index(i, k)
                couplings = []
                if i + 1 < nt:
                    couplings.append((self.index(i + 1, k), np.sin(theta_faces[i]) * self.d_phi / self.d_theta))
                if i > 0:
                    couplings.append((self.index(i - 1, k), np.sin(theta_faces[i - 1]) * self.d_phi / self.d_theta))
                c_phi = self.d_theta / (np.sin(self.theta[i]) * self.d_phi)
                couplings.append((self.index(i, k + 1), c_phi))
                couplings.append((self.index(i, k - 1), c_phi))
                for other, coef in couplings:
                    rows += [me, me]
                    cols += [other, me]
                    vals += [coef, -coef]
        stiffness = sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))
        return (sp.diags(1.0 / self.cell_areas) @ stiffness).tocsr()

    def fv_drift(self, grad_u: Any) -> sp.csr_matrix:
        """
        Конечно-объемная дискретизация ∇_η·(P_{η⊥}(M η) f) с противопотоковым донором.

        Аргументы:
            grad_u: Матрица M = ∇_y u размера 3x3

        Возвращает:
            Разреженную матрицу; diag(cell_areas) @ D имеет нулевые суммы столбцов
        """
        m = np.asarray(grad_u, dtype=float)
        left, right, points, normals, lengths = self._faces
        # flux > 0 переносит из left в right
        flux = np.einsum("fa,fa->f", projected_drift(m, points), normals) * lengths
        donor = np.where(flux > 0.0, left, right)
        rows = np.concatenate([left, right])
        cols = np.concatenate([donor, donor])
        vals = np.concatenate([flux / self.cell_areas[left], -flux / self.cell_areas[right]])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))

    @cached_property
    def _incidence(self) -> sp.csr_matrix:
        left, right, _, _, _ = self._faces
        faces = np.arange(left.size)
        rows = np.concatenate([left, right])
        cols = np.concatenate([faces, faces])
        vals = np.concatenate([1.0 / self.cell_areas[left], -1.0 / self.cell_areas[right]])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.size, left.size))

    def drift_divergence(self, grad_u: Any) -> np.ndarray:
        """
        Дискретная дивергенция дрейфа по ячейкам, то есть fv_drift(M) @ 1.

        Аргументы:
            grad_u: Матрицы M формы (..., 3, 3)

        Возвращает:
            Массив формы (..., n_eta)
        """
        m = np.asarray(grad_u, dtype=float)
        _, _, points, normals, lengths = self._faces
        z = np.einsum("...ab,fb->...fa", m, points)
        flux = np.einsum("...fa,fa->...f", project_tangent(z, points), normals) * lengths
        flat = flux.reshape(-1, lengths.size)
        return (self._incidence @ flat.T).T.reshape(m.shape[:-2] + (self.size,))

    @cached_property
    def _faces(self) -> tuple:
        """Грани ячеек: (left, right, точка на грани, нормаль, длина)."""
        nt, nf = self.n_theta, self.n_phi
        i, k = np.meshgrid(np.arange(nt), np.arange(nf), indexing="ij")

        # грани по θ между кольцами i и i+1
        ti, tk = i[:-1].ravel(), k[:-1].ravel()
        th = (ti + 1) * self.d_theta
        ph = self.phi[tk]
        t_points = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
        t_normals = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1)
        t_lengths = np.sin(th) * self.d_phi

        # грани по φ между k и k+1
        pi_, pk = i.ravel(), k.ravel()
        th = self.theta[pi_]
        ph = self.phi[pk] + 0.5 * self.d_phi
        p_points = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
        p_normals = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=-1)
        p_lengths = np.full(pi_.size, self.d_theta)

        left = np.concatenate([ti * nf + tk, pi_ * nf + pk])
        right = np.concatenate([(ti + 1) * nf + tk, pi_ * nf + (pk + 1) % nf])
        return (
            left,
            right,
            np.concatenate([t_points, p_points]),
            np.concatenate([t_normals, p_normals]),
            np.concatenate([t_lengths, p_lengths]),
        )


def project_tangent(z: Any, eta: Any) -> np.ndarray:
    """
    Проекция P_{η⊥} z = z - (z·η)η на касательную плоскость в η.

    Аргументы:
        z: Вектор(ы) формы (..., 3)
        eta: Единичные вектор(ы) формы (..., 3)

    Возвращает:
        Касательный вектор той же формы
    """
    z = np.asarray(z, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return z - np.sum(z * eta, axis=-1, keepdims=True) * eta


def projected_drift(grad_u: Any, eta: Any) -> np.ndarray:
    """Дрейф ориентации P_{η⊥}(∇_y u η)."""
    grad_u = np.asarray(grad_u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return project_tangent(np.einsum("...ab,...b->...a", grad_u, eta), eta)


def divergence_of_projected_drift(grad_u: Any, eta: Any) -> np.ndarray:
    """
    Замкнутая форма ∇_η·P_{η⊥}(Mη) = tr(M) - 3 η·Mη.

    Форма не зависит от выбора сферического базиса и корректна на полюсах.
    """
    m = np.asarray(grad_u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.trace(m, axis1=-2, axis2=-1) - 3.0 * np.einsum("...a,...ab,...b->...", eta, m, eta)


def surface_gradient(field: Any, grid: SphereGrid) -> np.ndarray:
    """
    Касательный градиент скалярного поля.

    Аргументы:
        field: Значения формы (n_eta,) или (n_eta, ...)
        grid: Сетка на сфере

    Возвращает:
        Массив формы (n_eta, ..., 3)
    """
    field = np.asarray(field, dtype=float)
    flat = field.reshape(grid.size, -1)
    comps = [op @ flat for op in grid.gradient_operators]
    return np.stack(comps, axis=-1).reshape(field.shape + (3,))


def surface_divergence(vfield: Any, grid: SphereGrid) -> np.ndarray:
    """
    Дивергенция касательного поля: Σ_c e_c·∇_η F_c.

    Аргументы:
        vfield: Массив формы (n_eta, ..., 3)
        grid: Сетка на сфере

    Возвращает:
        Массив формы (n_eta, ...)
    """
    vfield = np.asarray(vfield, dtype=float)
    shape = vfield.shape[:-1]
    flat = vfield.reshape(grid.size, -1, 3)
    total = sum(op @ flat[:, :, c] for c, op in enumerate(grid.gradient_operators))
    return total.reshape(shape)


def laplace_beltrami(field: Any, grid: SphereGrid) -> np.ndarray:
    """Центральный оператор Лапласа-Бельтрами ∇_η·∇_η f."""
    field = np.asarray(field, dtype=float)
    return (grid.laplace_beltrami @ field.reshape(grid.size, -1)).reshape(field.shape)
