"""Defining systems of the graph closure of f and their Jacobians.

Variables in the chart ``y_n != 0`` are ``x_i = y_i / y_n`` for
``i = 0..n-1`` (``y_0`` is the homogenising coordinate), followed by
``z_1..z_{n-1}``. All Jacobians are assembled from hand-derived formulas;
``fd_jacobian`` exists only to guard them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .arrangement import SpaceTag, as_point, f_values, require

TAU_RES = 1e-10
TAU_RANK = 1e-8


class BoundaryPathError(RuntimeError):
    """Newton on the boundary-approach cubic did not converge."""


@dataclass(frozen=True)
class AffineSystem:
    """The polynomials ``z_i - y1 (y_i^2 - y_n^2)`` for a fixed ``z``."""

    n: int
    z: np.ndarray

    def __post_init__(self):
        z = as_point(self.z)
        if self.n < 3:
            raise ValueError("n must be at least 3")
        if z.size != self.n - 1:
            raise ValueError(f"z must have {self.n - 1} coordinates, got {z.size}")
        object.__setattr__(self, "z", z)

    @classmethod
    def from_z(cls, z, tol: float = 1e-9) -> "AffineSystem":
        z = require(SpaceTag.Z, z, tol)
        return cls(z.size + 1, z)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        """1-based index pairs ``i < j`` of the quadrics, lexicographic."""
        return list(combinations(range(1, self.n), 2))


@dataclass(frozen=True)
class BoundaryPoint:
    kind: str  # "B1" or "B2"
    chart: np.ndarray
    z: np.ndarray
    signs: tuple[int, ...]


@dataclass(frozen=True)
class StructuredMatrix:
    """The ``(n-1) x n`` matrix with a first column ``b``, a diagonal ``a``
    in columns ``2..n-1`` (rows ``2..n-1``) and a last column ``c``."""

    n: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a, b, c = (np.asarray(v, dtype=np.complex128) for v in (self.a, self.b, self.c))
        if self.n < 3 or a.size != self.n - 2 or b.size != self.n - 1 or c.size != self.n - 1:
            raise ValueError("inconsistent StructuredMatrix lengths")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n - 1, self.n), dtype=np.complex128)
        m[:, 0] = self.b
        m[:, -1] = self.c
        for k in range(1, self.n - 1):
            m[k, k] = self.a[k - 1]
        return m

    def minor(self, i: int) -> np.ndarray:
        """The square matrix with the ``i``-th (1-based) column removed."""
        _check_column(self.n, i)
        return np.delete(self.matrix(), i - 1, axis=1)


# --- residuals -------------------------------------------------------------


def eval_S(sys: AffineSystem, y) -> np.ndarray:
    y = as_point(y)
    if y.size != sys.n:
        raise ValueError(f"y must have {sys.n} coordinates")
    return sys.z - f_values(y)


def eval_chart(sys: AffineSystem, x) -> np.ndarray:
    """Cubics ``z_i x0^3 - x1 x_i^2 + x1`` (i=1..n-1), then quadrics
    ``x_i^2 z_j - z_j - x_j^2 z_i + z_i`` for ``i < j``."""
    x = as_point(x)
    if x.size != sys.n:
        raise ValueError(f"chart point must have {sys.n} coordinates")
    z = sys.z
    xs = x[1:]  # x_1..x_{n-1}
    cubic = z * x[0] ** 3 - x[1] * xs**2 + x[1]
    quad = [xs[i - 1] ** 2 * z[j - 1] - z[j - 1] - xs[j - 1] ** 2 * z[i - 1] + z[i - 1]
            for i, j in sys.pairs]
    return np.concatenate([cubic, np.asarray(quad, dtype=np.complex128)])


def eval_projective(sys: AffineSystem, yh) -> np.ndarray:
    """``S_h`` then ``T`` at homogeneous coordinates ``(y0 : y1 : ... : yn)``."""
    yh = as_point(yh)
    if yh.size != sys.n + 1:
        raise ValueError(f"homogeneous point must have {sys.n + 1} coordinates")
    z = sys.z
    y0, y1, yn = yh[0], yh[1], yh[-1]
    sh = z * y0**3 - y1 * (yh[1:-1] ** 2 - yn**2)
    t = [(y1**2 - yn**2) * z[j - 1] - (yh[j] ** 2 - yn**2) * z[0] for j in range(2, sys.n)]
    return np.concatenate([sh, np.asarray(t, dtype=np.complex128)])


def chart_to_affine(x) -> np.ndarray:
    """Back to ``(y_1, ..., y_n)`` with ``y_0 = 1``; needs ``x0 != 0``."""
    x = as_point(x)
    if x[0] == 0:
        raise ValueError("x0 = 0 is at infinity")
    return np.concatenate([x[1:] / x[0], [1 / x[0]]])


def residual_scale(sys: AffineSystem, y) -> float:
    y = np.asarray(y)
    return max(1.0, float(np.max(np.abs(sys.z))), abs(y[0]) * float(np.max(np.abs(y))) ** 2)


# --- Jacobians -------------------------------------------------------------


def jacobian_M1(sys: AffineSystem, y) -> np.ndarray:
    """Jacobian of ``f`` at ``y``: rows ``i = 1..n-1``, columns ``y_1..y_n``."""
    y = as_point(y)
    n = sys.n
    y1, yn = y[0], y[-1]
    m = np.zeros((n - 1, n), dtype=np.complex128)
    m[:, 0] = y[:-1] ** 2 - yn**2
    m[0, 0] = 3 * y1**2 - yn**2
    for i in range(1, n - 1):
        m[i, i] = 2 * y1 * y[i]
    m[:, -1] = -2 * y1 * yn
    return m


def jacobian_chart(sys: AffineSystem, x) -> np.ndarray:
    """Jacobian of ``eval_chart`` in ``x_0..x_{n-1}, z_1..z_{n-1}``."""
    x = as_point(x)
    n, z = sys.n, sys.z
    rows = (n - 1) + len(sys.pairs)
    jac = np.zeros((rows, 2 * n - 1), dtype=np.complex128)
    zc = lambda i: n - 1 + i  # column of z_i, 1-based i
    x0, x1 = x[0], x[1]
    for i in range(1, n):
        r = i - 1
        jac[r, 0] = 3 * z[i - 1] * x0**2
        if i == 1:
            jac[r, 1] = -3 * x1**2 + 1
        else:
            jac[r, 1] = -x[i] ** 2 + 1
            jac[r, i] = -2 * x1 * x[i]
        jac[r, zc(i)] = x0**3
    for k, (i, j) in enumerate(sys.pairs):
        r = n - 1 + k
        jac[r, i] = 2 * z[j - 1] * x[i]
        jac[r, j] = -2 * z[i - 1] * x[j]
        jac[r, zc(i)] = -(x[j] ** 2 - 1)
        jac[r, zc(j)] = x[i] ** 2 - 1
    return jac


def b2_polys(sys: AffineSystem, x, squared_constants: bool = False) -> np.ndarray:
    """Polynomials cutting out B2 in the chart with ``z`` free.

    The default is ``x_i^2 z_1 - z_1 + z_i``, which vanishes on B2.
    ``squared_constants=True`` gives ``x_i^2 z_1 - z_1^2 + z_i^2``. That
    variant does not vanish on B2, but its Jacobian has the same rank there.
    """
    x = as_point(x)
    z = sys.z
    xi = x[2:]
    if squared_constants:
        rest = xi**2 * z[0] - z[0] ** 2 + z[1:] ** 2
    else:
        rest = xi**2 * z[0] - z[0] + z[1:]
    return np.concatenate([[x[0], x[1]], rest])


def jacobian_B2(sys: AffineSystem, x, squared_constants: bool = False) -> np.ndarray:
    x = as_point(x)
    n, z = sys.n, sys.z
    jac = np.zeros((n, 2 * n - 1), dtype=np.complex128)
    jac[0, 0] = 1
    jac[1, 1] = 1
    for i in range(2, n):
        r = i
        jac[r, i] = 2 * x[i] * z[0]
        if squared_constants:
            jac[r, n] = x[i] ** 2 - 2 * z[0]
            jac[r, n - 1 + i] = 2 * z[i - 1]
        else:
            jac[r, n] = x[i] ** 2 - 1
            jac[r, n - 1 + i] = 1
    return jac


def fd_jacobian(func, point, h: float = 1e-6) -> np.ndarray:
    """Central differences along real directions (valid for holomorphic ``func``)."""
    point = as_point(point)
    cols = []
    for k in range(point.size):
        e = np.zeros(point.size, dtype=np.complex128)
        e[k] = h
        cols.append((func(point + e) - func(point - e)) / (2 * h))
    return np.column_stack(cols)


def chart_system_vars(sys: AffineSystem, v) -> np.ndarray:
    """``eval_chart`` as a function of the stacked vector ``(x, z)``."""
    v = np.asarray(v)
    return eval_chart(AffineSystem(sys.n, v[sys.n:]), v[:sys.n])


def b2_system_vars(sys: AffineSystem, v, squared_constants: bool = False) -> np.ndarray:
    v = np.asarray(v)
    return b2_polys(AffineSystem(sys.n, v[sys.n:]), v[:sys.n], squared_constants)


# --- ranks -----------------------------------------------------------------


def singular_values(m) -> np.ndarray:
    return np.linalg.svd(np.asarray(m, dtype=np.complex128), compute_uv=False)


def numeric_rank(m, tol: float = TAU_RANK) -> int:
    """Count of singular values above ``tol`` times the largest one."""
    s = singular_values(m)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def kernel_dim(m, tol: float = TAU_RANK) -> int:
    return np.asarray(m).shape[1] - numeric_rank(m, tol)


def rank_gap(m, tol: float = TAU_RANK) -> float:
    """Ratio of the smallest retained to the largest discarded singular value.

    Infinite when nothing is discarded or the discarded values are exact zeros.
    """
    s = singular_values(m)
    r = numeric_rank(m, tol)
    if r == 0:
        return 0.0
    if r >= s.size or s[r] == 0:
        return float("inf")
    return float(s[r - 1] / s[r])


def null_space(m, tol: float = TAU_RANK) -> np.ndarray:
    """Orthonormal kernel basis as columns."""
    m = np.asarray(m, dtype=np.complex128)
    _, s, vh = np.linalg.svd(m)
    r = numeric_rank(m, tol)
    return vh[r:].conj().T


def kernel_projection_rank(m, first_z_col: int, tol: float = TAU_RANK) -> int:
    """Rank of the kernel projected to the coordinates from ``first_z_col`` on."""
    ker = null_space(m, tol)
    if ker.shape[1] == 0:
        return 0
    return numeric_rank(ker[first_z_col:, :], tol)


def chart_kernel_closed_form(sys: AffineSystem, p: BoundaryPoint) -> np.ndarray:
    """Kernel basis of ``jacobian_chart`` at a boundary point in the displayed form.

    B1: ``(*, 0, ..., 0, u_1, ..., u_{n-1})``.
    B2: ``(*, 0, (z_j u_1 - z_1 u_j) / (2 p_j z_1^2), u_1, ..., u_{n-1})``.
    Columns are the free parameters ``*, u_1, ..., u_{n-1}``.
    """
    n, z = sys.n, sys.z
    basis = np.zeros((2 * n - 1, n), dtype=np.complex128)
    basis[0, 0] = 1
    for k in range(1, n):
        basis[n - 1 + k, k] = 1
    if p.kind == "B2":
        x = p.chart
        for j in range(2, n):
            denom = 2 * x[j] * z[0] ** 2
            basis[j, 1] += z[j - 1] / denom
            basis[j, j] += -z[0] / denom
    return basis


def b2_kernel_closed_form(sys: AffineSystem, x, squared_constants: bool = False) -> np.ndarray:
    """Kernel basis of ``jacobian_B2`` with free ``u_1..u_{n-1}`` as columns."""
    n, z = sys.n, sys.z
    x = as_point(x)
    basis = np.zeros((2 * n - 1, n - 1), dtype=np.complex128)
    for k in range(1, n):
        basis[n - 1 + k, k - 1] = 1
    for j in range(2, n):
        if squared_constants:
            denom = 2 * x[j] * z[0]
            basis[j, 0] = (2 * z[0] - x[j] ** 2) / denom
            basis[j, j - 1] = -2 * z[j - 1] / denom
        else:
            denom = 2 * x[j] * z[0] ** 2
            basis[j, 0] = z[j - 1] / denom
            basis[j, j - 1] = -z[0] / denom
    return basis


# --- boundary --------------------------------------------------------------


def enumerate_boundary(sys: AffineSystem) -> list[BoundaryPoint]:
    """All ``2^{n-1}`` B1 points then all ``2^{n-2}`` B2 points.

    B2 coordinates are ``s_i * sqrt((z_1 - z_i)/z_1)`` with the principal root;
    sign patterns run lexicographically with ``+`` first.
    """
    n, z = sys.n, sys.z
    out = []
    for signs in product((1, -1), repeat=n - 1):
        chart = np.concatenate([[0.0], np.asarray(signs, dtype=np.complex128)])
        out.append(BoundaryPoint("B1", chart, z, signs))
    roots = np.sqrt((z[0] - z[1:]) / z[0])
    for signs in product((1, -1), repeat=n - 2):
        chart = np.concatenate([[0.0, 0.0], np.asarray(signs) * roots])
        out.append(BoundaryPoint("B2", chart.astype(np.complex128), z, signs))
    return out


def _solve_cubic_branch(z1: complex, t: float, x: complex, max_iter: int = 50) -> complex:
    target = z1 * t**3
    for _ in range(max_iter):
        h = target - x**3 + x
        dh = 1 - 3 * x**2
        if dh == 0:
            break
        step = h / dh
        x = x - step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            return x
    raise BoundaryPathError(f"cubic Newton failed at t={t}")


def boundary_path(sys: AffineSystem, p: BoundaryPoint, t: float, eps: float = 1e-2,
                  substeps: int = 8) -> np.ndarray:
    """Chart point at parameter ``t`` on the analytic arc from ``p`` into C.

    ``x0 = t``; ``x1`` solves ``z1 t^3 - x1^3 + x1 = 0`` continued from
    ``p``'s ``x1``; each ``x_i^2 = (x1^2 - 1) z_i / z_1 + 1`` continued from
    ``p``'s ``x_i``. (On the curve this equals ``z_i t^3 / x1 + 1``, but
    avoids dividing by ``x1`` near B2.)
    """
    if not 0 <= t <= eps:
        raise ValueError(f"t={t} outside [0, {eps}]")
    x = np.array(p.chart, dtype=np.complex128)
    if t == 0:
        return x
    z = sys.z
    for s in np.linspace(0, t, substeps + 1)[1:]:
        x1 = _solve_cubic_branch(z[0], s, x[1])
        sq = np.sqrt((x1**2 - 1) * z[1:] / z[0] + 1)
        prev = x[2:]
        x[2:] = np.where(np.abs(sq - prev) <= np.abs(sq + prev), sq, -sq)
        x[0], x[1] = s, x1
    return x


def approach(sys: AffineSystem, p: BoundaryPoint, ts, eps: float = 1e-2, min_eps: float = 1e-8):
    """``boundary_path`` at every ``t`` in ``ts``; ``eps`` halves on Newton failure.

    Returns ``(points, eps_used)``; parameters above the final ``eps`` are
    rescaled into it.
    """
    ts = np.asarray(ts, dtype=float)
    scale = 1.0
    while eps >= min_eps:
        try:
            return [boundary_path(sys, p, t * scale, eps) for t in ts], eps
        except BoundaryPathError:
            eps /= 2
            scale /= 2
    raise BoundaryPathError("boundary path failed for every eps tried")


# --- structured determinant ------------------------------------------------


def _check_column(n: int, i: int) -> None:
    if not 2 <= i <= n - 1:
        raise ValueError(f"column index {i} outside 2..{n - 1}")


def structured_det(m: StructuredMatrix, i: int) -> complex:
    """Closed-form determinant of ``m.minor(i)``."""
    n = m.n
    _check_column(n, i)
    a = np.delete(m.a, i - 2)
    sign = -1 if (n + i - 1) % 2 else 1
    return complex(sign * np.prod(a) * (m.b[0] * m.c[i - 1] - m.c[0] * m.b[i - 1]))


def det_oracle(m):
    """Determinant by Gaussian elimination with partial pivoting.

    Accepts one square matrix or a stack ``(batch, k, k)``; returns a
    complex scalar or an array of them.
    """
    a = np.array(m, dtype=np.complex128)
    single = a.ndim == 2
    if single:
        a = a[None]
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValueError("det_oracle needs square matrices")
    batch, size, _ = a.shape
    rows = np.arange(batch)
    det = np.ones(batch, dtype=np.complex128)
    for k in range(size):
        piv = k + np.argmax(np.abs(a[:, k:, k]), axis=1)
        swap = piv != k
        if np.any(swap):
            top = a[rows, k].copy()
            a[rows, k] = a[rows, piv]
            a[rows, piv] = top
            det[swap] = -det[swap]
        pivot = a[:, k, k]
        det *= pivot
        safe = np.where(pivot == 0, 1, pivot)
        factors = a[:, k + 1:, k] / safe[:, None]
        a[:, k + 1:, k:] -= factors[:, :, None] * a[:, None, k, k:]
    return complex(det[0]) if single else det
