"""Sheets of the projection ``C_z -> C*, y -> y1``.

Over a regular ``y1`` the fiber is

    y_i = e_i sqrt(y1^2 - (z1 - z_i)/y1)   (i = 2..n-1)
    y_n = e_n sqrt(y1^2 - z1/y1)

with principal square roots. Sheets are indexed by the sign vector
``(e_2, ..., e_n)`` in lexicographic order with ``+`` before ``-``, so a
``-`` in position ``k`` contributes bit ``2^(n-2-k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .arrangement import SpaceTag, as_point, membership, require

CUBE_ROOT_Z1 = "cube_root_z1"
CUBE_ROOT_DIFF = "cube_root_diff"
ZERO = "zero"
INFINITY = "infinity"


class BranchProximityError(ValueError):
    """Requested fiber is too close to a branch value for the sheets to separate."""


@dataclass(frozen=True)
class BranchValue:
    """Critical value of the y1-projection; ``value`` is None at infinity.

    ``index`` is the 1-based coordinate whose square root vanishes there
    (``n`` for cube roots of z1, ``i`` for cube roots of ``z1 - z_i``).
    """

    kind: str
    value: complex | None
    index: int | None = None
    root_index: int | None = None

    @property
    def finite(self) -> bool:
        return self.value is not None

    @property
    def label(self) -> str:
        if self.kind == CUBE_ROOT_Z1:
            return f"cbrt(z1)#{self.root_index}"
        if self.kind == CUBE_ROOT_DIFF:
            return f"cbrt(z1-z{self.index})#{self.root_index}"
        return self.kind


@dataclass(frozen=True)
class FiberPoint:
    y: np.ndarray
    sheet: tuple[int, ...]
    base_y1: complex


@dataclass(frozen=True)
class RamificationPoint:
    """Limit point over a finite branch value; ``signs`` has 0 where the coordinate vanishes."""

    y: np.ndarray
    signs: tuple[int, ...]


def cube_roots(w: complex) -> list[complex]:
    r = abs(w) ** (1 / 3)
    theta = np.angle(w)
    return [r * np.exp(1j * (theta + 2 * np.pi * k) / 3) for k in range(3)]


def branch_values(z) -> list[BranchValue]:
    """Cube roots of z1, then of ``z1 - z_i`` for ``i = 2..n-1``, then 0 and infinity."""
    z = require(SpaceTag.Z, z)
    n = z.size + 1
    out = [BranchValue(CUBE_ROOT_Z1, complex(a), n, k) for k, a in enumerate(cube_roots(z[0]))]
    for i in range(2, n):
        out += [BranchValue(CUBE_ROOT_DIFF, complex(a), i, k)
                for k, a in enumerate(cube_roots(z[0] - z[i - 1]))]
    out.append(BranchValue(ZERO, 0j))
    out.append(BranchValue(INFINITY, None))
    return out


def finite_values(bvs) -> np.ndarray:
    """Values of every finite branch value, including 0."""
    return np.array([b.value for b in bvs if b.finite], dtype=np.complex128)


def min_branch_distance(bvs) -> float:
    """Smallest pairwise distance among the finite branch values and 0."""
    vals = finite_values(bvs)
    return float(min(abs(a - b) for a, b in combinations(vals, 2)))


def proximity_radius(bvs, factor: float = 0.05) -> float:
    return factor * min_branch_distance(bvs)


def sign_vectors(n: int) -> np.ndarray:
    """All ``2^(n-1)`` sign vectors in canonical sheet order."""
    return np.array(list(product((1, -1), repeat=n - 1)), dtype=np.int8)


def sheet_index(signs) -> int:
    idx = 0
    for s in signs:
        idx = 2 * idx + (1 if s < 0 else 0)
    return idx


def squared_coords(z: np.ndarray, y1: complex) -> np.ndarray:
    """``(y_2^2, ..., y_n^2)`` as functions of ``y1`` on the fiber over ``z``."""
    return np.concatenate([y1**2 - (z[0] - z[1:]) / y1, [y1**2 - z[0] / y1]])


def fiber_array(z, y1: complex) -> np.ndarray:
    """Canonical fiber as a ``(2^(n-1), n)`` array of points ``(y1, ..., yn)``."""
    z = as_point(z)
    n = z.size + 1
    roots = np.sqrt(squared_coords(z, complex(y1)))
    pts = np.empty((2 ** (n - 1), n), dtype=np.complex128)
    pts[:, 0] = y1
    pts[:, 1:] = sign_vectors(n) * roots
    return pts


def fiber_at(z, y1: complex, tau: float | None = None) -> list[FiberPoint]:
    """The ``2^(n-1)`` points over ``y1`` in canonical sheet order.

    ``tau`` defaults to the proximity radius of ``z``'s branch values.
    """
    z = require(SpaceTag.Z, z)
    y1 = complex(y1)
    bvs = branch_values(z)
    if tau is None:
        tau = proximity_radius(bvs)
    dist = np.min(np.abs(finite_values(bvs) - y1))
    if dist <= tau:
        raise BranchProximityError(f"y1={y1} is within {tau:.3g} of a branch value")
    pts = fiber_array(z, y1)
    signs = sign_vectors(z.size + 1)
    return [FiberPoint(p, tuple(int(s) for s in sg), y1) for p, sg in zip(pts, signs)]


def base_point(z) -> complex:
    """Base point ``R e^{i theta}`` far outside every finite branch value.

    ``R = 2 (1 + max |branch value|)``; ``theta`` is the midpoint of the
    widest angular gap between branch-value arguments.
    """
    bvs = branch_values(z)
    vals = np.array([b.value for b in bvs if b.finite and b.kind != ZERO])
    R = 2 * (1 + float(np.max(np.abs(vals))))
    args = np.sort(np.mod(np.angle(vals), 2 * np.pi))
    gaps = np.diff(np.concatenate([args, [args[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    theta = args[k] + gaps[k] / 2
    return complex(R * np.exp(1j * theta))


def ramification_points(z, a: BranchValue) -> list[RamificationPoint]:
    """The ``2^(n-2)`` limit points over a finite nonzero branch value."""
    z = as_point(z)
    n = z.size + 1
    if not a.finite or a.kind == ZERO:
        raise ValueError("ramification points are only defined over cube-root branch values")
    vanishing = a.index - 2  # position in (y_2..y_n)
    sq = squared_coords(z, a.value)
    roots = np.sqrt(sq)
    roots[vanishing] = 0
    out = []
    for partial in product((1, -1), repeat=n - 2):
        signs = list(partial)
        signs.insert(vanishing, 0)
        y = np.concatenate([[a.value], np.asarray(signs) * roots])
        out.append(RamificationPoint(y, tuple(signs)))
    return out


def in_boundary_stratum(y: np.ndarray, tol: float = 1e-9) -> bool:
    """Y-membership restricted to the nonvanishing coordinates of ``y``."""
    keep = [k for k in range(y.size) if k == 0 or abs(y[k]) > tol]
    return membership(SpaceTag.Y, y[keep], tol)


def sheet_signs(n: int, index: int) -> tuple[int, ...]:
    bits = format(index, f"0{n - 1}b")
    return tuple(-1 if b == "1" else 1 for b in bits)


def angle_key(value: complex, base: complex) -> float:
    """Argument of ``value - base`` measured from the direction ``-base``."""
    return float(np.angle((value - base) / (-base)))

