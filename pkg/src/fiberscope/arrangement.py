"""Arrangement complements M, N, P, Y, Z and the maps linking them.

All points are 1-D ``complex128`` arrays. Membership predicates are
tolerance-gated: a defining inequation ``a != b`` holds when
``|a - b| > tol * scale`` with ``scale = max(1, max |coord|)``.
"""

from __future__ import annotations

import enum
from itertools import combinations

import numpy as np

TAU_MEM = 1e-9


class SpaceTag(enum.Enum):
    M_BTILDE = "M_Btilde"
    N = "N"
    P = "P"
    Y = "Y"
    Z = "Z"


class DimensionError(ValueError):
    pass


class MembershipError(ValueError):
    pass


def as_point(coords) -> np.ndarray:
    p = np.atleast_1d(np.asarray(coords, dtype=np.complex128))
    if p.ndim != 1:
        raise DimensionError(f"expected a 1-D point, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite entries")
    return p


def _scale(p: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(p)))) if p.size else 1.0


def _dist_to_integers(w: complex) -> float:
    return abs(complex(w.real - round(w.real), w.imag))


def margin(tag: SpaceTag, p) -> float:
    """Smallest violation distance of the inequations defining ``tag``.

    The value is unscaled; ``membership`` compares it against
    ``tol * scale``.
    """
    p = as_point(p)
    d = p.size
    gaps: list[float] = []
    if tag is SpaceTag.M_BTILDE:
        for i, j in combinations(range(d), 2):
            gaps.append(_dist_to_integers(p[i] + p[j]))
            gaps.append(_dist_to_integers(p[i] - p[j]))
        gaps.extend(_dist_to_integers(u) for u in p)
    elif tag is SpaceTag.N:
        gaps.extend(abs(v) for v in p)
        gaps.extend(abs(v - 1) for v in p)
        if min(gaps) == 0.0:
            return 0.0
        for i, j in combinations(range(d), 2):
            gaps.append(abs(p[i] - p[j]))
            # v_i = 1/v_j  <=>  v_i v_j = 1; normalise by |v_j| to measure in v_i
            gaps.append(abs(p[i] - 1 / p[j]))
            gaps.append(abs(p[j] - 1 / p[i]))
    elif tag is SpaceTag.P:
        for i, j in combinations(range(d), 2):
            gaps.append(abs(p[i] - p[j]))
            gaps.append(abs(p[i] + p[j]))
        gaps.extend(abs(w - 1) for w in p)
        gaps.extend(abs(w + 1) for w in p)
    elif tag is SpaceTag.Y:
        gaps.append(abs(p[0]))
        for i, j in combinations(range(d), 2):
            gaps.append(abs(p[i] - p[j]))
            gaps.append(abs(p[i] + p[j]))
    elif tag is SpaceTag.Z:
        gaps.extend(abs(v) for v in p)
        for i, j in combinations(range(d), 2):
            gaps.append(abs(p[i] - p[j]))
    else:  # pragma: no cover
        raise ValueError(tag)
    return float(min(gaps)) if gaps else float("inf")


def membership(tag: SpaceTag, p, tol: float = TAU_MEM, n: int | None = None) -> bool:
    """Return True iff ``p`` lies in the space ``tag`` with margin above ``tol``.

    If ``n`` is given, the dimension of ``p`` is checked against it: ``n``
    coordinates for M, N, P and Y, ``n - 1`` for Z.
    """
    p = as_point(p)
    if p.size == 0:
        raise DimensionError("empty point")
    if n is not None:
        expected = n - 1 if tag is SpaceTag.Z else n
        if p.size != expected:
            raise DimensionError(f"{tag.value} expects dimension {expected}, got {p.size}")
    return margin(tag, p) > tol * _scale(p)


def require(tag: SpaceTag, p, tol: float = TAU_MEM) -> np.ndarray:
    p = as_point(p)
    if not membership(tag, p, tol):
        raise MembershipError(f"point is not in {tag.value}: {p}")
    return p


def f_values(y) -> np.ndarray:
    """Raw values of f without any membership gating."""
    y = np.asarray(y, dtype=np.complex128)
    y1, yn = y[0], y[-1]
    return y1 * (y[:-1] ** 2 - yn**2)


def map_f(y, tol: float = TAU_MEM) -> np.ndarray:
    """The fibration ``f: Y -> Z``, ``y -> (y1 (y_i^2 - y_n^2))_{i<n}``."""
    y = as_point(y)
    if y.size < 2:
        raise DimensionError("f needs n >= 2 coordinates")
    require(SpaceTag.Y, y, tol)
    z = f_values(y)
    if not membership(SpaceTag.Z, z, tol):
        raise MembershipError(f"f(y) = {z} is not in Z; y is outside Y or too close to it")
    return z


def moebius(alpha: complex, direction: str = "forward") -> complex:
    """``a -> (a + 1)/(a - 1)``, a bijection C-{0,1} -> C-{1,-1}.

    The formula is an involution, so ``inverse`` uses it too; only the
    domain checks differ.
    """
    alpha = complex(alpha)
    if direction == "forward":
        if alpha == 1:
            raise ZeroDivisionError("moebius pole at 1")
        if alpha == 0:
            raise ValueError("0 is outside the domain C - {0, 1}")
    elif direction == "inverse":
        if alpha == 1:
            raise ZeroDivisionError("inverse moebius pole at 1")
        if alpha == -1:
            raise ValueError("-1 is outside the domain C - {1, -1}")
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return (alpha + 1) / (alpha - 1)


def moebius_point(v, direction: str = "forward") -> np.ndarray:
    """Componentwise Moebius map, the homeomorphism ``N -> P`` (or back)."""
    return np.array([moebius(a, direction) for a in as_point(v)])


def cone_map(w, lam: complex | None = None, direction: str = "forward"):
    """Homeomorphism ``P x C* -> Y_{n+1}``, ``(w, lam) -> (lam, lam w)``.

    ``direction="inverse"`` takes ``y`` in Y (as ``w``) and returns
    ``(w, lam)``.
    """
    if direction == "forward":
        w = as_point(w)
        if lam is None or lam == 0:
            raise ValueError("lambda must be nonzero")
        lam = complex(lam)
        return np.concatenate([[lam], lam * w])
    if direction == "inverse":
        y = as_point(w)
        if y[0] == 0:
            raise ValueError("y1 = 0 has no preimage")
        return y[1:] / y[0], complex(y[0])
    raise ValueError(f"unknown direction {direction!r}")


def exp_cover(u) -> np.ndarray:
    """Covering ``M -> N`` induced by ``u -> exp(2 pi i u)``."""
    return np.exp(2j * np.pi * as_point(u))


# --- seeded sampling -------------------------------------------------------


def _annulus(rng: np.random.Generator, size, rmin: float = 0.5, rmax: float = 2.0) -> np.ndarray:
    # uniform in area
    r = np.sqrt(rng.uniform(rmin**2, rmax**2, size))
    theta = rng.uniform(0.0, 2 * np.pi, size)
    return r * np.exp(1j * theta)


def _min_separation(p: np.ndarray, signed: bool) -> float:
    seps = [abs(p[i] - p[j]) for i, j in combinations(range(p.size), 2)]
    if signed:
        seps += [abs(p[i] + p[j]) for i, j in combinations(range(p.size), 2)]
    return min(seps) if seps else float("inf")


def random_y(rng: np.random.Generator, n: int, sep: float = 0.05, zero_at: int | None = None) -> np.ndarray:
    """Rejection-sample a point of Y, optionally with coordinate ``zero_at`` forced to 0.

    ``zero_at`` is a 0-based index in ``1..n-1`` (y1 may not vanish).
    """
    if zero_at == 0:
        raise ValueError("y1 cannot be zero in Y")
    while True:
        y = _annulus(rng, n)
        if zero_at is not None:
            y[zero_at] = 0.0
        if _min_separation(y, signed=True) >= sep:
            return y


def random_z(rng: np.random.Generator, n: int, sep: float = 0.1) -> np.ndarray:
    """Rejection-sample a point of Z in dimension ``n - 1``."""
    while True:
        z = _annulus(rng, n - 1)
        if _min_separation(z, signed=False) >= sep:
            return z


def random_p(rng: np.random.Generator, n: int, sep: float = 0.05) -> np.ndarray:
    while True:
        w = _annulus(rng, n)
        if _min_separation(w, signed=True) >= sep and margin(SpaceTag.P, w) >= sep:
            return w


def random_m(rng: np.random.Generator, n: int, sep: float = 0.01) -> np.ndarray:
    """Sample a point of M (real parts in [-2, 2], imaginary parts in [-0.3, 0.3])."""
    while True:
        u = rng.uniform(-2, 2, n) + 1j * rng.uniform(-0.3, 0.3, n)
        if margin(SpaceTag.M_BTILDE, u) >= sep:
            return u


def canonical_z(n: int) -> np.ndarray:
    """The reference base point ``z_i = i``."""
    return np.arange(1, n, dtype=np.complex128)
