"""Numerical monodromy of the y1-projection of ``C_z`` and the genus count.

Loops in the y1-plane are lassos from a common base point. Each loop is
lifted by predictor-corrector continuation of all sheets at once; the
sheet permutation is read off by matching the end fiber against the
canonical fiber at the base point.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .arrangement import SpaceTag, as_point, require
from .fiber import (
    CUBE_ROOT_DIFF,
    CUBE_ROOT_Z1,
    INFINITY,
    ZERO,
    BranchValue,
    angle_key,
    base_point,
    branch_values,
    fiber_array,
    finite_values,
    min_branch_distance,
    sign_vectors,
    sheet_index,
)

Permutation = tuple[int, ...]


class TrackingError(RuntimeError):
    pass


class MonodromyError(RuntimeError):
    pass


# --- paths -----------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    a: complex
    b: complex

    @property
    def length(self) -> float:
        return abs(self.b - self.a)

    @property
    def start(self) -> complex:
        return self.a

    @property
    def end(self) -> complex:
        return self.b

    def point(self, s: float) -> complex:
        return self.a + (self.b - self.a) * (s / self.length)

    def reversed(self) -> "Line":
        return Line(self.b, self.a)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta0: float
    sweep: float  # signed; positive is counterclockwise

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    @property
    def start(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta0)

    @property
    def end(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * (self.theta0 + self.sweep))

    def point(self, s: float) -> complex:
        return self.center + self.radius * cmath.exp(1j * (self.theta0 + self.sweep * s / self.length))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta0 + self.sweep, -self.sweep)


@dataclass(frozen=True)
class PlanePath:
    segments: tuple

    @property
    def start(self) -> complex:
        return self.segments[0].start

    @property
    def end(self) -> complex:
        return self.segments[-1].end

    @property
    def length(self) -> float:
        return sum(seg.length for seg in self.segments)

    def reversed(self) -> "PlanePath":
        return PlanePath(tuple(seg.reversed() for seg in reversed(self.segments)))

    def sample(self, ds: float) -> np.ndarray:
        pts = [self.start]
        for seg in self.segments:
            k = max(2, int(math.ceil(seg.length / ds)))
            pts.extend(seg.point(seg.length * j / k) for j in range(1, k + 1))
        return np.asarray(pts)


def winding_number(path: PlanePath, w: complex, ds: float | None = None) -> int:
    """Discrete winding number of a closed path around ``w``."""
    if ds is None:
        ds = path.length / 20000
    pts = path.sample(ds) - w
    turn = np.angle(pts[1:] / pts[:-1]).sum()
    return int(round(turn / (2 * np.pi)))


def _detoured_line(a: complex, b: complex, obstacles, rho: float, detour: str) -> list:
    """Segment ``a -> b`` with an arc of radius ``rho`` around each obstacle it passes near.

    ``detour="minor"`` takes the shorter arc, ``"major"`` the other side.
    """
    length = abs(b - a)
    d = (b - a) / length
    hits = []
    for w in obstacles:
        rel = (w - a) / d
        s, h = rel.real, rel.imag
        if abs(h) < rho and -rho < s < length + rho:
            c = math.sqrt(rho**2 - h**2)
            hits.append((s, h, c, w))
    hits.sort(key=lambda t: t[0])
    segs: list = []
    cur = a
    for s, h, c, w in hits:
        p_in = a + d * (s - c)
        p_out = a + d * (s + c)
        segs.append(Line(cur, p_in))
        th_in = cmath.phase(p_in - w)
        th_out = cmath.phase(p_out - w)
        ccw = h >= 0
        if detour == "major":
            ccw = not ccw
        if ccw:
            sweep = (th_out - th_in) % (2 * math.pi)
        else:
            sweep = -((th_in - th_out) % (2 * math.pi))
        segs.append(Arc(w, rho, th_in, sweep))
        cur = p_out
    segs.append(Line(cur, b))
    return [seg for seg in segs if seg.length > 0]


@dataclass(frozen=True)
class TrackerConfig:
    initial_step: float | None = None  # None: circle radius / 16
    min_step: float = 1e-10
    newton_tol: float = 1e-13
    max_newton: int = 8
    match_ratio: float = 10.0
    prox_factor: float = 0.05
    circle_factor: float = 0.3
    step_cap: float = 0.25  # step <= step_cap * distance to nearest branch value
    res_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        for name in ("min_step", "newton_tol", "max_newton", "match_ratio",
                     "prox_factor", "circle_factor", "step_cap", "res_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.initial_step is not None and not self.initial_step > self.min_step:
            raise ValueError("initial_step must exceed min_step")

    def step_for(self, dmin: float) -> float:
        if self.initial_step is not None:
            return self.initial_step
        return self.circle_factor * dmin / 16


def build_loop(z, target: BranchValue, base: complex, cfg: TrackerConfig = TrackerConfig(),
               detour: str = "minor") -> PlanePath:
    """Lasso from ``base``: approach ``target``, circle it counterclockwise, return."""
    z = as_point(z)
    if not target.finite:
        raise ValueError("use big_circle for the point at infinity")
    bvs = branch_values(z)
    vals = finite_values(bvs)
    dmin = min_branch_distance(bvs)
    rho = cfg.prox_factor * dmin
    if np.min(np.abs(vals - base)) <= rho:
        raise ValueError("base point too close to a branch value")
    if target.kind == ZERO:
        r = 0.5 * float(np.min(np.abs(vals[vals != 0])))
    else:
        r = cfg.circle_factor * dmin
    a = target.value
    u = (base - a) / abs(base - a)
    q = a + r * u
    others = [w for w in vals if w != a]
    approach = _detoured_line(base, q, others, rho, detour)
    circle = Arc(a, r, cmath.phase(q - a), 2 * math.pi)
    back = [seg.reversed() for seg in reversed(approach)]
    return PlanePath(tuple(approach + [circle] + back))


def big_circle(z, base: complex) -> PlanePath:
    """Radial segment to ``2|base|``, a full counterclockwise circle, and back."""
    R = abs(base)
    theta = cmath.phase(base)
    out = cmath.rect(2 * R, theta)
    seg = Line(base, out)
    return PlanePath((seg, Arc(0j, 2 * R, theta, 2 * math.pi), seg.reversed()))


# --- tracking --------------------------------------------------------------


@dataclass
class TrackStats:
    steps: int = 0
    rejections: int = 0
    newton_iterations: int = 0
    max_residual: float = 0.0

    def merge(self, other: "TrackStats") -> None:
        self.steps += other.steps
        self.rejections += other.rejections
        self.newton_iterations += other.newton_iterations
        self.max_residual = max(self.max_residual, other.max_residual)


def _system(z: np.ndarray, y1: complex, Y: np.ndarray):
    """Residual, Jacobian and y1-derivative of the fiber system at fixed ``y1``.

    Unknowns are ``y_2..y_n`` (columns of ``Y``); equations are
    ``y_i^2 - y_n^2 - z_i/y1`` (i = 2..n-1) and ``y_n^2 - y1^2 + z_1/y1``.
    """
    S, m = Y.shape
    yn = Y[:, -1]
    F = np.empty_like(Y)
    F[:, :-1] = Y[:, :-1] ** 2 - (yn**2)[:, None] - z[1:] / y1
    F[:, -1] = yn**2 - y1**2 + z[0] / y1
    J = np.zeros((S, m, m), dtype=np.complex128)
    idx = np.arange(m)
    J[:, idx, idx] = 2 * Y
    J[:, :-1, -1] = -2 * yn[:, None]
    dF = np.empty(m, dtype=np.complex128)
    dF[:-1] = z[1:] / y1**2
    dF[-1] = -2 * y1 - z[0] / y1**2
    return F, J, dF


def _solve(J: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.solve(J, b[..., None])[..., 0]


def fiber_residual(z: np.ndarray, y1: complex, Y: np.ndarray) -> float:
    """Largest scaled ``eval_S`` residual over the tracked sheets."""
    yn2 = Y[:, -1] ** 2
    ysq = np.column_stack([np.full(Y.shape[0], y1**2), Y[:, :-1] ** 2])
    res = np.abs(z - y1 * (ysq - yn2[:, None]))
    big = max(abs(y1), float(np.max(np.abs(Y))))
    scale = max(1.0, float(np.max(np.abs(z))), abs(y1) * big**2)
    return float(np.max(res)) / scale


def track(z, path: PlanePath, start: np.ndarray, cfg: TrackerConfig = TrackerConfig(),
          stats: TrackStats | None = None, label: str = "path") -> tuple[np.ndarray, Permutation]:
    """Continue the fiber ``start`` (canonical order) along ``path``.

    Returns the end fiber and the permutation ``perm`` with
    ``perm[i] = j`` when sheet ``i`` arrives on canonical sheet ``j``.
    """
    z = as_point(z)
    if stats is None:
        stats = TrackStats()
    bvs = branch_values(z)
    vals = finite_values(bvs)
    dmin = min_branch_distance(bvs)
    start = np.asarray(start, dtype=np.complex128)
    y1 = complex(path.start)
    if not np.allclose(start[:, 0], y1):
        raise ValueError("start fiber does not lie over the path start")
    Y = start[:, 1:].copy()
    h = cfg.step_for(dmin)
    streak = 0
    for k, seg in enumerate(path.segments):
        L = seg.length
        s = 0.0
        while L - s > 1e-14 * max(1.0, L):
            cap = cfg.step_cap * float(np.min(np.abs(vals - y1)))
            hh = min(h, cap, L - s)
            s_new = s + hh
            y1_new = seg.end if s_new >= L else seg.point(s_new)
            _, J, dF = _system(z, y1, Y)
            tangent = -_solve(J, np.broadcast_to(dF, Y.shape))
            pred = Y + tangent * (y1_new - y1)
            Ynew = pred
            ok = False
            for it in range(cfg.max_newton):
                F, J, _ = _system(z, y1_new, Ynew)
                delta = _solve(J, F)
                Ynew = Ynew - delta
                stats.newton_iterations += 1
                if not np.all(np.isfinite(Ynew)):
                    break
                if np.max(np.abs(delta)) <= cfg.newton_tol * max(1.0, float(np.max(np.abs(Ynew)))):
                    ok = True
                    break
            if ok:
                # a sign jump would move some coordinate by about twice its size
                ok = bool(np.all(np.abs(Ynew - pred) <= 0.25 * np.abs(Ynew)))
            if ok:
                Y, y1, s = Ynew, y1_new, s_new
                stats.steps += 1
                res = fiber_residual(z, y1, Y)
                stats.max_residual = max(stats.max_residual, res)
                if res > cfg.res_tol:
                    raise TrackingError(f"{label}: residual {res:.3g} above gate on segment {k}")
                streak += 1
                if streak >= 3:
                    h = 2 * hh
                    streak = 0
            else:
                stats.rejections += 1
                streak = 0
                h = hh / 2
                if h < cfg.min_step:
                    raise TrackingError(
                        f"{label}: step fell below {cfg.min_step:g} on segment {k} at y1={y1:.6g}")
    if abs(path.end - path.start) <= 1e-12 * max(1.0, abs(path.start)):
        # closed loop: reuse the start labels so round-off at the end point
        # cannot land on the other side of a square-root branch cut
        y1 = complex(path.start)
        canonical = start[:, 1:]
    else:
        canonical = fiber_array(z, y1)[:, 1:]
    perm = match_sheets(Y, canonical, cfg.match_ratio, label)
    end = np.column_stack([np.full(Y.shape[0], y1), Y])
    return end, perm


def match_sheets(Y: np.ndarray, canonical: np.ndarray, ratio: float = 10.0,
                 label: str = "path") -> Permutation:
    """Assign each tracked point to the canonical point at least ``ratio`` times closer
    than any other."""
    D = np.linalg.norm(Y[:, None, :] - canonical[None, :, :], axis=2)
    perm = []
    for i, row in enumerate(D):
        order = np.argsort(row)
        first, second = row[order[0]], row[order[1]]
        if not second >= ratio * first:
            raise TrackingError(f"{label}: ambiguous sheet match for sheet {i}")
        perm.append(int(order[0]))
    if len(set(perm)) != len(perm):
        raise TrackingError(f"{label}: sheet matching is not a bijection")
    return tuple(perm)


# --- permutations ----------------------------------------------------------


def compose(p: Permutation, q: Permutation) -> Permutation:
    """``p`` then ``q``: the permutation of the concatenated loop."""
    return tuple(q[i] for i in p)


def inverse(p: Permutation) -> Permutation:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def identity(size: int) -> Permutation:
    return tuple(range(size))


def cycle_type(p: Permutation) -> tuple[int, ...]:
    seen = [False] * len(p)
    lengths = []
    for i in range(len(p)):
        if seen[i]:
            continue
        k, j = 0, i
        while not seen[j]:
            seen[j] = True
            j = p[j]
            k += 1
        lengths.append(k)
    return tuple(sorted(lengths, reverse=True))


def cycles(p: Permutation) -> list[tuple[int, ...]]:
    seen = set()
    out = []
    for i in range(len(p)):
        if i in seen:
            continue
        c, j = [], i
        while j not in seen:
            seen.add(j)
            c.append(j)
            j = p[j]
        if len(c) > 1:
            out.append(tuple(c))
    return out


def flip_permutation(n: int, positions: Sequence[int]) -> Permutation:
    """Sheet permutation negating the signs at 0-based ``positions`` of ``(e_2..e_n)``."""
    signs = sign_vectors(n).astype(int)
    signs[:, list(positions)] *= -1
    return tuple(sheet_index(s) for s in signs)


class UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        x, y = self.find(x), self.find(y)
        if x == y:
            return
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        elif self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        self.parent[y] = x

    def count(self) -> int:
        return len({self.find(x) for x in range(len(self.parent))})


def orbit_count(perms: Sequence[Permutation]) -> int:
    """Number of orbits of the group generated by ``perms``."""
    if not perms:
        raise ValueError("need at least one permutation")
    uf = UnionFind(len(perms[0]))
    for p in perms:
        for i, j in enumerate(p):
            uf.union(i, j)
    return uf.count()


# --- Riemann-Hurwitz -------------------------------------------------------


@dataclass(frozen=True)
class RamificationProfile:
    branch: BranchValue
    cycle_type: tuple[int, ...]


def riemann_hurwitz(profiles: Sequence[RamificationProfile], degree: int) -> tuple[int, int]:
    """Genus of the compactified cover and the number of points over 0 and infinity."""
    for prof in profiles:
        if sum(prof.cycle_type) != degree:
            raise ValueError(f"cycle type of {prof.branch.label} does not sum to {degree}")
    ramification = sum(e - 1 for prof in profiles for e in prof.cycle_type)
    twice_g = 2 - 2 * degree + ramification
    if twice_g % 2 or twice_g < 0:
        raise MonodromyError(f"Riemann-Hurwitz gives non-integral genus {twice_g}/2")
    punctures = sum(len(prof.cycle_type) for prof in profiles
                    if prof.branch.kind in (ZERO, INFINITY))
    return twice_g // 2, punctures


def genus_formula(n: int) -> int:
    return (3 * n - 6) * 2 ** (n - 3) + 1


def punctures_formula(n: int) -> int:
    return 3 * 2 ** (n - 2)


# --- generators and report -------------------------------------------------


@dataclass
class Monodromy:
    z: np.ndarray
    base: complex
    generators: list  # (BranchValue, Permutation), finite + Zero in branch_values order
    infinity_direct: Permutation
    infinity_relation: Permutation
    order: list  # labels of finite + Zero sorted by loop argument
    stats: TrackStats

    @property
    def infinity(self) -> BranchValue:
        return BranchValue(INFINITY, None)

    def all_generators(self) -> list:
        return self.generators + [(self.infinity, self.infinity_direct)]


def monodromy_generators(z, cfg: TrackerConfig = TrackerConfig(), detour: str = "minor") -> Monodromy:
    """Loop permutations for every finite branch value and 0, plus infinity two ways."""
    z = require(SpaceTag.Z, z)
    bvs = branch_values(z)
    base = base_point(z)
    start = fiber_array(z, base)
    stats = TrackStats()
    gens = []
    for b in bvs:
        if not b.finite:
            continue
        loop = build_loop(z, b, base, cfg, detour)
        _, perm = track(z, loop, start, cfg, stats, label=f"loop {b.label}")
        gens.append((b, perm))
    _, big = track(z, big_circle(z, base), start, cfg, stats, label="big circle")
    inf_direct = inverse(big)
    ordered = sorted(gens, key=lambda g: angle_key(g[0].value, base) if g[0].kind != ZERO
                     else angle_key(0j, base))
    product = identity(len(start))
    for _, p in ordered:
        product = compose(product, p)
    inf_relation = inverse(product)
    if inf_direct != inf_relation:
        raise MonodromyError("infinity permutation from the big circle disagrees with the loop relation")
    return Monodromy(z, base, gens, inf_direct, inf_relation,
                     [b.label for b, _ in ordered], stats)


@dataclass
class MonodromyReport:
    n: int
    z: np.ndarray
    degree: int
    orbit_count: int
    genus_numeric: int
    genus_formula: int
    punctures_numeric: int
    punctures_formula: int
    profiles: list
    max_residual: float
    steps: int
    rejections: int
    base_point: complex
    generators: list
    infinity_agrees: bool
    product_relation: bool
    sign_flips: bool
    halving_agrees: bool | None = None
    detour_agrees: bool | None = None
    loop_order: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        checks = [self.genus_numeric == self.genus_formula,
                  self.punctures_numeric == self.punctures_formula,
                  self.orbit_count == 1, self.infinity_agrees, self.product_relation,
                  self.sign_flips, self.max_residual <= 1e-10]
        checks += [c for c in (self.halving_agrees, self.detour_agrees) if c is not None]
        return all(checks)


def expected_flip(n: int, b: BranchValue) -> Permutation:
    """The sign flip predicted for a positive loop around ``b``."""
    if b.kind == ZERO:
        return flip_permutation(n, range(n - 1))
    if b.kind == INFINITY:
        return identity(2 ** (n - 1))
    return flip_permutation(n, [b.index - 2])


def fibration_report(z, cfg: TrackerConfig = TrackerConfig(), check_halving: bool = True,
                     check_detour: bool = False) -> MonodromyReport:
    """Monodromy, connectivity, genus and punctures of the fiber over ``z``."""
    t0 = time.perf_counter()
    z = require(SpaceTag.Z, z)
    n = z.size + 1
    degree = 2 ** (n - 1)
    mono = monodromy_generators(z, cfg)
    gens = mono.all_generators()
    profiles = [RamificationProfile(b, cycle_type(p)) for b, p in gens]
    genus, punctures = riemann_hurwitz(profiles, degree)
    product = identity(degree)
    for label in mono.order:
        product = compose(product, dict((b.label, p) for b, p in mono.generators)[label])
    product_ok = compose(product, mono.infinity_direct) == identity(degree)
    flips_ok = all(p == expected_flip(n, b) for b, p in gens)

    halving = None
    if check_halving:
        halved = replace(cfg, initial_step=cfg.step_for(min_branch_distance(branch_values(z))) / 2)
        other = monodromy_generators(z, halved)
        halving = other.all_generators() == gens
    detour = None
    if check_detour:
        other = monodromy_generators(z, cfg, detour="major")
        detour = other.all_generators() == gens

    return MonodromyReport(
        n=n, z=z, degree=degree,
        orbit_count=orbit_count([p for _, p in gens]),
        genus_numeric=genus, genus_formula=genus_formula(n),
        punctures_numeric=punctures, punctures_formula=punctures_formula(n),
        profiles=profiles, max_residual=mono.stats.max_residual,
        steps=mono.stats.steps, rejections=mono.stats.rejections,
        base_point=mono.base, generators=gens,
        infinity_agrees=mono.infinity_direct == mono.infinity_relation,
        product_relation=product_ok, sign_flips=flips_ok,
        halving_agrees=halving, detour_agrees=detour,
        loop_order=mono.order, seconds=time.perf_counter() - t0,
    )
