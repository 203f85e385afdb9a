"""Verification suites behind the command-line front end.

Each suite returns a :class:`Suite` holding one dict per case. Cases carry
plain Python values (complex numbers included); formatting for JSON or CSV
happens in :mod:`fiberscope.cli`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import arrangement as arr
from . import polysys as ps
from .monodromy import MonodromyError, TrackerConfig, TrackingError, cycles, fibration_report

GAP_MIN = 1e6
FD_TOL = 1e-4


@dataclass
class Suite:
    name: str
    cases: list = field(default_factory=list)
    seconds: float = 0.0
    reports: list = field(default_factory=list)  # MonodromyReport objects, fibration only

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.cases)

    def add(self, name: str, ok: bool, **detail) -> bool:
        self.cases.append({"name": name, "pass": bool(ok), **detail})
        return ok


@dataclass(frozen=True)
class Tolerances:
    mem: float = arr.TAU_MEM
    res: float = ps.TAU_RES
    rank: float = ps.TAU_RANK


def _rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([seed, *keys])


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        suite = fn(*args, **kwargs)
        suite.seconds = time.perf_counter() - t0
        return suite
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# --- fibration -------------------------------------------------------------


def _cycle_notation(p) -> str:
    cs = cycles(p)
    return "".join("(" + " ".join(map(str, c)) + ")" for c in cs) or "()"


@_timed
def fibration_suite(runs, cfg: TrackerConfig = TrackerConfig(), check_halving: bool = True,
                    check_detour: bool = False) -> Suite:
    """Genus, punctures, connectivity and monodromy checks for each ``(n, z)``."""
    suite = Suite("fibration")
    for n, z in runs:
        try:
            rep = fibration_report(z, cfg, check_halving=check_halving, check_detour=check_detour)
        except (TrackingError, MonodromyError) as exc:
            suite.add(f"n={n}", False, n=n, z=list(z), error=str(exc))
            continue
        suite.add(
            f"n={n}", rep.passed, n=n, z=list(rep.z), degree=rep.degree,
            genus=rep.genus_numeric, genus_formula=rep.genus_formula,
            punctures=rep.punctures_numeric, punctures_formula=rep.punctures_formula,
            orbit_count=rep.orbit_count, max_residual=rep.max_residual,
            infinity_agrees=rep.infinity_agrees, product_relation=rep.product_relation,
            sign_flips=rep.sign_flips, halving_agrees=rep.halving_agrees,
            detour_agrees=rep.detour_agrees, steps=rep.steps, rejections=rep.rejections,
            base_point=rep.base_point,
            profiles=[{"branch": p.branch.label, "value": p.branch.value,
                       "cycle_type": list(p.cycle_type)} for p in rep.profiles],
            permutations={b.label: _cycle_notation(p) for b, p in rep.generators},
        )
        suite.reports.append(rep)
    return suite


# --- jacobians -------------------------------------------------------------


def _m1_case(suite: Suite, name: str, n: int, ys, tol: Tolerances) -> None:
    sys = ps.AffineSystem(n, arr.canonical_z(n))  # M1 depends only on y
    ranks, rel_min, gaps = [], np.inf, np.inf
    for y in ys:
        m = ps.jacobian_M1(sys, y)
        s = ps.singular_values(m)
        ranks.append(ps.numeric_rank(m, tol.rank))
        rel_min = min(rel_min, float(s[-1] / s[0]))
        gaps = min(gaps, ps.rank_gap(m, tol.rank))
    bad = sum(r != n - 1 for r in ranks)
    suite.add(name, bad == 0 and gaps >= GAP_MIN, n=n, samples=len(ranks), rank_failures=bad,
              expected_rank=n - 1, min_relative_singular_value=rel_min, min_gap=gaps)


def _fd_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    return float(np.max(np.abs(analytic - numeric)) / max(1.0, float(np.max(np.abs(analytic)))))


@_timed
def jacobian_suite(ns, zs_by_n, seed: int = 0, samples: int = 1000, tol: Tolerances = Tolerances(),
                   fd_samples: int = 20) -> Suite:
    """Rank of M1 on generic and degenerate points, chart kernels at the boundary,
    and finite-difference guards on every hand-assembled Jacobian."""
    suite = Suite("jacobians")
    for n in ns:
        rng = _rng(seed, n, 1)
        _m1_case(suite, "M1 generic", n, [arr.random_y(rng, n) for _ in range(samples)], tol)
        _m1_case(suite, "M1 y_n=0", n,
                 [arr.random_y(rng, n, zero_at=n - 1) for _ in range(samples)], tol)
        for i0 in range(2, n):
            _m1_case(suite, f"M1 y_{i0}=0", n,
                     [arr.random_y(rng, n, zero_at=i0 - 1) for _ in range(samples)], tol)

        fd_err = 0.0
        for _ in range(fd_samples):
            y = arr.random_y(rng, n)
            z = arr.random_z(rng, n)
            sys = ps.AffineSystem(n, z)
            fd_err = max(fd_err, _fd_error(ps.jacobian_M1(sys, y), ps.fd_jacobian(arr.f_values, y)))
            x = arr._annulus(rng, n)
            v = np.concatenate([x, z])
            fd_err = max(fd_err, _fd_error(ps.jacobian_chart(sys, x),
                                           ps.fd_jacobian(lambda w: ps.chart_system_vars(sys, w), v)))
            for squared_constants in (False, True):
                fd_err = max(fd_err, _fd_error(
                    ps.jacobian_B2(sys, x, squared_constants),
                    ps.fd_jacobian(lambda w: ps.b2_system_vars(sys, w, squared_constants), v)))
        suite.add("finite-difference guard", fd_err <= FD_TOL, n=n, max_relative_error=fd_err,
                  tolerance=FD_TOL)

        for z in zs_by_n[n]:
            sys = ps.AffineSystem(n, z)
            points = ps.enumerate_boundary(sys)
            chart_dims, b2_dims, proj_ok, closed_ok, gap = [], [], True, True, np.inf
            for p in points:
                J = ps.jacobian_chart(sys, p.chart)
                chart_dims.append(ps.kernel_dim(J, tol.rank))
                gap = min(gap, ps.rank_gap(J, tol.rank))
                proj_ok &= ps.kernel_projection_rank(J, n, tol.rank) == n - 1
                basis = ps.chart_kernel_closed_form(sys, p)
                closed_ok &= bool(np.max(np.abs(J @ basis)) <= 1e-12 * max(1.0, np.max(np.abs(J))))
                closed_ok &= ps.numeric_rank(basis, tol.rank) == n
                if p.kind == "B2":
                    for squared_constants in (False, True):
                        JB = ps.jacobian_B2(sys, p.chart, squared_constants)
                        b2_dims.append(ps.kernel_dim(JB, tol.rank))
                        gap = min(gap, ps.rank_gap(JB, tol.rank))
                        proj_ok &= ps.kernel_projection_rank(JB, n, tol.rank) == n - 1
                        kb = ps.b2_kernel_closed_form(sys, p.chart, squared_constants)
                        closed_ok &= bool(np.max(np.abs(JB @ kb)) <= 1e-12 * max(1.0, np.max(np.abs(JB))))
                        closed_ok &= ps.numeric_rank(kb, tol.rank) == n - 1
            ok = (all(d == n for d in chart_dims) and all(d == n - 1 for d in b2_dims)
                  and proj_ok and closed_ok and gap >= GAP_MIN)
            suite.add("boundary kernels", ok, n=n, z=list(z), boundary_points=len(points),
                      chart_kernel_dims=sorted(set(chart_dims)), b2_kernel_dims=sorted(set(b2_dims)),
                      expected=[n, n - 1], projection_surjective=bool(proj_ok),
                      closed_forms=bool(closed_ok), min_gap=gap)
    return suite


# --- determinant -----------------------------------------------------------


def _structured_draws(rng: np.random.Generator, n: int, draws: int):
    shape = lambda k: (draws, k)
    a = rng.normal(size=shape(n - 2)) + 1j * rng.normal(size=shape(n - 2))
    b = rng.normal(size=shape(n - 1)) + 1j * rng.normal(size=shape(n - 1))
    c = rng.normal(size=shape(n - 1)) + 1j * rng.normal(size=shape(n - 1))
    # degenerate draws: a zero diagonal entry, or proportional first column and last column
    k = draws // 20
    if k:
        a[np.arange(k), rng.integers(0, n - 2, k)] = 0
        lam = rng.normal(size=k) + 1j * rng.normal(size=k)
        c[k:2 * k] = lam[:, None] * b[k:2 * k]
    return a, b, c


@_timed
def determinant_suite(seed: int = 0, draws: int = 10_000, ns=range(4, 13)) -> Suite:
    """Closed-form minor determinant against elimination, every ``n`` and column."""
    suite = Suite("determinant")
    fixed = ps.StructuredMatrix(4, [5, 7], [1, 3, 6], [2, 4, 8])
    closed, brute = ps.structured_det(fixed, 2), ps.det_oracle(fixed.minor(2))
    suite.add("fixed example n=4 i=2", abs(closed - 14) < 1e-12 and abs(brute - 14) < 1e-12,
              closed_form=closed, oracle=brute, expected=14)
    for n in ns:
        rng = _rng(seed, n, 2)
        a, b, c = _structured_draws(rng, n, draws)
        for i in range(2, n):
            mats = np.zeros((draws, n - 1, n), dtype=np.complex128)
            mats[:, :, 0] = b
            mats[:, :, -1] = c
            for k in range(1, n - 1):
                mats[:, k, k] = a[:, k - 1]
            oracle = ps.det_oracle(np.delete(mats, i - 1, axis=2))
            rest = np.delete(a, i - 2, axis=1)
            sign = -1 if (n + i - 1) % 2 else 1
            cross = b[:, 0] * c[:, i - 1] - c[:, 0] * b[:, i - 1]
            formula = sign * np.prod(rest, axis=1) * cross
            scale = np.prod(np.abs(rest), axis=1) * (np.abs(b[:, 0] * c[:, i - 1]) + np.abs(c[:, 0] * b[:, i - 1]))
            scale = np.maximum(scale, np.abs(oracle))
            rel = np.abs(formula - oracle) / np.where(scale > 0, scale, 1)
            # spot-check the scalar entry point on the first draw
            sm = ps.StructuredMatrix(n, a[0], b[0], c[0])
            agree = abs(ps.structured_det(sm, i) - formula[0]) <= 1e-12 * max(1.0, abs(formula[0]))
            suite.add(f"n={n} i={i}", float(rel.max()) <= 1e-9 and agree, n=n, i=i, draws=draws,
                      max_relative_error=float(rel.max()))
    return suite


# --- map chain and boundary ------------------------------------------------


def _annulus_avoiding(rng, size, holes, radius=0.05):
    out = []
    while len(out) < size:
        a = complex(arr._annulus(rng, 1, 0.1, 3.0)[0])
        if all(abs(a - h) > radius for h in holes):
            out.append(a)
    return out


def _violating_m(rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.uniform(-2, 2, n) + 1j * rng.uniform(-0.3, 0.3, n)
    kind = rng.integers(0, 3)
    k = int(rng.integers(0, n))
    j = int((k + 1 + rng.integers(0, n - 1)) % n)
    m = int(rng.integers(-3, 4))
    if kind == 0:
        u[k] = m
    elif kind == 1:
        u[j] = m - u[k]
    else:
        u[j] = u[k] - m
    return u


@_timed
def maps_suite(ns, seed: int = 0, samples: int = 10_000, tol: Tolerances = Tolerances()) -> Suite:
    """Round trips of the Moebius and cone maps, and membership transport of exp."""
    suite = Suite("maps")
    rng = _rng(seed, 3)
    alphas = _annulus_avoiding(rng, samples, (0, 1))
    err, near = 0.0, np.inf
    for a in alphas:
        w = arr.moebius(a)
        near = min(near, abs(w - 1), abs(w + 1))
        err = max(err, abs(arr.moebius(w, "inverse") - a) / max(1.0, abs(a)))
    suite.add("moebius round trip", err <= 1e-12 and near > tol.mem, samples=samples,
              max_error=err, min_distance_to_pm1=near)

    per_n = max(1, samples // len(ns))
    for n in ns:
        rng = _rng(seed, n, 3)
        err, members = 0.0, 0
        nmem, nerr = 0, 0.0
        for _ in range(per_n):
            w = arr.random_p(rng, n - 1)
            lam = complex(arr._annulus(rng, 1)[0])
            y = arr.cone_map(w, lam)
            members += arr.membership(arr.SpaceTag.Y, y, tol.mem)
            w2, lam2 = arr.cone_map(y, direction="inverse")
            err = max(err, float(np.max(np.abs(w2 - w))), abs(lam2 - lam))
            yy = arr.random_y(rng, n)
            back = arr.cone_map(*arr.cone_map(yy, direction="inverse"))
            err = max(err, float(np.max(np.abs(back - yy))))
            v = arr.exp_cover(arr.random_m(rng, n - 1))
            if arr.membership(arr.SpaceTag.N, v, tol.mem):
                nmem += arr.membership(arr.SpaceTag.P, arr.moebius_point(v), tol.mem)
                nerr = max(nerr, float(np.max(np.abs(arr.moebius_point(arr.moebius_point(v), "inverse") - v))))
        suite.add("cone bijection", err <= 1e-12 and members == per_n, n=n, samples=per_n,
                  max_error=err, images_in_Y=members)
        suite.add("moebius N->P", nmem == per_n and nerr <= 1e-12, n=n, samples=per_n,
                  images_in_P=nmem, max_error=nerr)

        agree, inside = 0, 0
        for k in range(per_n):
            u = arr.random_m(rng, n) if k % 2 == 0 else _violating_m(rng, n)
            in_m = arr.membership(arr.SpaceTag.M_BTILDE, u, tol.mem)
            in_n = arr.membership(arr.SpaceTag.N, arr.exp_cover(u), tol.mem)
            agree += in_m == in_n
            inside += in_m
        suite.add("exp membership transport", agree == per_n, n=n, samples=per_n,
                  agreements=agree, samples_in_M=inside)
    return suite


@_timed
def boundary_suite(ns, zs_by_n, seed: int = 0, tol: Tolerances = Tolerances(),
                   eps: float = 1e-2, halvings: int = 6, infinity_samples: int = 1000) -> Suite:
    """Boundary enumeration, chart residuals, approach paths and the ``y0 = yn = 0`` exclusion."""
    suite = Suite("boundary")
    for n in ns:
        for z in zs_by_n[n]:
            sys = ps.AffineSystem(n, z)
            pts = ps.enumerate_boundary(sys)
            n1 = sum(p.kind == "B1" for p in pts)
            n2 = sum(p.kind == "B2" for p in pts)
            res = max(float(np.max(np.abs(ps.eval_chart(sys, p.chart)))) for p in pts)
            suite.add("enumeration", n1 == 2 ** (n - 1) and n2 == 2 ** (n - 2) and res <= 1e-12,
                      n=n, z=list(z), b1=n1, b2=n2, max_residual=res)

            ts = eps * 0.5 ** np.arange(halvings + 1)
            path_res, affine_res, ratios, series = 0.0, 0.0, [], 0.0
            for p in pts:
                xs, _ = ps.approach(sys, p, ts, eps)
                dists = []
                for t, x in zip(ts, xs):
                    path_res = max(path_res, float(np.max(np.abs(ps.eval_chart(sys, x)))))
                    y = ps.chart_to_affine(x)
                    affine_res = max(affine_res, float(np.max(np.abs(ps.eval_S(sys, y))))
                                     / ps.residual_scale(sys, y))
                    dists.append(float(np.max(np.abs(x - p.chart))))
                    approx = -z[0] * t**3 if p.kind == "B2" else p.chart[1] + z[0] * t**3 / 2
                    series = max(series, abs(x[1] - approx) / (abs(z[0]) ** 2 * t**6 + 1e-15))
                ratios += [d0 / d1 for d0, d1 in zip(dists, dists[1:])]
            ok = (path_res <= tol.res and affine_res <= tol.res
                  and all(1.5 <= r <= 2.5 for r in ratios) and series <= 1.0)
            suite.add("approach paths", ok, n=n, z=list(z), max_chart_residual=path_res,
                      max_affine_residual=affine_res, halving_ratio_min=min(ratios),
                      halving_ratio_max=max(ratios), series_error_over_t6=series)

        rng = _rng(seed, n, 4)
        z = zs_by_n[n][0]
        sys = ps.AffineSystem(n, z)
        smallest = np.inf
        for _ in range(infinity_samples):
            yh = np.concatenate([[0], arr._annulus(rng, n - 1), [0]])
            val = float(np.max(np.abs(ps.eval_projective(sys, yh)))) / float(np.max(np.abs(yh))) ** 3
            smallest = min(smallest, val)
        suite.add("no point with y0 = yn = 0", smallest > 1e-6, n=n, samples=infinity_samples,
                  min_scaled_residual=smallest)
    return suite

