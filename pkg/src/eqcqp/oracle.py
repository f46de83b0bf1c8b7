"""Independent verification machinery.

``enumerate_kkt`` finds every first-order KKT multiplier of a decoupled
problem, not just the one in the second-order region, so the solver's answer
can be checked against the minimum objective over all candidates.  For the
standard and rank-deficient forms the secular function is convex on each
inter-pole interval (every rational term has positive second derivative and
the affine part none), so one golden-section minimum plus a bisection per
monotone side is exhaustive.  The indefinite form mixes convex and concave
terms; there the candidates come from the cleared-denominator polynomial and
a pole-clustered grid scan, each refined by bisection.

``sample_feasible`` draws points on the decoupled feasible set and gives a
one-sided Monte-Carlo bound on the optimum.  ``classify_validity`` applies
the absolute feasibility bar used for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import secular, transform
from .errors import EmptyFeasibleSet, ScaleGuard
from .instances import SplitMix64
from .secular import SecularSpec, SecularVariant
from .transform import Kind, QcqpInstance

_MAX_ORACLE_N = 25
_REL_TOL_B = 1e-12


@dataclass(frozen=True)
class KktCandidate:
    """One first-order KKT point of a decoupled problem."""

    lam: float
    y: np.ndarray
    objective: float
    in_second_order_region: bool


def _region_flag(spec: SecularSpec, lam: float) -> bool:
    a = spec.a
    tol = 1e-9 * max(1.0, float(np.max(np.abs(a))))
    if spec.variant is SecularVariant.STANDARD:
        return bool(lam >= -np.min(a) - tol)
    if spec.variant is SecularVariant.RANK_DEF:
        return bool(lam >= -np.min(a[: spec.r]) - tol)
    return bool(np.all(1.0 + lam * a >= -tol))


def _candidate(spec: SecularSpec, lam: float) -> KktCandidate:
    not_hard = secular.HardCaseInfo(is_hard=False, blocking_indices=(),
                                    f_limit=0.0, lambda_pinned=lam)
    y = secular.primal_from_lambda(spec, lam, not_hard)
    return KktCandidate(lam=lam, y=y,
                        objective=secular.decoupled_objective(spec, y),
                        in_second_order_region=_region_flag(spec, lam))


def _pole_clusters(values: np.ndarray, b: np.ndarray):
    """Group coordinates by pole position; returns (position, indices) pairs
    sorted by position."""
    order = np.argsort(values)
    clusters = []
    for i in order:
        pos = values[i]
        if clusters and abs(pos - clusters[-1][0]) <= 1e-9 * max(1.0, abs(clusters[-1][0])):
            clusters[-1][1].append(int(i))
        else:
            clusters.append((float(pos), [int(i)]))
    return clusters


def _hard_candidates(spec: SecularSpec, clusters, weight_of) -> list:
    """KKT points pinned at poles whose numerators all vanish."""
    b_scale = float(np.max(np.abs(spec.b))) if spec.b.size else 0.0
    tol_b = max(_REL_TOL_B * b_scale, 1e-300)
    found = []
    for pos, idx in clusters:
        if not np.all(np.abs(spec.b[idx]) <= tol_b):
            continue
        mask_b = spec.b.copy()
        mask_b[idx] = 0.0
        masked = SecularSpec(variant=spec.variant, a=spec.a, b=mask_b, c=spec.c,
                             r=spec.r, b_c=spec.b_c)
        f_limit = secular.eval_f(masked, pos)
        weight = weight_of(idx[0])
        deficit = (spec.c - f_limit) / weight
        if deficit < -1e-10 * max(1.0, abs(spec.c)):
            continue
        hard = secular.HardCaseInfo(is_hard=True, blocking_indices=tuple(idx),
                                    f_limit=f_limit, lambda_pinned=pos,
                                    block_weight=weight)
        y = secular.primal_from_lambda(masked, pos, hard)
        found.append(KktCandidate(lam=pos, y=y,
                                  objective=secular.decoupled_objective(spec, y),
                                  in_second_order_region=_region_flag(spec, pos)))
    return found


def _refine(f, lo: float, hi: float, f_lo_pos: bool, c: float) -> float:
    """Bisection on f - c over a bracket whose left sign is known."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            return mid
        positive = f(mid) - c > 0.0
        if positive == f_lo_pos:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_min(f, lo: float, hi: float, iters: int = 200):
    """Golden-section minimizer of a unimodal f on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if hi - lo <= 1e-14 * max(1.0, abs(lo) + abs(hi)):
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
    xm = 0.5 * (lo + hi)
    return xm, f(xm)


def enumerate_kkt(spec: SecularSpec, c: float | None = None) -> list:
    """Every first-order KKT multiplier of the decoupled problem, as
    candidates carrying the matching variable and objective.

    The minimum objective over the returned list is the problem's optimum.
    Guarded to desk scale (n <= 25).
    """
    if len(spec.a) > _MAX_ORACLE_N:
        raise ScaleGuard(f"enumeration is limited to n <= {_MAX_ORACLE_N}")
    if c is not None and c != spec.c:
        spec = SecularSpec(variant=spec.variant, a=spec.a, b=spec.b, c=c,
                           r=spec.r, b_c=spec.b_c)
    if spec.variant is SecularVariant.INDEFINITE:
        return _enumerate_indefinite(spec)
    return _enumerate_standard(spec)


def _enumerate_standard(spec: SecularSpec) -> list:
    c = spec.c
    a, b = spec.a, spec.b
    head = len(a) if spec.variant is SecularVariant.STANDARD else spec.r
    pole_values = -a[:head]
    clusters = _pole_clusters(pole_values, b[:head])
    candidates = _hard_candidates(
        spec,
        [(pos, idx) for pos, idx in clusters],
        weight_of=lambda i: 1.0,
    )

    b_scale = float(np.max(np.abs(b[:head]))) if head else 0.0
    tol_b = max(_REL_TOL_B * b_scale, 1e-300)
    active = [pos for pos, idx in clusters if np.any(np.abs(b[idx]) > tol_b)]

    if spec.variant is SecularVariant.RANK_DEF:
        slope = float(np.sum(np.where(spec.b_c[head:] != 0.0,
                                      spec.b_c[head:] ** 2
                                      / np.where(spec.b_c[head:] != 0.0, a[head:], 1.0), 0.0)))
    else:
        slope = 0.0

    def f(lam):
        return secular.eval_f(spec, lam)

    roots: list[float] = []
    if active:
        span = active[-1] - active[0] if len(active) > 1 else 0.0
        bound = span * 1e6 + 1e6
        edges = [active[0] - bound] + active + [active[-1] + bound]
        for k in range(len(edges) - 1):
            left, right = edges[k], edges[k + 1]
            left_is_pole = k > 0
            right_is_pole = k + 1 < len(edges) - 1
            roots.extend(_roots_in_interval(f, c, left, right, left_is_pole,
                                            right_is_pole))
    elif slope > 0.0:
        # No rational part: f is affine with negative slope, single root.
        kappa = f(0.0)
        roots.append((kappa - c) / (2.0 * slope))

    seen: list[float] = []
    for lam in sorted(roots):
        if seen and abs(lam - seen[-1]) <= 1e-9 * max(1.0, abs(lam)):
            continue
        seen.append(lam)
        candidates.append(_candidate(spec, lam))
    return sorted(candidates, key=lambda cand: cand.lam)


def _roots_in_interval(f, c, left, right, left_is_pole, right_is_pole):
    """Roots of f - c on one open interval of a per-interval-convex f.

    f tends to +inf at an active pole edge; at truncation edges it approaches
    0 (pure rational), +inf on the left / -inf on the right when an affine
    part with negative slope is present.
    """
    off = 1e-12 * max(1.0, abs(left), abs(right))
    lo = left + (off if left_is_pole else 0.0)
    hi = right - (off if right_is_pole else 0.0)
    if not lo < hi:
        return []
    lam_min, f_min = _golden_min(f, lo, hi)

    roots = []
    if f_min > c:
        return roots
    # Left side: f decreasing from the left edge down to the minimum.
    f_lo = f(lo)
    if left_is_pole:
        while not f_lo > c:
            off *= 0.5
            nxt = left + off
            if off <= 1e-300 or nxt == left or nxt == lo:
                break
            lo = nxt
            f_lo = f(lo)
    if f_lo > c >= f_min and lo < lam_min:
        roots.append(_refine(f, lo, lam_min, True, c))
    elif abs(f_min - c) <= 1e-12 * max(1.0, abs(c)):
        roots.append(lam_min)
    # Right side: f increasing from the minimum up to the right edge.
    f_hi = f(hi)
    if right_is_pole:
        off2 = 1e-12 * max(1.0, abs(right))
        while not f_hi > c:
            off2 *= 0.5
            nxt = right - off2
            if off2 <= 1e-300 or nxt == right or nxt == hi:
                break
            hi = nxt
            f_hi = f(hi)
    if f_hi > c >= f_min and lam_min < hi:
        roots.append(_refine(lambda t: -f(t), lam_min, hi, True, -c))
    return roots


def _enumerate_indefinite(spec: SecularSpec) -> list:
    c = spec.c
    a, b = spec.a, spec.b
    finite = a != 0.0
    pole_values = np.where(finite, -1.0 / np.where(finite, a, 1.0), np.inf)
    clusters = _pole_clusters(pole_values[finite], b[finite])
    index_map = np.flatnonzero(finite)
    clusters = [(pos, [int(index_map[i]) for i in idx]) for pos, idx in clusters]
    candidates = _hard_candidates(spec, clusters, weight_of=lambda i: float(a[i]))

    b_scale = float(np.max(np.abs(b))) if b.size else 0.0
    tol_b = max(_REL_TOL_B * b_scale, 1e-300)
    active = [pos for pos, idx in clusters if np.any(np.abs(b[idx]) > tol_b)]

    def f(lam):
        return secular.eval_f(spec, lam)

    brackets = _indefinite_brackets(spec, f, c, active)
    roots: list[float] = []
    for lo, hi, f_lo in brackets:
        roots.append(_refine(f, lo, hi, f_lo - c > 0.0, c))
    seen: list[float] = []
    for lam in sorted(roots):
        if seen and abs(lam - seen[-1]) <= 1e-9 * max(1.0, abs(lam)):
            continue
        seen.append(lam)
        candidates.append(_candidate(spec, lam))
    return sorted(candidates, key=lambda cand: cand.lam)


def _indefinite_brackets(spec: SecularSpec, f, c: float, active: list):
    """Sign-change brackets of f - c for the indefinite secular function,
    from a pole-clustered grid merged with cleared-denominator poly roots."""
    a, b = spec.a, spec.b
    if not active:
        return []
    span = active[-1] - active[0] if len(active) > 1 else 0.0
    bound = span * 1e6 + 1e6
    edges = [active[0] - bound] + active + [active[-1] + bound]

    points: list[float] = []
    for k in range(len(edges) - 1):
        left, right = edges[k], edges[k + 1]
        interior = np.linspace(left, right, 512)[1:-1]
        points.extend(interior.tolist())
        scale = max(1.0, abs(left), abs(right))
        offsets = scale * np.logspace(-13.0, math.log10(max((right - left) * 0.49 / scale, 1e-13)), 40)
        if k > 0:
            points.extend((left + offsets).tolist())
        if k + 1 < len(edges) - 1:
            points.extend((right - offsets).tolist())
    points.extend(_poly_root_guesses(spec, c))

    grid = np.unique(np.asarray(points, dtype=float))
    pole_arr = np.asarray(active)
    dist = np.min(np.abs(grid[:, None] - pole_arr[None, :]), axis=1)
    grid = grid[dist > 1e-300]
    values = np.array([f(t) for t in grid])
    good = np.isfinite(values)
    grid, values = grid[good], values[good]
    sign = values - c > 0.0
    flips = np.flatnonzero(sign[:-1] != sign[1:])
    brackets = []
    for i in flips:
        lo, hi = grid[i], grid[i + 1]
        if np.any((pole_arr > lo) & (pole_arr < hi)):
            continue  # sign flip across a pole, not a root
        brackets.append((float(lo), float(hi), float(values[i])))
    return brackets


def _poly_root_guesses(spec: SecularSpec, c: float) -> list:
    """Real roots of the polynomial obtained by clearing the denominators of
    f - c; used as extra grid points so near-tangent roots are not missed."""
    a, b = spec.a, spec.b
    clusters = {}
    for ai, bi in zip(a, b):
        if ai == 0.0 or bi == 0.0:
            continue
        key = round(float(ai), 12)
        clusters[key] = clusters.get(key, 0.0) + ai * bi * bi
    alphas = [k for k, w in clusters.items() if w != 0.0]
    weights = [clusters[k] for k in alphas]
    if not alphas:
        return []
    full = np.array([1.0])
    factors = []
    for alpha in alphas:
        lin = np.array([1.0, alpha])
        sq = npoly.polymul(lin, lin)
        factors.append(sq)
        full = npoly.polymul(full, sq)
    poly = npoly.polymul(full, np.array([-c]))
    for weight, sq in zip(weights, factors):
        partial = np.array([weight])
        for other in factors:
            if other is sq:
                continue
            partial = npoly.polymul(partial, other)
        poly = npoly.polyadd(poly, partial)
    if np.max(np.abs(poly)) == 0.0:
        return []
    try:
        roots = npoly.polyroots(poly)
    except np.linalg.LinAlgError:  # pragma: no cover
        return []
    guesses = []
    for root in roots:
        if abs(root.imag) <= 1e-6 * (1.0 + abs(root.real)):
            base = float(root.real)
            step = 1e-7 * (1.0 + abs(base))
            guesses.extend([base - step, base + step])
    return guesses


def decoupled_spec(instance: QcqpInstance):
    """The secular spec and objective offset a solve of ``instance`` works on.

    Returns (spec, const).  The matrix kind aggregates its columns into the
    standard form; the augmented kind is reduced first.
    """
    if instance.kind is Kind.AUGMENTED:
        reduced, _ = transform.reduce_linear(instance)
        return decoupled_spec(reduced)
    if instance.kind is Kind.STANDARD:
        dp = transform.decouple(instance, transform.simdiag_pd(instance.A0, instance.A1))
        return SecularSpec(variant=SecularVariant.STANDARD, a=dp.a, b=dp.b, c=dp.c), dp.const
    if instance.kind is Kind.MATRIX_COMPLEX:
        dp = transform.decouple(instance, transform.simdiag_pd(instance.A0, instance.A1))
        b_agg = np.sqrt(np.sum(np.abs(dp.b) ** 2, axis=1))
        return SecularSpec(variant=SecularVariant.STANDARD, a=dp.a, b=b_agg, c=dp.c), dp.const
    if instance.kind is Kind.RANK_DEFICIENT:
        dp = transform.decouple(instance, transform.simdiag_psd(instance.A0, instance.A1))
        return SecularSpec(variant=SecularVariant.RANK_DEF, a=dp.a, b=dp.b, c=dp.c,
                           r=dp.r, b_c=dp.b_c), dp.const
    dp = transform.decouple(instance, transform.simdiag_indefinite(instance.A0, instance.A1))
    return SecularSpec(variant=SecularVariant.INDEFINITE, a=dp.a, b=dp.b, c=dp.c), dp.const


def oracle_minimum(instance: QcqpInstance) -> float:
    """Global optimum by exhaustive KKT enumeration, in original coordinates.

    Desk-scale only (ScaleGuard beyond n = 25); the dedicated per-kind tests
    cover the degenerate branches the enumeration does not reach.
    """
    spec, const = decoupled_spec(instance)
    if spec.variant is SecularVariant.STANDARD and spec.c <= 1e-12 * max(1.0, abs(spec.c)):
        return const  # single feasible point y = 0
    candidates = enumerate_kkt(spec)
    if not candidates:
        raise EmptyFeasibleSet("no KKT candidate found")
    return min(cand.objective for cand in candidates) + const


def sample_feasible(instance: QcqpInstance, count: int, seed: int) -> float:
    """Minimum original-coordinates objective over ``count`` points drawn on
    the feasible set; a one-sided check that the solver is not above the
    optimum."""
    rng = SplitMix64(seed)
    if instance.kind is Kind.AUGMENTED:
        reduced, _ = transform.reduce_linear(instance)
        return sample_feasible(reduced, count, seed)

    if instance.kind is Kind.MATRIX_COMPLEX:
        sd = transform.simdiag_pd(instance.A0, instance.A1)
        dp = transform.decouple(instance, sd)
        _check_radius(dp.c)
        n1, n2 = dp.b.shape
        if dp.c == 0.0:
            return instance.objective(transform.recover_x(np.zeros((n1, n2), complex), dp))
        best = math.inf
        for _ in range(count):
            z = (rng.normal((n1, n2)) + 1j * rng.normal((n1, n2)))
            z *= math.sqrt(dp.c) / np.linalg.norm(z)
            best = min(best, instance.objective(transform.recover_x(z, dp)))
        return best

    if instance.kind is Kind.STANDARD:
        sd = transform.simdiag_pd(instance.A0, instance.A1)
        dp = transform.decouple(instance, sd)
        _check_radius(dp.c)
        if dp.c <= 0.0:
            return instance.objective(transform.recover_x(np.zeros(instance.n), dp))
        ys = rng.normal((count, instance.n))
        ys *= math.sqrt(dp.c) / np.linalg.norm(ys, axis=1, keepdims=True)
        return _best_objective(instance, dp, ys)

    if instance.kind is Kind.RANK_DEFICIENT:
        sd = transform.simdiag_psd(instance.A0, instance.A1)
        dp = transform.decouple(instance, sd)
        r, n = sd.r, instance.n
        b_c = dp.b_c[r:]
        scale = math.sqrt(max(1.0, abs(dp.c)))
        tails = rng.normal((count, n - r)) * scale
        rho = dp.c - 2.0 * tails @ b_c
        keep = rho >= 0.0
        if not np.any(keep) and dp.c < 0.0 and np.all(b_c == 0.0):
            raise EmptyFeasibleSet("squared head norm cannot equal a negative value")
        tails, rho = tails[keep], rho[keep]
        heads = rng.normal((len(rho), r))
        heads *= (np.sqrt(rho) / np.linalg.norm(heads, axis=1))[:, None]
        ys = np.hstack([heads, tails])
        return _best_objective(instance, dp, ys)

    sd = transform.simdiag_indefinite(instance.A0, instance.A1)
    dp = transform.decouple(instance, sd)
    best = math.inf
    if dp.c == 0.0:
        return instance.objective(transform.recover_x(np.zeros(instance.n), dp))
    us = rng.normal((count, instance.n))
    us /= np.linalg.norm(us, axis=1, keepdims=True)
    s = (us * us) @ dp.a
    ok = (np.sign(s) == np.sign(dp.c)) & (np.abs(s) > 1e-6 * np.max(np.abs(dp.a)))
    if not np.any(ok):
        raise EmptyFeasibleSet("no feasible sample found on the quadric")
    ys = us[ok] * np.sqrt(dp.c / s[ok])[:, None]
    return _best_objective(instance, dp, ys)


def _check_radius(c: float) -> None:
    if c < -1e-12 * max(1.0, abs(c)):
        raise EmptyFeasibleSet("decoupled radius is negative")


def _best_objective(instance: QcqpInstance, dp, ys: np.ndarray) -> float:
    best = math.inf
    for y in ys:
        best = min(best, instance.objective(transform.recover_x(y, dp)))
    return best


def classify_validity(solution, instance: QcqpInstance | None = None,
                      threshold: float = 1e-5) -> bool:
    """Absolute feasibility bar on the reported constraint residual."""
    residual = solution.constraint_residual
    return bool(np.isfinite(residual) and residual <= threshold)
