"""Diffusion-driven flattening analysis and long-run PDE classification.

The core quantity is sigma = lambda1 * min(d) - M, where lambda1 is the
first nonzero Neumann Laplacian eigenvalue of the interval and M bounds the
kinetic Jacobian norm over a positively invariant region.  Positive sigma
guarantees exponential collapse of spatial gradients, after which the
dynamics follows the spatially averaged kinetics.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .model import CompetitionModel
from .pde import PdeTrajectory, Field, flatness as field_flatness, grad_l2_norm, spatial_average

REGION_SIGMA_2SPECIES = "sigma-region-2species"
REGION_A_3SPECIES = "region-A-3species"
_CHUNK = 200_000


def _region_box_and_mask(model: CompetitionModel, region):
    """Bounding box, membership test, and radial projector of a named region.

    The projector rescales an infeasible point toward or away from the
    origin onto the region boundary; both named regions are star-shaped
    with respect to the origin, so this keeps local search moves feasible.
    """
    a = model.a
    if isinstance(region, str):
        if region == REGION_SIGMA_2SPECIES:
            if model.n != 2:
                raise ValueError(f"{region} requires a two-species model")
            b, c = float(a[0, 1]), float(a[1, 0])
            box = np.array([[0.0, max(1.0, 1.0 / c)], [0.0, max(1.0, 1.0 / b)]])

            def member(pts):
                return ((pts[:, 0] <= 1.0 - b * pts[:, 1] + 1e-12)
                        | (pts[:, 1] <= 1.0 - c * pts[:, 0] + 1e-12))

            def project(pt):
                u, v = pt
                t = max(1.0 / (u + b * v), 1.0 / (v + c * u))
                return pt * min(t, 1.0)

            return box, member, project
        if region == REGION_A_3SPECIES:
            if model.n != 3:
                raise ValueError(f"{region} requires a three-species model")
            u_max = float(max(1.0 / a[:, k].min() for k in range(3))) + 1.0
            box = np.array([[0.0, u_max]] * 3)

            def member(pts):
                r = pts @ a.T
                return (r.min(axis=1) <= 1.0 + 1e-12) & (r.max(axis=1) >= 1.0 - 1e-12)

            def project(pt):
                r = a @ pt
                if r.min() > 1.0:
                    return pt / r.min()
                if r.max() < 1.0:
                    return pt / r.max()
                return pt

            return box, member, project
        raise ValueError(f"unknown region {region!r}")
    box = np.asarray(region, dtype=float)
    if box.shape != (model.n, 2) or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError("box region must be an (n, 2) array of increasing bounds")
    return box, lambda pts: np.ones(pts.shape[0], dtype=bool), lambda pt: pt


def _region_vertices(model: CompetitionModel, region, box: np.ndarray) -> np.ndarray:
    """Corner points of the polytope pieces making up the region.

    Both supported norms are convex in the state (the Jacobian is affine in
    U), so the supremum over each polytope piece is attained at one of its
    corners; enumerating the n-fold intersections of the bounding planes
    yields every corner candidate.
    """
    n = model.n
    a = model.a
    planes = [(np.eye(n)[k], float(box[k, 0])) for k in range(n)]
    planes += [(np.eye(n)[k], float(box[k, 1])) for k in range(n)]
    if isinstance(region, str) and region == REGION_SIGMA_2SPECIES:
        b, c = float(a[0, 1]), float(a[1, 0])
        planes += [(np.array([1.0, b]), 1.0), (np.array([c, 1.0]), 1.0)]
    elif isinstance(region, str) and region == REGION_A_3SPECIES:
        planes += [(a[i].astype(float), 1.0) for i in range(3)]
    pts = []
    for combo in itertools.combinations(range(len(planes)), n):
        lhs = np.array([planes[k][0] for k in combo])
        rhs = np.array([planes[k][1] for k in combo])
        try:
            p = np.linalg.solve(lhs, rhs)
        except np.linalg.LinAlgError:
            continue
        p[np.abs(p) < 1e-13] = 0.0
        if np.all(p >= box[:, 0] - 1e-9) and np.all(p <= box[:, 1] + 1e-9):
            pts.append(np.clip(p, box[:, 0], box[:, 1]))
    return np.array(pts) if pts else np.empty((0, n))


def _norm_sq_batch(model: CompetitionModel, pts: np.ndarray, norm: str) -> np.ndarray:
    a = model.a
    if norm == "frobenius":
        r = pts @ a.T
        diag = 1.0 - r - pts * np.diag(a)
        out = np.sum(diag * diag, axis=1)
        off = np.sum(a * a, axis=1) - np.diag(a) ** 2
        out += pts * pts @ off
        return out
    if norm == "operator":
        J = -a[None, :, :] * pts[:, :, None]
        idx = np.arange(model.n)
        J[:, idx, idx] += 1.0 - pts @ a.T
        return np.linalg.norm(J, ord=2, axis=(1, 2)) ** 2
    raise ValueError(f"unknown norm {norm!r}")


def sup_jacobian_norm(model: CompetitionModel, region, *, grid_points: int = 200,
                      refine_iters: int = 20, norm: str = "frobenius") -> float:
    """Supremum of the kinetic Jacobian norm over an invariant region.

    ``region`` is "sigma-region-2species" (union of the two triangles under
    u = 1 - b v and v = 1 - c u), "region-A-3species" (states with
    min_i (a U)_i <= 1 <= max_i (a U)_i, confined to the box that contains
    it), or an explicit (n, 2) bounds array.  A dense grid scan
    (``grid_points`` per axis, in chunks) seeds a multi-start pattern
    search; infeasible moves are rescaled onto the region boundary so the
    search can track it.  ``refine_iters`` scales the sweep budget.  The
    region's polytope corners join the seed list and floor the result:
    the norm is convex in the state, so the true supremum sits at one of
    them and the search only has to confirm it.
    """
    box, member, project = _region_box_and_mask(model, region)
    axes = [np.linspace(lo, hi, grid_points) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts_all = np.stack([m.ravel() for m in mesh], axis=1)
    cand_pts, cand_vals = [], []
    for start in range(0, pts_all.shape[0], _CHUNK):
        pts = pts_all[start:start + _CHUNK]
        ok = member(pts)
        if not ok.any():
            continue
        pts = pts[ok]
        vals = _norm_sq_batch(model, pts, norm)
        top = np.argsort(vals)[-8:]
        cand_pts.append(pts[top])
        cand_vals.append(vals[top])
    if not cand_pts:
        raise ValueError("region contains no grid point; enlarge grid_points")
    cand_pts = np.concatenate(cand_pts)
    cand_vals = np.concatenate(cand_vals)
    order = np.argsort(cand_vals)[::-1][:32]
    seeds = [(cand_pts[idx].copy(), float(cand_vals[idx])) for idx in order]
    verts = _region_vertices(model, region, box)
    if verts.size:
        ok = member(verts)
        verts = verts[ok]
    if verts.size:
        vvals = _norm_sq_batch(model, verts, norm)
        seeds += [(verts[k].copy(), float(vvals[k])) for k in range(verts.shape[0])]
    spacing = float(np.max(box[:, 1] - box[:, 0])) / (grid_points - 1)
    best_val = -np.inf
    for pt, val in seeds:
        step = spacing
        for _ in range(20 * refine_iters):
            improved = False
            for axis in range(model.n):
                for sign in (1.0, -1.0):
                    cand = pt.copy()
                    cand[axis] += sign * step
                    if not member(cand[None, :])[0]:
                        cand = project(cand)
                    cand = np.clip(cand, box[:, 0], box[:, 1])
                    if not member(cand[None, :])[0]:
                        continue
                    v = float(_norm_sq_batch(model, cand[None, :], norm)[0])
                    if v > val:
                        val, pt, improved = v, cand, True
            if not improved:
                step *= 0.5
                if step < 1e-10:
                    break
        best_val = max(best_val, val)
    return float(np.sqrt(best_val))


@dataclass(frozen=True)
class ChsReport:
    """Gradient-collapse certificate sigma = lambda1 * min(d) - M_sup."""

    lambda1: float
    d_min: float
    M_sup: float
    sigma: float
    flat_guarantee: bool
    threshold_d: float


def chs_report(model: CompetitionModel, L: float, *, region=None,
               grid_points: int = 200, norm: str = "frobenius") -> ChsReport:
    """Certificate for diffusion-driven flattening on an interval of length L.

    The Jacobian norm is maximized over the named invariant region for
    n = 2 or 3; other sizes need an explicit box region.  flat_guarantee is
    sigma > 0, and threshold_d = M_sup / lambda1 is the diffusion floor at
    which the guarantee kicks in.
    """
    if L <= 0.0:
        raise ValueError("interval length must be positive")
    if region is None:
        if model.n == 2:
            region = REGION_SIGMA_2SPECIES
        elif model.n == 3:
            region = REGION_A_3SPECIES
        else:
            raise ValueError("no named region for this species count; pass a box region")
    lambda1 = (np.pi / L) ** 2
    M_sup = sup_jacobian_norm(model, region, grid_points=grid_points, norm=norm)
    d_min = float(model.d.min())
    sigma = lambda1 * d_min - M_sup
    return ChsReport(float(lambda1), d_min, M_sup, float(sigma), bool(sigma > 0.0),
                     float(M_sup / lambda1))


def decay_fit(trajectory: PdeTrajectory, window: tuple[float, float] | None = None):
    """Least-squares exponential decay rate of the gradient norm.

    Fits log ||grad u(t)|| ~ log A - rate * t over snapshot times in
    ``window`` (default [t_end/10, t_end/2]).  Requires at least 10
    snapshots in the window, all with gradient norm above 1e-14.
    Returns (rate, amplitude).
    """
    t_end = float(trajectory.times[-1])
    if window is None:
        window = (t_end / 10.0, t_end / 2.0)
    t_lo, t_hi = window
    keep = (trajectory.times >= t_lo) & (trajectory.times <= t_hi)
    if int(keep.sum()) < 10:
        raise ValueError(f"need at least 10 snapshots in window [{t_lo:g}, {t_hi:g}]")
    times = trajectory.times[keep]
    norms = np.array([grad_l2_norm(Field(trajectory.domain, f))
                      for f in trajectory.fields[keep]])
    if norms.min() <= 1e-14:
        raise ValueError("gradient norm at or below 1e-14 in window; nothing left to fit")
    slope, intercept = np.polyfit(times, np.log(norms), 1)
    return float(-slope), float(np.exp(intercept))


def periodicity_score(times: np.ndarray, values: np.ndarray,
                      window: tuple[float, float] | None = None):
    """Autocorrelation periodicity score of a scalar time series.

    Uses the uniformly sampled points inside ``window`` (the whole series
    by default; at least 200 samples).  The Pearson correlation between the
    trace and its lagged copy is scanned over lags up to half the window;
    the score is the height of the first peak after the correlation has
    decayed below 1/2, and the period is that lag.  Per-lag standardization
    keeps slowly drifting amplitudes from masking an otherwise clean cycle.
    A (near) constant trace scores 0.  Returns (score, period | None).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise ValueError("times and values must have matching shapes")
    if window is not None:
        keep = (times >= window[0]) & (times <= window[1])
        times, values = times[keep], values[keep]
    if times.size < 200:
        raise ValueError("need at least 200 samples in the window")
    dt = np.diff(times)
    if dt.max() - dt.min() > 1e-9 * dt.mean():
        raise ValueError("periodicity score requires uniform sampling")
    x = values - values.mean()
    var = float(np.mean(x * x))
    if var < 1e-24 or np.sqrt(var) < 1e-12 * max(1.0, np.abs(values).max()):
        return 0.0, None
    n = x.size
    max_lag = n // 2
    floor = 1e-12 * max(1.0, float(np.abs(values).max()))
    corr = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        a = x[: n - lag]
        b = x[lag:]
        da = a - a.mean()
        db = b - b.mean()
        denom = np.sqrt(float(np.mean(da * da)) * float(np.mean(db * db)))
        corr[lag] = 0.0 if denom < floor * floor else float(np.mean(da * db)) / denom
    below = np.nonzero(corr < 0.5)[0]
    if below.size == 0:
        return 0.0, None
    start = int(below[0])
    peaks = [k for k in range(max(start, 1), max_lag)
             if corr[k] >= corr[k - 1] and corr[k] >= corr[k + 1] and corr[k] > 0.0]
    if not peaks:
        return 0.0, None
    k0 = peaks[0]
    # keep climbing through adjacent rising peaks of a broad first bump,
    # stopping well short of the double-period peak
    best = k0
    for k in peaks:
        if k > 1.5 * k0:
            break
        if corr[k] > corr[best]:
            best = k
    lag_dt = float(times[1] - times[0])
    return float(corr[best]), float(best * lag_dt)


@dataclass(frozen=True)
class OmegaClassification:
    """Long-run PDE regime with its supporting evidence."""

    kind: str  # constant-equilibrium | flat-periodic | heterogeneous-steady |
    #           heterogeneous-periodic | undetermined
    label: str | None
    flatness: float
    periodicity: float | None
    equilibrium_distance: float | None


def classify_omega(trajectory: PdeTrajectory, model: CompetitionModel,
                   equilibria_list=None) -> OmegaClassification:
    """Classify the late-time regime of a PDE run (final quarter of the run).

    Flat runs (spatial oscillation < 1e-4) are matched against equilibria
    (distance < 1e-6 -> constant-equilibrium) or scored for periodicity at
    the probes (> 0.9 -> flat-periodic).  Strongly heterogeneous runs
    (>= 1e-2) split into steady (temporal variation < 1e-6) and periodic
    (score > 0.9 at every probe).  Everything else is undetermined.
    """
    from .model import equilibria as _equilibria

    t_end = float(trajectory.times[-1])
    if t_end < 50.0:
        raise ValueError("classification needs a run of at least 50 time units")
    t_lo = 0.75 * t_end
    keep = trajectory.times >= t_lo
    flat = max(field_flatness(Field(trajectory.domain, f)) for f in trajectory.fields[keep])

    scores = []
    pkeep = trajectory.probe_times >= t_lo
    if int(pkeep.sum()) >= 200:
        for j in range(trajectory.probe_points.size):
            for s in range(trajectory.probe_values.shape[1]):
                trace = trajectory.probe_values[pkeep, s, j]
                score, _ = periodicity_score(trajectory.probe_times[pkeep], trace)
                scores.append((j, s, score))
    per_probe = None
    if scores:
        by_probe = {}
        for j, s, score in scores:
            by_probe.setdefault(j, []).append(score)
        # a probe is periodic if its non-constant components are; constants score 0
        per_probe = [max(v) if max(v) == 0.0 else min(s for s in v if s > 0.0)
                     for v in by_probe.values()]
    min_score = min(per_probe) if per_probe else None

    eq_dist = None
    label = None
    if equilibria_list is None:
        equilibria_list = _equilibria(model)
    final_avg = spatial_average(trajectory.final)
    if equilibria_list:
        dists = [float(np.linalg.norm(eq.point - final_avg)) for eq in equilibria_list]
        k = int(np.argmin(dists))
        eq_dist, label = dists[k], equilibria_list[k].label

    if flat < 1e-4:
        if eq_dist is not None and eq_dist < 1e-6:
            return OmegaClassification("constant-equilibrium", label, flat, min_score, eq_dist)
        if min_score is not None and min_score > 0.9:
            return OmegaClassification("flat-periodic", None, flat, min_score, eq_dist)
        return OmegaClassification("undetermined", None, flat, min_score, eq_dist)
    if flat >= 1e-2:
        drift = float(np.max(np.abs(trajectory.fields[keep] - trajectory.fields[-1])))
        if drift < 1e-6:
            return OmegaClassification("heterogeneous-steady", None, flat, min_score, eq_dist)
        if min_score is not None and min_score > 0.9:
            return OmegaClassification("heterogeneous-periodic", None, flat, min_score, eq_dist)
    return OmegaClassification("undetermined", None, flat, min_score, eq_dist)
