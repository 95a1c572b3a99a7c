"""Near-field localization by per-sub-array DOAs and triangulation.

Between the sub-array far-field boundary and the full-array Fraunhofer
distance, each sub-array sees its own locally planar wavefront with its
own DOA.  Running the Hankel MUSIC estimator separately per sub-array
gives two DOA lists; an association pass matches entries across the
lists by testing complete one-to-one matchings against the snapshot
(each tentative pair contributes the locally planar steering vector of
its implied intersection as an atom); matched bearings are then
triangulated.

When targets share nearly the same bearing, the per-sub-array scans
cannot separate them and the pair/triangulate route collapses.  The
range information is still in the snapshot: the two sub-arrays sit at
different offsets, so the spherical path difference between their
reference elements varies with target range.  A second strategy
exploits it directly: greedy matched-filter picks over position space
with residual deflation, followed by cyclic one-at-a-time refinement.
``localize`` runs both and keeps whichever reconstructs the snapshot
with the smaller least-squares residual.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import BehindArray, EstimationError, ParallelBearings
from .geometry import ArrayConfig, Target, field_regions, reference_positions
from .signal_model import Snapshot, split_ulas, steering_nearfield
from .ss_music import (
    default_grid,
    hankel_steering_matrix,
    peak_pick,
    pseudospectrum,
)
from .subspace import default_pencil, hankel, split_subspaces

PARALLEL_TOL = 1e-6
ENVELOPE_U_POINTS = 120
ENVELOPE_R_POINTS = 12
MIN_ENVELOPE_SEP_U = 0.05
RANGE_SCAN_POINTS = 40
RANGE_SPLIT_POINTS = 80
COMB_LADDER = 8
POOL_PER_SCAN = 12
POLISH_STARTS = 2
MAX_REFINE_CYCLES = 4
REFINE_MOVE_TOL = 1e-5
FIELD_EDGE_U = 0.866
RANGE_SPLIT_SKIP_FRACTION = 0.03
NM_OPTIONS = {"xatol": 2e-6, "maxiter": 150}


@dataclass(frozen=True)
class BearingLine:
    """A ray from an anchor point along a unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self) -> None:
        if abs(float(np.linalg.norm(self.direction)) - 1.0) > 1e-9:
            raise ValueError("direction must be a unit vector")


@dataclass(frozen=True)
class Association:
    """One-to-one DOA index pairs across sub-arrays, best match first."""

    pairs: tuple[tuple[int, int], ...]
    scores: tuple[float, ...]


@dataclass(frozen=True)
class LocalizedTarget:
    position: np.ndarray | None
    residual: float | None
    score: float
    pair: tuple[int, int] | None
    error: str | None = None


@dataclass(frozen=True)
class LocalizationResult:
    targets: tuple[LocalizedTarget, ...]
    doas_ula1: np.ndarray
    doas_ula2: np.ndarray
    association: Association


def bearing_line(cfg: ArrayConfig, ula: int, local_angle: float) -> BearingLine:
    """Ray from sub-array ``ula``'s reference element toward a local DOA."""
    if ula not in (1, 2):
        raise ValueError("ula must be 1 or 2")
    refs = reference_positions(cfg)
    origin = np.array([refs[ula - 1], 0.0])
    direction = np.array([math.sin(local_angle), math.cos(local_angle)])
    return BearingLine(origin=origin, direction=direction)


def intersect_bearings(line1: BearingLine, line2: BearingLine) -> tuple[np.ndarray, float]:
    """Closest-approach midpoint of two rays and their gap.

    Solves the 2x2 system for the ranges along each ray minimizing the
    distance between the two line points.  In the plane, non-parallel
    lines intersect, so the gap is numerically zero; the least-squares
    form is kept for stability near parallelism.
    """
    d1, d2 = line1.direction, line2.direction
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) < PARALLEL_TOL:
        raise ParallelBearings(f"|sin| of bearing angle difference {abs(cross):.2e}")
    a = np.column_stack([d1, -d2])
    ranges = np.linalg.solve(a, line2.origin - line1.origin)
    if ranges[0] <= 0 or ranges[1] <= 0:
        raise BehindArray(f"intersection ranges {ranges[0]:.3g}, {ranges[1]:.3g}")
    p1 = line1.origin + ranges[0] * d1
    p2 = line2.origin + ranges[1] * d2
    return (p1 + p2) / 2.0, float(np.linalg.norm(p1 - p2))


def triangulate(angles: tuple[float, float], cfg: ArrayConfig) -> tuple[np.ndarray, float]:
    """Intersect the bearings implied by a (ULA1, ULA2) local-DOA pair."""
    return intersect_bearings(
        bearing_line(cfg, 1, angles[0]), bearing_line(cfg, 2, angles[1])
    )


def _scan_doas(
    y: np.ndarray,
    cfg: ArrayConfig,
    num_sources: int,
    grid_step_deg: float,
    pencil: int | None,
) -> tuple[np.ndarray, np.ndarray]:
    pencil = default_pencil(cfg.elements_per_ula) if pencil is None else pencil
    grid = default_grid(grid_step_deg)
    a = hankel_steering_matrix(pencil + 1, cfg.spacing, cfg.wavelength, grid)
    out = []
    for sub_y in split_ulas(y):
        sub = split_subspaces(hankel(sub_y, pencil), num_sources)
        out.append(np.sort(peak_pick(pseudospectrum(sub, grid, a), num_sources)))
    return out[0], out[1]


def local_doas(
    snap: Snapshot,
    cfg: ArrayConfig,
    num_sources: int,
    grid_step_deg: float = 0.01,
    pencil: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sub-array DOA estimates, each sorted ascending.

    The sub-arrays are scanned independently, so the two lists are not
    yet associated with each other.
    """
    return _scan_doas(snap.y, cfg, num_sources, grid_step_deg, pencil)


def associate(
    doas1: np.ndarray, doas2: np.ndarray, snap: Snapshot, cfg: ArrayConfig
) -> Association:
    """Pair per-sub-array DOAs by joint least-squares reconstruction.

    Every feasible (i, j) pair is triangulated and the local-planar
    steering vector of its intersection becomes a candidate atom, the
    same wavefront family the per-sub-array DOA scan assumes.  Each
    complete one-to-one matching is then scored by fitting the snapshot
    on its atoms in the least-squares sense; the matching with the
    smallest reconstruction residual wins.  Joint fitting matters because
    atoms of nearby targets are strongly correlated, so a greedy
    one-atom-at-a-time pick can prefer a phantom intersection lying
    between two real targets.  Pairs whose triangulation fails contribute
    no atom, so a matching forced through them is penalized by its larger
    residual and the result may hold fewer pairs than sources.  Reported
    scores are each atom's normalized correlation with the snapshot.
    """
    if len(doas1) != len(doas2):
        raise ValueError("per-sub-array DOA lists must have equal length")
    k = len(doas1)
    if k == 0:
        raise ValueError("per-sub-array DOA lists are empty")
    y = snap.y.astype(complex)
    atoms: dict[tuple[int, int], np.ndarray] = {}
    for i in range(k):
        for j in range(k):
            try:
                pos, _ = triangulate((float(doas1[i]), float(doas2[j])), cfg)
                atoms[(i, j)] = steering_nearfield(
                    cfg, Target.from_position(pos[0], pos[1])
                ).entries
            except (EstimationError, ValueError):
                continue
    best: tuple[float, tuple[int, ...], tuple[tuple[int, int], ...]] | None = None
    for perm in itertools.permutations(range(k)):
        pairs = tuple((i, perm[i]) for i in range(k) if (i, perm[i]) in atoms)
        if pairs:
            basis = np.column_stack([atoms[p] for p in pairs])
            coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
            residual = float(np.linalg.norm(y - basis @ coef))
        else:
            residual = float(np.linalg.norm(y))
        key = (residual, perm, pairs)
        if best is None or key[:2] < best[:2]:
            best = key
    chosen = best[2]
    y_norm = float(np.linalg.norm(y))
    scores = tuple(
        float(abs(np.vdot(atoms[p], y)) / (np.linalg.norm(atoms[p]) * y_norm))
        for p in chosen
    )
    return Association(pairs=chosen, scores=scores)


def _planar_atom(cfg: ArrayConfig, x: float, y: float) -> np.ndarray:
    return steering_nearfield(cfg, Target.from_position(x, y)).entries


@functools.lru_cache(maxsize=8)
def _atom_builder(cfg: ArrayConfig):
    """Precompiled locally planar atom evaluator for one array layout.

    The polish loops evaluate tens of thousands of atoms per snapshot;
    building them through the steering-vector front door costs more in
    object plumbing than in arithmetic.  This closure keeps the per-array
    constants ready and produces the identical vector with two hypots
    and one complex exponential.
    """
    refs = np.array(reference_positions(cfg))[:, None]
    k = 2.0 * math.pi / cfg.wavelength
    md = (k * cfg.spacing) * np.arange(cfg.elements_per_ula)

    def build(x: float, y: float) -> np.ndarray:
        dx = x - refs
        rng = np.hypot(dx, y)
        return np.exp(1j * ((dx / rng) * md - k * rng)).ravel()

    return build


def _fit_residual_sq(
    y: np.ndarray, y_sq: float, atom: np.ndarray, others: list[np.ndarray]
) -> float:
    """Squared joint-fit residual of ``y`` on ``[atom] + others``.

    Atoms have unit-modulus entries, so every Gram diagonal equals the
    element count and the one- and two-atom solutions reduce to scalar
    algebra; three or more fall back to a least-squares solve.  A pair
    whose Gram matrix is close to singular (near-coincident atoms) gets
    an over-the-top cost so a polish step never parks two estimates on
    the same point.
    """
    n = float(len(atom))
    b1 = np.vdot(atom, y)
    if not others:
        return max(y_sq - abs(b1) ** 2 / n, 0.0)
    if len(others) == 1:
        other = others[0]
        b2 = np.vdot(other, y)
        g12 = np.vdot(atom, other)
        det = n * n - abs(g12) ** 2
        if det <= 1e-9 * n * n:
            return 2.0 * y_sq
        quad = (
            n * abs(b1) ** 2
            + n * abs(b2) ** 2
            - 2.0 * (g12 * np.conj(b1) * b2).real
        ) / det
        return max(y_sq - quad, 0.0)
    basis = np.column_stack([atom] + others)
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return float(np.linalg.norm(y - basis @ coef) ** 2)


def _planar_atoms(cfg: ArrayConfig, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Locally planar atoms for many positions at once, one per column."""
    k = 2.0 * math.pi / cfg.wavelength
    m = np.arange(cfg.elements_per_ula)[:, None]
    parts = []
    for ref in reference_positions(cfg):
        rng = np.hypot(xs - ref, ys)
        local_u = (xs - ref) / rng
        parts.append(np.exp(-1j * k * rng) * np.exp(1j * k * m * cfg.spacing * local_u))
    return np.concatenate(parts, axis=0)


def _matched_response(res: np.ndarray, cfg: ArrayConfig, pos: np.ndarray) -> float:
    atom = _atom_builder(cfg)(float(pos[0]), float(pos[1]))
    return float(abs(np.vdot(atom, res))) / math.sqrt(len(atom))


def _project_residual(
    y: np.ndarray, positions: list[np.ndarray], cfg: ArrayConfig
) -> tuple[np.ndarray, float]:
    """Residual of the least-squares fit of ``y`` on the position atoms."""
    if not positions:
        return y, float(np.linalg.norm(y))
    basis = np.column_stack([_planar_atom(cfg, p[0], p[1]) for p in positions])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    res = y - basis @ coef
    return res, float(np.linalg.norm(res))


def _ridge_spacing_u(cfg: ArrayConfig) -> float:
    """Cross-range period of the matched-filter comb, in sine units.

    The inter-sub-array path difference advances one wavelength when the
    direction sine moves by ``wavelength / center_separation``, the same
    ambiguity spacing the two-element interferometer has in the far
    field.  The matched-filter surface is a comb of crests at this
    spacing under a sub-array beamwidth envelope.
    """
    return cfg.wavelength / cfg.center_separation


def _refine_position(
    res: np.ndarray, cfg: ArrayConfig, seed: np.ndarray
) -> np.ndarray:
    """Polish one atom's matched-filter response around a seed.

    The search runs over (sine of bearing, log range) with steps kept
    well inside one comb crest, so the simplex climbs the crest it
    started on instead of hopping the comb.  Along a crest the response
    varies slowly (the inter-sub-array path difference drifts by well
    under a cycle per meter of range), which is what makes a
    derivative-free polish reliable here.
    """
    r0 = math.hypot(float(seed[0]), float(seed[1]))
    u0 = float(seed[0]) / r0
    build = _atom_builder(cfg)
    res_norm = float(np.linalg.norm(res))

    def cost(params: np.ndarray) -> float:
        u, log_r = float(params[0]), float(params[1])
        if not -0.999999 < u < 0.999999 or not -5.0 < log_r < 12.0:
            return res_norm
        r = math.exp(log_r)
        return -abs(np.vdot(build(r * u, r * math.sqrt(1.0 - u * u)), res))

    x0 = np.array([u0, math.log(r0)])
    du = 0.2 * _ridge_spacing_u(cfg)
    simplex = np.array([x0, x0 + [du, 0.0], x0 + [0.0, 0.05]])
    opt = scipy.optimize.minimize(
        cost,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "fatol": 1e-7 * max(res_norm, 1e-30),
            **NM_OPTIONS,
        },
    )
    u = min(max(float(opt.x[0]), -0.999999), 0.999999)
    r = math.exp(min(max(float(opt.x[1]), -5.0), 12.0))
    return np.array([r * u, r * math.sqrt(1.0 - u * u)])


def _range_band(cfg: ArrayConfig) -> tuple[float, float]:
    reg = field_regions(cfg)
    return max(reg.local_farfield, 10.0 * cfg.wavelength), reg.fraunhofer


def _grid_positions(us: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    """Cartesian points for every (direction sine, range) combination."""
    uu = np.repeat(us, len(ranges))
    rr = np.tile(ranges, len(us))
    return np.column_stack([rr * uu, rr * np.sqrt(1.0 - uu * uu)])


def _envelope_directions(
    res: np.ndarray, cfg: ArrayConfig, count: int
) -> list[float]:
    """Direction sines of the strongest beam-envelope bumps.

    Summing the two per-sub-array matched-filter magnitudes discards the
    inter-sub-array phase, leaving the smooth product of the sub-array
    beams; a coarse global grid cannot miss its beamwidth-scale maxima.
    Up to ``count`` distinct local maxima come back, strongest first.
    """
    us = np.linspace(-FIELD_EDGE_U, FIELD_EDGE_U, ENVELOPE_U_POINTS)
    lo, hi = _range_band(cfg)
    ranges = np.geomspace(lo, hi, ENVELOPE_R_POINTS)
    pts = _grid_positions(us, ranges)
    atoms = _planar_atoms(cfg, pts[:, 0], pts[:, 1])
    half = atoms.shape[0] // 2
    env = np.abs(atoms[:half].conj().T @ res[:half]) + np.abs(
        atoms[half:].conj().T @ res[half:]
    )
    env_u = env.reshape(len(us), len(ranges)).max(axis=1)
    interior = (env_u[1:-1] >= env_u[:-2]) & (env_u[1:-1] >= env_u[2:])
    peaks = [int(i) for i in np.where(interior)[0] + 1]
    peaks.sort(key=lambda i: -env_u[i])
    chosen: list[float] = []
    for i in peaks:
        if all(abs(us[i] - u) > MIN_ENVELOPE_SEP_U for u in chosen):
            chosen.append(float(us[i]))
        if len(chosen) == count:
            break
    return chosen or [float(us[int(np.argmax(env_u))])]


def _comb_candidates(
    res: np.ndarray, cfg: ArrayConfig, u_center: float
) -> list[np.ndarray]:
    """Diverse comb-crest candidates near a bearing, by coherent response.

    The candidate grid crosses a ladder of direction sines at comb-crest
    spacing around ``u_center`` with a log-spaced range sweep, sampled at
    half spacing so no crest falls between grid lines.  The strongest
    points win subject to a diversity rule (a fresh candidate must sit on
    another crest or at a clearly different range), so runner-up targets
    are kept even when one target dominates the response.
    """
    spacing = _ridge_spacing_u(cfg)
    qs = np.arange(-2 * COMB_LADDER, 2 * COMB_LADDER + 1) * (spacing / 2.0)
    us = u_center + qs
    us = us[np.abs(us) < FIELD_EDGE_U]
    lo, hi = _range_band(cfg)
    pts = _grid_positions(us, np.geomspace(lo, hi, RANGE_SCAN_POINTS))
    atoms = _planar_atoms(cfg, pts[:, 0], pts[:, 1])
    response = np.abs(atoms.conj().T @ res)
    chosen: list[np.ndarray] = []
    for i in np.argsort(response)[::-1]:
        p = pts[i]
        u, r = p[0] / math.hypot(p[0], p[1]), math.hypot(p[0], p[1])
        distinct = True
        for q in chosen:
            uq, rq = q[0] / math.hypot(q[0], q[1]), math.hypot(q[0], q[1])
            if abs(u - uq) < 0.45 * spacing and abs(math.log(r / rq)) < 0.08:
                distinct = False
                break
        if distinct:
            chosen.append(p)
        if len(chosen) == POOL_PER_SCAN:
            break
    return chosen


def _pick_position(res: np.ndarray, cfg: ArrayConfig) -> np.ndarray:
    """Best single-target position explaining a residual.

    Envelope scan for the bearing, comb scan for the crest and range,
    local polish of the few strongest candidates.
    """
    u_center = _envelope_directions(res, cfg, 1)[0]
    seeds = _comb_candidates(res, cfg, u_center)[:POLISH_STARTS]
    return max(
        (_refine_position(res, cfg, s) for s in seeds),
        key=lambda p: _matched_response(res, cfg, p),
    )


def _range_split_positions(
    y: np.ndarray, cfg: ArrayConfig, u_center: float
) -> list[np.ndarray] | None:
    """Best two same-bearing atoms at different ranges, jointly fitted.

    Targets that share a bearing are invisible to every per-sub-array
    scan and to greedy single-atom picks, which settle on blends between
    the true ranges.  Restricted to one bearing, the two-atom fit is
    cheap in closed form (2x2 Gram solve per range pair), so all pairs
    of a log-spaced range ladder are tested exhaustively; the bearing
    itself is swept over a ladder of comb-crest offsets around
    ``u_center`` because a greedy pick may sit on the wrong crest.
    Returns the best pair, or None when no pair is well-conditioned.
    """
    spacing = _ridge_spacing_u(cfg)
    lo, hi = _range_band(cfg)
    ranges = np.geomspace(lo, hi, RANGE_SPLIT_POINTS)
    ii, jj = np.triu_indices(RANGE_SPLIT_POINTS, k=1)
    y_sq = float(np.vdot(y, y).real)
    best: tuple[float, float, int, int] | None = None
    for q in range(-COMB_LADDER, COMB_LADDER + 1):
        u = u_center + q * spacing
        if not -FIELD_EDGE_U < u < FIELD_EDGE_U:
            continue
        xs = ranges * u
        ys = ranges * math.sqrt(1.0 - u * u)
        atoms = _planar_atoms(cfg, xs, ys)
        b = atoms.conj().T @ y
        gram = atoms.conj().T @ atoms
        gii = gram[ii, ii].real
        gjj = gram[jj, jj].real
        gij = gram[ii, jj]
        det = gii * gjj - np.abs(gij) ** 2
        valid = det > 1e-9 * gii * gjj
        quad = np.full(len(ii), -np.inf)
        quad[valid] = (
            gjj[valid] * np.abs(b[ii[valid]]) ** 2
            + gii[valid] * np.abs(b[jj[valid]]) ** 2
            - 2.0 * np.real(gij[valid] * np.conj(b[ii[valid]]) * b[jj[valid]])
        ) / det[valid]
        k = int(np.argmax(quad))
        if quad[k] == -np.inf:
            continue
        residual_sq = y_sq - float(quad[k])
        if best is None or residual_sq < best[0]:
            best = (residual_sq, u, int(ii[k]), int(jj[k]))
    if best is None:
        return None
    _, u, i, j = best
    root = math.sqrt(1.0 - u * u)
    return [
        np.array([ranges[i] * u, ranges[i] * root]),
        np.array([ranges[j] * u, ranges[j] * root]),
    ]


def _joint_refine(
    y: np.ndarray, cfg: ArrayConfig, positions: list[np.ndarray], k: int
) -> np.ndarray:
    """Move one position to minimize the joint fit residual.

    All amplitudes are refit at every trial point, so this is exact
    block coordinate descent on the least-squares objective.  Maximizing
    a single atom's response against a leave-one-out residual is not
    equivalent when atoms overlap strongly (same-bearing targets): that
    objective rewards the atom for absorbing its neighbour's energy and
    drags correlated pairs back into a blend.  The step search stays
    inside one comb crest, like the single-atom polish.
    """
    build = _atom_builder(cfg)
    others = [
        build(float(p[0]), float(p[1])) for i, p in enumerate(positions) if i != k
    ]
    seed = positions[k]
    r0 = math.hypot(float(seed[0]), float(seed[1]))
    u0 = float(seed[0]) / r0
    y_sq = float(np.vdot(y, y).real)

    def cost(params: np.ndarray) -> float:
        u, log_r = float(params[0]), float(params[1])
        if not -0.999999 < u < 0.999999 or not -5.0 < log_r < 12.0:
            return 2.0 * y_sq
        r = math.exp(log_r)
        atom = build(r * u, r * math.sqrt(1.0 - u * u))
        return _fit_residual_sq(y, y_sq, atom, others)

    x0 = np.array([u0, math.log(r0)])
    du = 0.2 * _ridge_spacing_u(cfg)
    simplex = np.array([x0, x0 + [du, 0.0], x0 + [0.0, 0.05]])
    opt = scipy.optimize.minimize(
        cost,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "fatol": 1e-8 * y_sq,
            **NM_OPTIONS,
        },
    )
    u = min(max(float(opt.x[0]), -0.999999), 0.999999)
    r = math.exp(min(max(float(opt.x[1]), -5.0), 12.0))
    return np.array([r * u, r * math.sqrt(1.0 - u * u)])


def _polish_cycles(
    y: np.ndarray, cfg: ArrayConfig, positions: list[np.ndarray]
) -> tuple[list[np.ndarray], float]:
    """Relaxation: refine each position in turn on the joint objective.

    The refinement stays on the comb crest each position starts on;
    crest decisions belong to the callers' global searches.  Stops when
    the estimates stop moving.  Returns positions and the joint
    residual.
    """
    positions = [p.copy() for p in positions]
    for _ in range(MAX_REFINE_CYCLES):
        moved = 0.0
        for k in range(len(positions)):
            new = _joint_refine(y, cfg, positions, k)
            moved = max(moved, float(np.linalg.norm(new - positions[k])))
            positions[k] = new
        if moved < REFINE_MOVE_TOL:
            break
    _, res_norm = _project_residual(y, positions, cfg)
    return positions, res_norm


def _matched_filter_positions(
    y: np.ndarray, cfg: ArrayConfig, num_sources: int
) -> tuple[list[np.ndarray], float]:
    """Matched-filter position estimates by the better of two routes.

    Route one is greedy with deflation: pick the strongest atom of the
    current residual, remove the joint fit, repeat.  It handles targets
    on distinct bearings but blends targets that share one.  Route two
    handles that shared-bearing case head-on for two sources: an
    exhaustive same-bearing range-pair fit around each greedy bearing.
    Route two is skipped when route one already explains the snapshot
    down to a small fraction of its energy, since a blend leaves behind
    a signal-level residual no matter the noise.  Both routes end with
    relaxation polish, and the smaller joint residual wins.  Returns the
    positions and that residual norm.
    """
    picks: list[np.ndarray] = []
    for _ in range(num_sources):
        res, _ = _project_residual(y, picks, cfg)
        picks.append(_pick_position(res, cfg))
    best = _polish_cycles(y, cfg, picks)
    if num_sources == 2 and best[1] > RANGE_SPLIT_SKIP_FRACTION * float(
        np.linalg.norm(y)
    ):
        spacing = _ridge_spacing_u(cfg)
        tried: list[float] = []
        for p in picks:
            u = float(p[0] / math.hypot(p[0], p[1]))
            if any(abs(u - t) < 0.3 * spacing for t in tried):
                continue
            tried.append(u)
            split = _range_split_positions(y, cfg, u)
            if split is None:
                continue
            candidate = _polish_cycles(y, cfg, split)
            if candidate[1] < best[1]:
                best = candidate
    return best


def localize(
    snap: Snapshot,
    cfg: ArrayConfig,
    num_sources: int,
    grid_step_deg: float = 0.01,
    pencil: int | None = None,
) -> LocalizationResult:
    """Estimate target positions from one snapshot.

    Two reconstructions are attempted: triangulation of the associated
    per-sub-array DOA pairs, and the matched-filter deflation search.
    Whichever fits the snapshot with the smaller least-squares residual
    is reported.  Entries come back in descending score order.  On the
    pair route, a pairing whose triangulation fails is kept as a flagged
    entry with no position, and sources the association pass could not
    pair appear as flagged placeholders, so the result always has
    ``num_sources`` entries; deflation entries carry ``pair=None``.
    """
    doas1, doas2 = local_doas(snap, cfg, num_sources, grid_step_deg, pencil)
    assoc = associate(doas1, doas2, snap, cfg)
    y = snap.y.astype(complex)
    entries: list[LocalizedTarget] = []
    pair_positions: list[np.ndarray] = []
    for (i, j), score in zip(assoc.pairs, assoc.scores):
        try:
            pos, gap = triangulate((float(doas1[i]), float(doas2[j])), cfg)
            pair_positions.append(pos)
            entries.append(
                LocalizedTarget(position=pos, residual=gap, score=score, pair=(i, j))
            )
        except EstimationError as exc:
            entries.append(
                LocalizedTarget(
                    position=None,
                    residual=None,
                    score=score,
                    pair=(i, j),
                    error=type(exc).__name__,
                )
            )
    for _ in range(num_sources - len(entries)):
        entries.append(
            LocalizedTarget(
                position=None, residual=None, score=0.0, pair=None, error="Unpaired"
            )
        )
    _, pair_res = _project_residual(y, pair_positions, cfg)
    defl_positions, defl_res = _matched_filter_positions(y, cfg, num_sources)
    if defl_res < pair_res:
        y_norm = float(np.linalg.norm(y))
        entries = [
            LocalizedTarget(
                position=p,
                residual=None,
                score=_matched_response(y, cfg, p) / y_norm,
                pair=None,
            )
            for p in defl_positions
        ]
    entries.sort(key=lambda t: -t.score)
    return LocalizationResult(
        targets=tuple(entries), doas_ula1=doas1, doas_ula2=doas2, association=assoc
    )
