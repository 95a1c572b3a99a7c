"""Steering vectors, single-snapshot observations and array factors.

Four wavefront models are available, from most exact to most idealized:

* ``EXACT``: per-element Euclidean propagation phase.
* ``NF_LOCAL_PLANAR``: spherical reference phase per sub-array, planar
  wavefront with a sub-array-local DOA inside each sub-array.
* ``NF_SHARED_DOA``: like the local-planar model but with the global DOA
  reused by both sub-arrays.
* ``FAR_FIELD``: a single plane wave across the whole aperture, common
  range phase dropped.

``snapshot`` auto-selects the model per target from the range thresholds
in :func:`elaa_doa.geometry.field_regions`; every generator is also
directly callable so tests can mix models deliberately.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ArrayConfig,
    FieldRegions,
    Target,
    element_positions,
    field_regions,
    local_geometry,
)


class SteeringModel(enum.Enum):
    EXACT = "exact"
    FAR_FIELD = "farfield"
    NF_LOCAL_PLANAR = "nf_local_planar"
    NF_SHARED_DOA = "nf_shared_doa"


@dataclass(frozen=True)
class SteeringVector:
    """Array response for one source, with the model that produced it."""

    entries: np.ndarray
    model: SteeringModel


@dataclass(frozen=True)
class Snapshot:
    """A single array observation ``y`` plus its generation provenance."""

    y: np.ndarray
    snr_db: float
    seed: int
    truth: tuple[Target, ...]
    amplitudes: np.ndarray


def split_ulas(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a stacked observation into the two per-sub-array halves."""
    m = len(y) // 2
    return y[:m], y[m:]


def steering_exact(cfg: ArrayConfig, target: Target) -> SteeringVector:
    """Exact spherical-wave steering vector, ``exp(-j*2*pi*dist/lambda)``."""
    pos = element_positions(cfg)
    p = target.position
    dist = np.hypot(p[0] - pos, p[1])
    if np.any(dist < 1e-12):
        raise ValueError("target coincides with an array element")
    k = 2.0 * math.pi / cfg.wavelength
    return SteeringVector(np.exp(-1j * k * dist), SteeringModel.EXACT)


def steering_farfield(cfg: ArrayConfig, angle: float) -> SteeringVector:
    """Plane-wave steering vector ``exp(+j*2*pi*x*sin(angle)/lambda)``.

    The common range phase is omitted; only the per-element progressive
    phase along the aperture is kept.
    """
    pos = element_positions(cfg)
    k = 2.0 * math.pi / cfg.wavelength
    return SteeringVector(np.exp(1j * k * pos * math.sin(angle)), SteeringModel.FAR_FIELD)


def steering_nearfield(
    cfg: ArrayConfig, target: Target, shared_doa: bool = False
) -> SteeringVector:
    """Per-sub-array planar steering with a spherical reference phase.

    Each sub-array keeps the exact propagation phase to its reference
    (first) element and a linear phase ramp ``exp(+j*2*pi*m*d*sin(theta_n)/
    lambda)`` across its elements, where ``theta_n`` is the DOA seen from
    that reference element.  With ``shared_doa=True`` the global DOA is
    used for both ramps instead.
    """
    lg = local_geometry(cfg, target)
    k = 2.0 * math.pi / cfg.wavelength
    m = np.arange(cfg.elements_per_ula)
    parts = []
    for n in range(2):
        u_n = math.sin(target.angle) if shared_doa else math.sin(lg.angles[n])
        ref = np.exp(-1j * k * lg.ranges[n])
        parts.append(ref * np.exp(1j * k * m * cfg.spacing * u_n))
    model = SteeringModel.NF_SHARED_DOA if shared_doa else SteeringModel.NF_LOCAL_PLANAR
    return SteeringVector(np.concatenate(parts), model)


def select_model(
    cfg: ArrayConfig, target_range: float, regions: FieldRegions | None = None
) -> SteeringModel:
    """Most idealized wavefront model that is valid at the given range."""
    reg = field_regions(cfg) if regions is None else regions
    if target_range >= reg.fraunhofer:
        return SteeringModel.FAR_FIELD
    if target_range >= reg.shared_doa:
        return SteeringModel.NF_SHARED_DOA
    if target_range >= reg.local_farfield:
        return SteeringModel.NF_LOCAL_PLANAR
    return SteeringModel.EXACT


def steering(
    cfg: ArrayConfig,
    target: Target,
    model: SteeringModel | None = None,
    regions: FieldRegions | None = None,
) -> SteeringVector:
    """Steering vector under an explicit or range-auto-selected model."""
    if model is None:
        model = select_model(cfg, target.range, regions)
    if model is SteeringModel.EXACT:
        return steering_exact(cfg, target)
    if model is SteeringModel.FAR_FIELD:
        return steering_farfield(cfg, target.angle)
    if model is SteeringModel.NF_LOCAL_PLANAR:
        return steering_nearfield(cfg, target, shared_doa=False)
    if model is SteeringModel.NF_SHARED_DOA:
        return steering_nearfield(cfg, target, shared_doa=True)
    raise ValueError(f"unknown steering model {model!r}")


def snapshot(
    cfg: ArrayConfig,
    targets: tuple[Target, ...] | list[Target],
    snr_db: float,
    seed: int,
    model: SteeringModel | None = None,
    regions: FieldRegions | None = None,
    randomize_phase: bool = True,
) -> Snapshot:
    """Generate one observation ``y = sum_k s_k a_k + n``.

    Source amplitudes keep the magnitude of ``target.amplitude`` (unity by
    default) and get an independent uniform phase per call unless
    ``randomize_phase`` is disabled.  The noise is circularly symmetric
    complex Gaussian with per-element variance ``10**(-snr_db/10)``, so
    ``snr_db`` is the per-element SNR for a unit-magnitude source.
    ``snr_db = math.inf`` disables the noise exactly.  Identical arguments
    give bitwise-identical output.
    """
    targets = tuple(targets)
    rng = np.random.default_rng(seed)
    n = cfg.n_elements
    if randomize_phase:
        phases = rng.uniform(0.0, 2.0 * math.pi, len(targets))
    else:
        phases = np.zeros(len(targets))
    amps = np.array(
        [t.amplitude * np.exp(1j * ph) for t, ph in zip(targets, phases)],
        dtype=complex,
    )
    y = np.zeros(n, dtype=complex)
    for t, s in zip(targets, amps):
        y = y + s * steering(cfg, t, model=model, regions=regions).entries
    sigma2 = 10.0 ** (-snr_db / 10.0)
    noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * math.sqrt(sigma2 / 2.0)
    return Snapshot(y=y + noise, snr_db=snr_db, seed=seed, truth=targets, amplitudes=amps)


def array_factor(cfg: ArrayConfig, grid: np.ndarray, aperture: str = "elaa") -> np.ndarray:
    """Normalized magnitude array factor in dB over a broadside-angle grid.

    ``aperture="elaa"`` uses all elements, ``"ula"`` a single sub-array
    (the magnitude is identical for either sub-array).  Peak value is
    0 dB at broadside.
    """
    pos = element_positions(cfg)
    if aperture == "ula":
        pos = pos[: cfg.elements_per_ula]
    elif aperture != "elaa":
        raise ValueError("aperture must be 'elaa' or 'ula'")
    k = 2.0 * math.pi / cfg.wavelength
    u = np.sin(np.asarray(grid, dtype=float))
    af = np.abs(np.exp(1j * k * np.outer(pos, u)).sum(axis=0)) / len(pos)
    return 20.0 * np.log10(np.maximum(af, 1e-300))


def save_snapshot(path, y: np.ndarray) -> None:
    """Dump an observation vector as little-endian f64 interleaved re/im."""
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(y, dtype="<c16").tobytes())


def load_snapshot(path) -> np.ndarray:
    """Read back a vector written by :func:`save_snapshot`."""
    with open(path, "rb") as fh:
        return np.frombuffer(fh.read(), dtype="<c16").copy()
