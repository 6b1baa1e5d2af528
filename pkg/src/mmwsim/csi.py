"""Quantized channel estimation and per-UE effective channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import MultiPanelChannel, assemble_channel, wrap_angle_deg
from .codebook import EstimationGrid
from .errors import DimensionMismatchError
from .scenario import NetworkConfig


@dataclass(frozen=True)
class QuantizedPath:
    """A path after angular snapping; gains of colliding paths are merged."""

    gain: complex
    q_aod_az: float
    q_aod_el: float
    q_aoa_az: float
    q_aoa_el: float
    bounces: int
    path_length_m: float

    # Aliases so quantized paths feed assemble_channel directly.
    @property
    def aod_az_deg(self) -> float:
        return self.q_aod_az

    @property
    def aod_el_deg(self) -> float:
        return self.q_aod_el

    @property
    def aoa_az_deg(self) -> float:
        return self.q_aoa_az

    @property
    def aoa_el_deg(self) -> float:
        return self.q_aoa_el


@dataclass
class EffectiveChannel:
    """Row of the aggregated effective channel seen by one UE."""

    row: np.ndarray   # (n_served,) complex
    ue: int


def snap_azimuth(az_deg: float, step: float) -> float:
    """Snap to the nearest half-step lattice point; exact ties go down."""
    t = az_deg / step
    k = np.floor(t)
    centre = (t - 0.5) if t == k else (k + 0.5)
    return float(wrap_angle_deg(centre * step))

def snap_elevation(el_deg: float, step: float) -> float:
    t = el_deg / step
    k = np.floor(t)
    centre = (t - 0.5) if t == k else (k + 0.5)
    # lattice centres must stay inside [-90, 90]
    lo, hi = -90.0 / step + 0.5, 90.0 / step - 0.5
    return float(min(max(centre, lo), hi) * step)


def quantize_paths(paths: list, grid: EstimationGrid) -> list:
    """Snap path angles to the estimation lattice and merge collisions.

    With the exact-CSI grid the input is returned unchanged.  Paths that end
    up with identical quantized angle 4-tuples are merged by coherent complex
    gain summation.
    """
    if grid.is_exact:
        return list(paths)
    merged: dict[tuple, QuantizedPath] = {}
    order: list[tuple] = []
    for p in paths:
        q = QuantizedPath(
            gain=p.gain,
            q_aod_az=snap_azimuth(p.aod_az_deg, grid.az_step_deg),
            q_aod_el=snap_elevation(p.aod_el_deg, grid.el_step_deg),
            q_aoa_az=snap_azimuth(p.aoa_az_deg, grid.az_step_deg),
            q_aoa_el=snap_elevation(p.aoa_el_deg, grid.el_step_deg),
            bounces=p.bounces,
            path_length_m=p.path_length_m)
        key = (round(q.q_aod_az, 9), round(q.q_aod_el, 9),
               round(q.q_aoa_az, 9), round(q.q_aoa_el, 9))
        if key in merged:
            prev = merged[key]
            # keep the stronger contributor's bounce count and length
            keep_new = abs(q.gain) > abs(prev.gain)
            merged[key] = QuantizedPath(
                gain=prev.gain + q.gain,
                q_aod_az=q.q_aod_az, q_aod_el=q.q_aod_el,
                q_aoa_az=q.q_aoa_az, q_aoa_el=q.q_aoa_el,
                bounces=q.bounces if keep_new else prev.bounces,
                path_length_m=q.path_length_m if keep_new else prev.path_length_m)
        else:
            merged[key] = q
            order.append(key)
    return [merged[k] for k in order]


def estimate_channel(quantized: list, cfg: NetworkConfig,
                     gnb_orientations: np.ndarray,
                     ue_orientations: np.ndarray) -> MultiPanelChannel:
    """Channel matrix reconstructed from (possibly quantized) paths.

    Shares the gating and blockwise construction of the exact assembly, so
    the exact-CSI grid reproduces the true channel bit for bit.
    """
    return assemble_channel(quantized, cfg, gnb_orientations, ue_orientations)


def effective_channel(ue_combiner: np.ndarray, est: MultiPanelChannel,
                      rf_precoders: np.ndarray, ue: int = -1) -> EffectiveChannel:
    """w_c^H H_hat W_RF for one UE: its row of the aggregate effective channel."""
    full = est.full()
    if ue_combiner.shape[0] != full.shape[0]:
        raise DimensionMismatchError(
            f"combiner length {ue_combiner.shape[0]} != 4*n_r {full.shape[0]}")
    if rf_precoders.shape[0] != full.shape[1]:
        raise DimensionMismatchError(
            f"RF precoder rows {rf_precoders.shape[0]} != 4*n_t {full.shape[1]}")
    row = ue_combiner.conj() @ full @ rf_precoders
    return EffectiveChannel(row=row, ue=ue)
