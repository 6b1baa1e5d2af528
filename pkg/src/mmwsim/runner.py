"""Monte Carlo campaign driver: deploy, sweep, allocate, report, emit."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .allocation import (Allocation, AllocationInputs, AllocMode,
                         _initial_gnbs, allocate, allocate_cbf_tdma)
from .beamsweep import sweep
from .channel import assemble_channel, ingest_paths, pair_rng, synthesize_paths
from .codebook import default_full_codebook, estimation_grid
from .csi import quantize_paths
from .metrics import network_report, summarize
from .scenario import Deployment, NetworkConfig, generate_deployment

SCHEMA_VERSION = 1

RECORD_FIELDS = ["realization", "mode", "ue", "served", "gnb", "gnb_beam",
                 "ue_beam", "alloc_rank", "is_los", "is_handover", "rss_w",
                 "i_intra_w", "i_inter_w", "noise_w", "sinr_db", "inr_db",
                 "snr_db", "rate_bps"]


@dataclass
class RealizationResult:
    realization: int
    mode: AllocMode
    allocation: Allocation
    reports: list
    summary: dict


@dataclass
class CampaignResult:
    cfg: NetworkConfig
    modes: list
    results: list = field(default_factory=list)   # RealizationResult
    timings_s: dict = field(default_factory=dict)  # mode value -> total seconds

    def per_mode(self, mode) -> list:
        mode = AllocMode(mode) if isinstance(mode, str) else mode
        return [r for r in self.results if r.mode is mode]

    def mode_summary(self, mode: AllocMode) -> dict:
        """Averages of the per-realization aggregates for one mode."""
        rows = [r.summary for r in self.per_mode(mode)]
        if not rows:
            return {}
        out: dict = {"n_realizations": len(rows)}
        for key in rows[0]:
            vals = [r[key] for r in rows]
            if key == "bpl_rank_histogram":
                merged: dict[str, int] = {}
                for h in vals:
                    for k, v in h.items():
                        merged[k] = merged.get(k, 0) + v
                out[key] = {k: merged[k] for k in sorted(merged, key=int)}
            elif all(v is None for v in vals):
                out[key] = None
            else:
                nums = [v for v in vals if v is not None]
                out[key] = float(np.mean(nums))
        return out


class _RowCache:
    """Per-(ue, gnb) matrices of combined rows w_c^H H, one row per UE beam."""

    def __init__(self, channels: dict, ue_books: dict):
        self.channels = channels      # (gnb, ue) -> MultiPanelChannel or None
        self.ue_books = ue_books      # ue -> FullCodebook
        self._rows: dict = {}

    def rows(self, ue: int, gnb: int) -> Optional[np.ndarray]:
        key = (ue, gnb)
        if key not in self._rows:
            ch = self.channels.get((gnb, ue))
            if ch is None:
                self._rows[key] = None
            else:
                self._rows[key] = self.ue_books[ue].matrix.conj().T @ ch.full()
        return self._rows[key]

    def __call__(self, ue: int, gnb: int, ue_beam: int) -> Optional[np.ndarray]:
        rows = self.rows(ue, gnb)
        return None if rows is None else rows[ue_beam]


def _pair_paths(cfg: NetworkConfig, dep: Deployment) -> dict:
    """(gnb, ue) -> path list, from the trace file or the synthetic generator."""
    if cfg.trace_file:
        return ingest_paths(cfg.trace_file, n_gnbs=dep.n_gnbs, n_ues=dep.n_ues)
    out = {}
    for g in range(dep.n_gnbs):
        for u in range(dep.n_ues):
            rng = pair_rng(cfg, dep.realization_id, g, u)
            out[(g, u)] = synthesize_paths(dep, g, u, rng, cfg)
    return out


@dataclass
class RealizationContext:
    """Everything shared by the allocation modes within one realization."""

    dep: Deployment
    inputs: AllocationInputs
    initial_gnbs: dict


def prepare_realization(cfg: NetworkConfig, realization: int) -> RealizationContext:
    """Deploy, synthesize channels, run the beam sweep, build row caches."""
    dep = generate_deployment(cfg, realization)
    paths = _pair_paths(cfg, dep)

    channels = {}
    for (g, u), plist in paths.items():
        if plist:
            channels[(g, u)] = assemble_channel(
                plist, cfg, dep.gnb_panel_orientations[g],
                dep.ue_panel_orientations[u])

    gnb_books = {g: default_full_codebook(cfg.n_q_sweep_bits, cfg.n_t,
                                          dep.gnb_panel_orientations[g])
                 for g in range(dep.n_gnbs)}
    ue_books = {u: default_full_codebook(cfg.n_q_sweep_bits, cfg.n_r,
                                         dep.ue_panel_orientations[u])
                for u in range(dep.n_ues)}

    sweeps = {}
    for u in range(dep.n_ues):
        per_gnb = {g: channels.get((g, u)) for g in range(dep.n_gnbs)}
        sweeps[u] = sweep(u, per_gnb, gnb_books, ue_books[u], cfg.p_max_w,
                          cfg.noise_w, cfg.detection_floor_db)

    grid = estimation_grid(cfg.n_q_csi_bits)
    if grid.is_exact:
        est_channels = channels
    else:
        est_channels = {}
        for (g, u), ch in channels.items():
            qpaths = quantize_paths(ch.exact_paths, grid)
            est_channels[(g, u)] = assemble_channel(
                qpaths, cfg, dep.gnb_panel_orientations[g],
                dep.ue_panel_orientations[u])

    true_rows = _RowCache(channels, ue_books)
    est_rows = true_rows if est_channels is channels else _RowCache(
        est_channels, ue_books)
    # materialize every (UE, gNB) row matrix up front: the combined rows
    # w_c^H H are channel data shared by all allocation modes, and every
    # mode ends up touching every pair through inter-cell interference
    for u in range(dep.n_ues):
        for g in range(dep.n_gnbs):
            true_rows.rows(u, g)
            est_rows.rows(u, g)

    # all modes share one gNB codebook object when orientations are common
    gnb_book = gnb_books[0] if dep.n_gnbs else None
    inputs = AllocationInputs(
        cfg=cfg, n_gnbs=dep.n_gnbs, n_ues=dep.n_ues, sweeps=sweeps,
        true_row_fn=true_rows, est_row_fn=est_rows,
        gnb_book=gnb_book, ue_book=ue_books)
    return RealizationContext(dep=dep, inputs=inputs,
                              initial_gnbs=_initial_gnbs(sweeps))


def run_realization(ctx: RealizationContext, mode: AllocMode,
                    cfg: NetworkConfig, realization: int) -> RealizationResult:
    """Allocate with one mode and evaluate the resulting link reports."""
    if mode is AllocMode.CBF_TDMA:
        rng = np.random.default_rng(
            np.random.SeedSequence(cfg.seed, spawn_key=(2, realization)))
        alloc, reports = allocate_cbf_tdma(ctx.inputs, rng)
        summary = summarize(reports, cfg)
    else:
        alloc = allocate(ctx.inputs, mode)
        reports, summary = network_report(
            alloc.serving, alloc.per_gnb, alloc.states,
            ctx.inputs.true_row_fn, cfg, ctx.dep.n_ues, alloc.initial_gnbs)
    return RealizationResult(realization=realization, mode=mode,
                             allocation=alloc, reports=reports,
                             summary=summary)


def run_campaign(cfg: NetworkConfig, modes: list,
                 n_realizations: Optional[int] = None) -> CampaignResult:
    """Run every mode over paired realizations (shared channels and sweeps)."""
    cfg.validate()
    modes = [AllocMode(m) if isinstance(m, str) else m for m in modes]
    n_real = cfg.n_realizations if n_realizations is None else n_realizations
    result = CampaignResult(cfg=cfg, modes=list(modes))
    timings = {m.value: 0.0 for m in modes}
    for r in range(n_real):
        ctx = prepare_realization(cfg, r)
        for mode in modes:
            t0 = time.perf_counter()
            result.results.append(run_realization(ctx, mode, cfg, r))
            timings[mode.value] += time.perf_counter() - t0
    result.timings_s = timings
    return result


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isinf(value):
            return "-inf" if value < 0 else "inf"
        return format(value, ".12g")
    return str(value)


def emit(result: CampaignResult, out_dir: str) -> dict:
    """Write records.csv, summary.json and timings.json; returns the paths.

    Records and summary are byte-identical across same-seed runs; wall-clock
    timings live in their own file so they never perturb that guarantee.
    """
    os.makedirs(out_dir, exist_ok=True)
    records_path = os.path.join(out_dir, "records.csv")
    with open(records_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        ordered = sorted(result.results,
                         key=lambda rr: (rr.realization, rr.mode.value))
        for rr in ordered:
            for rep in rr.reports:
                writer.writerow([
                    rr.realization, rr.mode.value, rep.ue,
                    _fmt(rep.served), rep.gnb, rep.gnb_beam, rep.ue_beam,
                    rep.alloc_rank, _fmt(rep.is_los), _fmt(rep.is_handover),
                    _fmt(rep.rss_w), _fmt(rep.i_intra_w), _fmt(rep.i_inter_w),
                    _fmt(rep.noise_w), _fmt(rep.sinr_db), _fmt(rep.inr_db),
                    _fmt(rep.snr_db), _fmt(rep.rate_bps)])

    cfg_dump = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
                for k, v in asdict(result.cfg).items()}

    def _jsonable(value):
        if isinstance(value, float) and not math.isfinite(value):
            return _fmt(value)
        if isinstance(value, dict):
            return {k: _jsonable(v) for k, v in value.items()}
        return value

    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg_dump,
        "modes": {m.value: _jsonable(result.mode_summary(m))
                  for m in result.modes},
    }
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False,
                  default=str)
        fh.write("\n")

    timings_path = os.path.join(out_dir, "timings.json")
    with open(timings_path, "w") as fh:
        json.dump({"seconds_per_mode": result.timings_s}, fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    return {"records": records_path, "summary": summary_path,
            "timings": timings_path}


def desk_scale_config(**overrides) -> NetworkConfig:
    """Reduced geometry (4 gNBs, ~62 UEs, 64-element panels) for fast runs."""
    base = dict(area_side_m=250.0, n_t=64, n_r=16, n_realizations=20)
    base.update(overrides)
    return NetworkConfig(**base).validate()
