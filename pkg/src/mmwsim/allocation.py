"""BPL allocation engines: default 5G-NR, distributed/centralized
interference-aware allocation, the exhaustive oracle, and CBF TDMA."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import metrics
from .beamsweep import BeamPairLink, initial_association
from .codebook import FullCodebook
from .csi import EffectiveChannel
from .errors import CapacityError, GuardRailError, RankDeficiencyError
from .metrics import column_powers
from .precoder import (GnbPrecoderState, compose, dbf_from_rows, rf_stage,
                       zf_stage)
from .scenario import NetworkConfig


class AllocMode(str, Enum):
    FIVEG_NR = "5gnr"
    DIABA = "diaba"
    CIABA = "ciaba"
    ORACLE = "oracle"
    DBF_5GNR = "dbf"
    CBF_TDMA = "cbf-tdma"

    @property
    def uses_dbf(self) -> bool:
        return self is AllocMode.DBF_5GNR


MU_MIMO_MODES = (AllocMode.FIVEG_NR, AllocMode.DIABA, AllocMode.CIABA,
                 AllocMode.ORACLE, AllocMode.DBF_5GNR)


@dataclass
class CandidateSet:
    """RSS-sorted candidate BPLs a UE may monitor, truncated to n_csi_rs."""

    ue: int
    bpls: list


@dataclass
class Allocation:
    """Finalized network-wide allocation with per-gNB precoder state."""

    serving: dict                    # ue -> BeamPairLink
    per_gnb: dict                    # gnb -> ordered served UE list
    mode: AllocMode
    states: dict = field(default_factory=dict)        # gnb -> GnbPrecoderState
    initial_gnbs: dict = field(default_factory=dict)  # ue -> initial-association gNB


@dataclass
class AllocationInputs:
    """Everything the allocators consume for one realization."""

    cfg: NetworkConfig
    n_gnbs: int
    n_ues: int
    sweeps: dict                     # ue -> sorted candidate list from beamsweep
    true_row_fn: Callable            # (ue, gnb, ue_beam) -> row or None
    est_row_fn: Callable             # same, against estimated channels
    gnb_book: FullCodebook
    ue_book: FullCodebook


def build_candidates(ue: int, sweep_result: list, mode: AllocMode,
                     initial_gnb: int, n_csi_rs) -> CandidateSet:
    """Monitored-BPL set per allocation mode.

    5G-NR monitors only the strongest BPL; dIABA the top candidates on the
    initial serving gNB; cIABA the top candidates network-wide.
    """
    if mode in (AllocMode.FIVEG_NR, AllocMode.DBF_5GNR, AllocMode.CBF_TDMA):
        best = initial_association(sweep_result)
        return CandidateSet(ue=ue, bpls=[best] if best else [])
    if mode is AllocMode.DIABA:
        pool = [b for b in sweep_result if b.gnb == initial_gnb]
    else:
        pool = list(sweep_result)
    # one monitored BPL per transmit beam: a CSI-RS resource tracks a gNB
    # beam, and the UE receives it with its best RX beam; weaker RX beams of
    # an already-listed TX beam are duplicates, not alternatives
    seen = set()
    dedup = []
    for b in pool:
        key = (b.gnb, b.gnb_beam)
        if key not in seen:
            seen.add(key)
            dedup.append(b)
    pool = dedup
    if math.isfinite(n_csi_rs):
        pool = pool[:int(n_csi_rs)]
    return CandidateSet(ue=ue, bpls=pool)


class _Engine:
    """Mutable allocation state with incremental SINR bookkeeping.

    Signal/intra/inter powers are tracked per UE; rebuilding one gNB's
    precoder touches only that gNB's contributions.
    """

    def __init__(self, inputs: AllocationInputs, use_dbf: bool):
        cfg = inputs.cfg
        self.inputs = inputs
        self.use_dbf = use_dbf
        self.noise = cfg.noise_w
        self.p_max = cfg.p_max_w
        self.sinr_min_lin = 10 ** (cfg.sinr_min_db / 10.0)
        self.n_rf_total = 4 * cfg.n_t if use_dbf else cfg.n_rf_gnb
        self.serving: dict[int, BeamPairLink] = {}
        self.per_gnb: dict[int, list[int]] = {g: [] for g in range(inputs.n_gnbs)}
        self.states: dict[int, Optional[GnbPrecoderState]] = {
            g: None for g in range(inputs.n_gnbs)}
        self.sig: dict[int, float] = {}
        self.intra: dict[int, float] = {}
        self.inter: dict[int, dict[int, float]] = {}
        self._version = {g: 0 for g in range(inputs.n_gnbs)}
        self._inter_memo: dict = {}
        self._bound_memo: dict = {}
        self.has_row_matrices = hasattr(inputs.true_row_fn, "rows")

    # -- capacity -------------------------------------------------------

    def capacity_ok(self, bpl: BeamPairLink) -> bool:
        served = self.per_gnb[bpl.gnb]
        if len(served) + 1 > self.n_rf_total:
            return False
        if self.use_dbf:
            return True
        book = self.inputs.gnb_book
        panel = int(book.panel[bpl.gnb_beam])
        on_panel = sum(1 for u in served
                       if int(book.panel[self.serving[u].gnb_beam]) == panel)
        return on_panel + 1 <= self.inputs.cfg.n_rf_gnb_sec

    # -- precoder construction -------------------------------------------

    def _est_row(self, ue: int, gnb: int, ue_beam: int) -> np.ndarray:
        row = self.inputs.est_row_fn(ue, gnb, ue_beam)
        if row is None:
            row = np.zeros(4 * self.inputs.cfg.n_t, dtype=complex)
        return row

    def _true_row(self, ue: int, gnb: int, ue_beam: int) -> np.ndarray:
        row = self.inputs.true_row_fn(ue, gnb, ue_beam)
        if row is None:
            row = np.zeros(4 * self.inputs.cfg.n_t, dtype=complex)
        return row

    def _build_state(self, gnb: int) -> GnbPrecoderState:
        ues = self.per_gnb[gnb]
        bpls = [self.serving[u] for u in ues]
        if self.use_dbf:
            rows = np.vstack([self._est_row(u, gnb, b.ue_beam)
                              for u, b in zip(ues, bpls)])
            w = dbf_from_rows(rows, ues)
            return GnbPrecoderState(gnb=gnb, served=list(ues), w_rf=None,
                                    w_bb=None, w_combined=w,
                                    p_per_ue=self.p_max / len(ues))
        w_rf = rf_stage(bpls, self.inputs.gnb_book, self.inputs.cfg.n_rf_gnb_sec)
        eff = [EffectiveChannel(row=self._est_row(u, gnb, b.ue_beam) @ w_rf, ue=u)
               for u, b in zip(ues, bpls)]
        w_bb = zf_stage(eff, w_rf)
        return GnbPrecoderState(gnb=gnb, served=list(ues), w_rf=w_rf,
                                w_bb=w_bb, w_combined=compose(w_rf, w_bb),
                                p_per_ue=self.p_max / len(ues))

    # -- incremental metric bookkeeping -----------------------------------

    def rebuild(self, gnb: int, update_others: bool) -> None:
        """Rebuild one gNB's precoder and refresh the powers it contributes.

        ``update_others=False`` refreshes only the served UEs' signal/intra
        terms (enough for a distributed tentative check).
        """
        self._version[gnb] += 1
        ues = self.per_gnb[gnb]
        if not ues:
            self.states[gnb] = None
            for u in self.serving:
                self.inter.get(u, {}).pop(gnb, None)
            return
        state = self._build_state(gnb)  # may raise Capacity/RankDeficiency
        self.states[gnb] = state
        rows = np.vstack([self._true_row(u, gnb, self.serving[u].ue_beam)
                          for u in ues])
        powers = state.p_per_ue * column_powers(rows, state.w_combined)
        sums = powers.sum(axis=1)
        for i, u in enumerate(ues):
            self.sig[u] = float(powers[i, i])
            self.intra[u] = float(sums[i] - powers[i, i])
            self.inter.setdefault(u, {}).pop(gnb, None)
        if update_others:
            others = [u for u in self.serving if self.serving[u].gnb != gnb]
            if others:
                rows_o = np.vstack([
                    self._true_row(u, gnb, self.serving[u].ue_beam)
                    for u in others])
                contrib = (state.p_per_ue *
                           column_powers(rows_o, state.w_combined)).sum(axis=1)
                for u, c in zip(others, contrib):
                    self.inter.setdefault(u, {})[gnb] = float(c)

    def inter_vec(self, ue: int, gnb: int) -> Optional[np.ndarray]:
        """Interference one gNB's current precoder causes this UE, for every
        UE beam at once (memoized per precoder version).

        Requires the row provider to expose the per-beam row matrix; returns
        None when the gNB is silent or the UE has no channel toward it.
        """
        state = self.states[gnb]
        if state is None:
            return None
        key = (ue, gnb, self._version[gnb])
        vec = self._inter_memo.get(key)
        if vec is None:
            rows = self.inputs.true_row_fn.rows(ue, gnb)
            if rows is None:
                vec = 0.0
            else:
                vec = state.p_per_ue * column_powers(
                    rows, state.w_combined).sum(axis=1)
            self._inter_memo[key] = vec
        return None if isinstance(vec, float) else vec

    def _inter_from(self, ue: int, ue_beam: int, gnb: int) -> float:
        """Interference one gNB's current precoder causes this UE (memoized)."""
        if self.has_row_matrices:
            vec = self.inter_vec(ue, gnb)
            return 0.0 if vec is None else float(vec[ue_beam])
        state = self.states[gnb]
        if state is None:
            return 0.0
        key = (ue, ue_beam, gnb, self._version[gnb])
        val = self._inter_memo.get(key)
        if val is None:
            row = self._true_row(ue, gnb, ue_beam)
            val = float(state.p_per_ue *
                        column_powers(row[None, :], state.w_combined).sum())
            self._inter_memo[key] = val
        return val

    def init_inter(self, ue: int) -> None:
        bpl = self.serving[ue]
        self.inter[ue] = {
            g: self._inter_from(ue, bpl.ue_beam, g)
            for g in range(self.inputs.n_gnbs)
            if g != bpl.gnb and self.states[g] is not None}

    def snr_bound(self, ue: int, gnb: int, ue_beam: int) -> float:
        """Upper bound on any achievable SINR for this (UE beam, gNB) pair.

        Own signal power is at most P_max * |w_c^H H|^2 for a unit-norm
        precoder column, so candidates whose bound cannot beat the incumbent
        best (or the coverage threshold) are skipped without a tentative add.
        """
        key = (ue, gnb, ue_beam)
        val = self._bound_memo.get(key)
        if val is None:
            row = self.inputs.true_row_fn(ue, gnb, ue_beam)
            norm2 = 0.0 if row is None else float(
                np.real(np.vdot(row, row)))
            val = self.p_max * norm2 / self.noise
            self._bound_memo[key] = val
        return val

    def sinr_lin(self, ue: int) -> float:
        denom = self.intra[ue] + sum(self.inter.get(ue, {}).values()) + self.noise
        return self.sig[ue] / denom

    # -- snapshot / mutation ----------------------------------------------

    def snapshot(self):
        return (dict(self.serving),
                {g: list(l) for g, l in self.per_gnb.items()},
                dict(self.states),
                dict(self.sig), dict(self.intra),
                {u: dict(d) for u, d in self.inter.items()},
                dict(self._version))

    def restore(self, snap) -> None:
        (self.serving, self.per_gnb, self.states,
         self.sig, self.intra, self.inter, self._version) = snap

    def _add(self, bpl: BeamPairLink) -> None:
        self.serving[bpl.ue] = bpl
        self.per_gnb[bpl.gnb].append(bpl.ue)

    def try_candidate(self, bpl: BeamPairLink,
                      check_network_wide: bool) -> Optional[float]:
        """Tentatively allocate, check the coverage constraint, roll back.

        Returns the candidate's own linear SINR when no checked UE would be
        degraded below the threshold, else None.  Only the state the rebuild
        touches is saved and restored, keeping candidate scans cheap.
        """
        if not self.capacity_ok(bpl):
            return None
        g, ue = bpl.gnb, bpl.ue
        old_state = self.states[g]
        old_members = list(self.per_gnb[g])
        old_si = {u: (self.sig[u], self.intra[u]) for u in old_members}
        missing = object()
        old_inter_g = ({u: self.inter.get(u, {}).get(g, missing)
                        for u in self.serving} if check_network_wide else None)
        try:
            self._add(bpl)
            self.rebuild(g, update_others=check_network_wide)
            self.init_inter(ue)
            checked = (list(self.serving) if check_network_wide
                       else list(self.per_gnb[g]))
            own = self.sinr_lin(ue)
            ok = all(self.sinr_lin(u) >= self.sinr_min_lin for u in checked)
            return own if ok else None
        except (RankDeficiencyError, CapacityError):
            return None
        finally:
            self.serving.pop(ue, None)
            self.per_gnb[g] = old_members
            self.states[g] = old_state
            self.sig.pop(ue, None)
            self.intra.pop(ue, None)
            self.inter.pop(ue, None)
            for u, (s, i) in old_si.items():
                self.sig[u] = s
                self.intra[u] = i
            if old_inter_g is not None:
                for u, v in old_inter_g.items():
                    if u == ue:
                        continue
                    if v is missing:
                        self.inter.get(u, {}).pop(g, None)
                    else:
                        self.inter.setdefault(u, {})[g] = v

    def commit(self, bpl: BeamPairLink) -> bool:
        """Allocate for real; returns False (state unchanged) on rank failure."""
        if not self.capacity_ok(bpl):
            return False
        snap = self.snapshot()
        try:
            self._add(bpl)
            self.rebuild(bpl.gnb, update_others=True)
            self.init_inter(bpl.ue)
            return True
        except (RankDeficiencyError, CapacityError):
            self.restore(snap)
            return False

    def remove_many(self, ues: list) -> None:
        affected = set()
        for u in ues:
            bpl = self.serving.pop(u)
            self.per_gnb[bpl.gnb].remove(u)
            affected.add(bpl.gnb)
            self.sig.pop(u, None)
            self.intra.pop(u, None)
            self.inter.pop(u, None)
        for g in sorted(affected):
            while True:
                try:
                    self.rebuild(g, update_others=True)
                    break
                except RankDeficiencyError:
                    # borderline-conditioned survivor set; shed the weakest
                    # link on this gNB until the ZF rebuild is solvable
                    weakest = min(self.per_gnb[g],
                                  key=lambda u: (self.serving[u].rsrp, -u))
                    self.serving.pop(weakest)
                    self.per_gnb[g].remove(weakest)
                    self.sig.pop(weakest, None)
                    self.intra.pop(weakest, None)
                    self.inter.pop(weakest, None)

    def to_allocation(self, mode: AllocMode, initial_gnbs: dict) -> Allocation:
        return Allocation(serving=dict(self.serving),
                          per_gnb={g: list(l) for g, l in self.per_gnb.items()
                                   if l},
                          mode=mode,
                          states={g: s for g, s in self.states.items()
                                  if s is not None},
                          initial_gnbs=initial_gnbs)


def _ue_order(sweeps: dict) -> list:
    """UEs in descending order of their strongest swept RSRP."""
    covered = [(u, c[0].rsrp) for u, c in sweeps.items() if c]
    covered.sort(key=lambda t: (-t[1], t[0]))
    return [u for u, _ in covered]


def _initial_gnbs(sweeps: dict) -> dict:
    out = {}
    for u, cands in sweeps.items():
        best = initial_association(cands)
        if best is not None:
            out[u] = best.gnb
    return out


def _enforce_coverage(engine: _Engine, inputs: AllocationInputs) -> None:
    """Drop UEs until every allocated UE satisfies the coverage constraint.

    Uses the from-scratch evaluation that reporting uses, so finalized
    allocations are consistent with the emitted SINRs.
    """
    thresh = 10 ** (inputs.cfg.sinr_min_db / 10.0)
    while engine.serving:
        powers = metrics.evaluate_allocation(
            engine.serving, engine.per_gnb, engine.states,
            inputs.true_row_fn, engine.noise)
        viol = [u for u, (s, ia, ie) in powers.items()
                if s / (ia + ie + engine.noise) < thresh]
        if not viol:
            break
        engine.remove_many(viol)


def allocate_5gnr(inputs: AllocationInputs,
                  use_dbf: bool = False) -> Allocation:
    """Interference-agnostic baseline: everyone gets their strongest BPL.

    Admissions can push previously allocated UEs below the coverage
    threshold; such UEs are dropped and never revisited.
    """
    mode = AllocMode.DBF_5GNR if use_dbf else AllocMode.FIVEG_NR
    engine = _Engine(inputs, use_dbf=use_dbf)
    initial = _initial_gnbs(inputs.sweeps)
    for ue in _ue_order(inputs.sweeps):
        cands = build_candidates(ue, inputs.sweeps[ue], mode,
                                 initial.get(ue, -1), inputs.cfg.n_csi_rs)
        if not cands.bpls:
            continue
        if not engine.commit(cands.bpls[0]):
            continue
        # the new admission reshapes its gNB's precoder and radiates into
        # every cell; any allocated link that sinks below the threshold is
        # dropped immediately and never revisited
        thresh = engine.sinr_min_lin
        while True:
            viol = [u for u in list(engine.serving)
                    if engine.sinr_lin(u) < thresh]
            if not viol:
                break
            engine.remove_many(viol)
    _enforce_coverage(engine, inputs)
    return engine.to_allocation(mode, initial)


def allocate_iaba(inputs: AllocationInputs, mode: AllocMode) -> Allocation:
    """Interference-aware allocation, distributed or centralized.

    Each UE scans its monitored candidates; a candidate is provisionally
    feasible only if no already-allocated link (serving gNB only for the
    distributed variant, network-wide for the centralized one) would drop
    below the coverage threshold.  The feasible candidate with the highest
    own SINR is committed.
    """
    if mode not in (AllocMode.DIABA, AllocMode.CIABA):
        raise ValueError(f"allocate_iaba expects an IABA mode, got {mode}")
    network_wide = mode is AllocMode.CIABA
    engine = _Engine(inputs, use_dbf=False)
    initial = _initial_gnbs(inputs.sweeps)
    for ue in _ue_order(inputs.sweeps):
        cands = build_candidates(ue, inputs.sweeps[ue], mode,
                                 initial.get(ue, -1), inputs.cfg.n_csi_rs)
        best_bpl = None
        best_sinr = -math.inf
        # Upper-bound each candidate's achievable SINR: signal power is at
        # most P_max ||w_c^H H||^2, and interference from the other gNBs is
        # exact already (their precoders do not change on a tentative add).
        # Scanning in descending bound order lets the loop stop as soon as
        # no remaining candidate can beat the incumbent or the threshold.
        bounds = []
        if engine.has_row_matrices:
            vecs = {}
            total = 0.0
            for g in range(inputs.n_gnbs):
                v = engine.inter_vec(ue, g)
                if v is not None:
                    vecs[g] = v
                    total = total + v
            for b in cands.bpls:
                if isinstance(total, float):
                    inter = 0.0
                else:
                    inter = float(total[b.ue_beam])
                    own_vec = vecs.get(b.gnb)
                    if own_vec is not None:
                        inter -= float(own_vec[b.ue_beam])
                bounds.append(engine.snr_bound(ue, b.gnb, b.ue_beam)
                              * engine.noise / (engine.noise + inter))
        else:
            for b in cands.bpls:
                inter = sum(engine._inter_from(ue, b.ue_beam, g)
                            for g in range(inputs.n_gnbs)
                            if g != b.gnb and engine.states[g] is not None)
                bounds.append(engine.snr_bound(ue, b.gnb, b.ue_beam)
                              * engine.noise / (engine.noise + inter))
        order = sorted(range(len(cands.bpls)), key=lambda i: -bounds[i])
        for i in order:
            bpl, bound = cands.bpls[i], bounds[i]
            if bound < engine.sinr_min_lin or bound <= best_sinr:
                break
            own = engine.try_candidate(bpl, check_network_wide=network_wide)
            if own is not None and own > best_sinr:
                best_sinr = own
                best_bpl = bpl
        if best_bpl is not None and best_sinr >= engine.sinr_min_lin:
            engine.commit(best_bpl)
    _enforce_coverage(engine, inputs)
    return engine.to_allocation(mode, initial)


ORACLE_MAX_UES = 6
ORACLE_MAX_GNBS = 3
ORACLE_MAX_CANDIDATES = 4


def allocate_oracle(inputs: AllocationInputs) -> Allocation:
    """Exhaustive search over every BPL assignment (guard-railed).

    Enumerates each UE's monitored candidates plus the dropped option,
    keeps assignments satisfying all constraints, and returns the feasible
    assignment with the highest sum throughput (lexicographically first on
    ties).
    """
    cfg = inputs.cfg
    if inputs.n_gnbs > ORACLE_MAX_GNBS:
        raise GuardRailError(f"oracle limited to {ORACLE_MAX_GNBS} gNBs")
    if inputs.n_ues > ORACLE_MAX_UES:
        raise GuardRailError(f"oracle limited to {ORACLE_MAX_UES} UEs")
    initial = _initial_gnbs(inputs.sweeps)
    options: list[list] = []
    ue_ids = sorted(inputs.sweeps)
    for ue in ue_ids:
        cands = build_candidates(ue, inputs.sweeps[ue], AllocMode.CIABA,
                                 initial.get(ue, -1), cfg.n_csi_rs)
        if len(cands.bpls) > ORACLE_MAX_CANDIDATES:
            raise GuardRailError(
                f"oracle limited to {ORACLE_MAX_CANDIDATES} candidates per UE")
        options.append(cands.bpls + [None])

    thresh = 10 ** (cfg.sinr_min_db / 10.0)
    best_rate = -1.0
    best: Optional[tuple] = None
    for assignment in itertools.product(*options):
        result = _evaluate_assignment(assignment, ue_ids, inputs, thresh)
        if result is None:
            continue
        rate, serving, per_gnb, states = result
        if rate > best_rate:
            best_rate = rate
            best = (serving, per_gnb, states)
    serving, per_gnb, states = best if best else ({}, {}, {})
    return Allocation(serving=serving, per_gnb=per_gnb, mode=AllocMode.ORACLE,
                      states=states, initial_gnbs=initial)


def _evaluate_assignment(assignment, ue_ids, inputs: AllocationInputs,
                         thresh: float):
    """Feasibility + sum throughput of one complete oracle assignment."""
    cfg = inputs.cfg
    serving = {}
    per_gnb: dict[int, list[int]] = {}
    for ue, bpl in zip(ue_ids, assignment):
        if bpl is None:
            continue
        serving[ue] = bpl
        per_gnb.setdefault(bpl.gnb, []).append(ue)
    states = {}
    for g, ues in per_gnb.items():
        if len(ues) > cfg.n_rf_gnb:
            return None
        try:
            bpls = [serving[u] for u in ues]
            w_rf = rf_stage(bpls, inputs.gnb_book, cfg.n_rf_gnb_sec)
            eff = []
            for u, b in zip(ues, bpls):
                row = inputs.est_row_fn(u, g, b.ue_beam)
                if row is None:
                    row = np.zeros(4 * cfg.n_t, dtype=complex)
                eff.append(EffectiveChannel(row=row @ w_rf, ue=u))
            w_bb = zf_stage(eff, w_rf)
            states[g] = GnbPrecoderState(
                gnb=g, served=list(ues), w_rf=w_rf, w_bb=w_bb,
                w_combined=compose(w_rf, w_bb),
                p_per_ue=cfg.p_max_w / len(ues))
        except (CapacityError, RankDeficiencyError):
            return None
    powers = metrics.evaluate_allocation(serving, per_gnb, states,
                                         inputs.true_row_fn, cfg.noise_w)
    total = 0.0
    for u, (s, ia, ie) in powers.items():
        sinr = s / (ia + ie + cfg.noise_w)
        if sinr < thresh:
            return None
        total += metrics.throughput(10.0 * math.log10(sinr), cfg)
    return total, serving, per_gnb, states


CBF_SLOT_DRAWS = 10


def allocate_cbf_tdma(inputs: AllocationInputs,
                      rng: np.random.Generator) -> tuple[Allocation, list]:
    """CBF SU-MIMO TDMA reference: strongest BPL, full power, time sharing.

    Per-UE SINR averages interference over random co-slotted UEs on the
    other gNBs; throughput is divided by the serving gNB's UE count.  UEs
    whose expected SINR falls below the coverage threshold are dropped.
    Returns the allocation together with its per-UE link reports (the TDMA
    interference model is specific to this mode).
    """
    cfg = inputs.cfg
    initial = _initial_gnbs(inputs.sweeps)
    serving = {}
    per_gnb: dict[int, list[int]] = {g: [] for g in range(inputs.n_gnbs)}
    for ue, cands in sorted(inputs.sweeps.items()):
        best = initial_association(cands)
        if best is not None:
            serving[ue] = best
            per_gnb[best.gnb].append(ue)

    while True:
        reports_by_ue = _cbf_evaluate(serving, per_gnb, inputs, rng)
        viol = [u for u, r in reports_by_ue.items()
                if r.sinr_db < cfg.sinr_min_db]
        if not viol:
            break
        for u in viol:
            bpl = serving.pop(u)
            per_gnb[bpl.gnb].remove(u)

    reports = []
    for ue in range(inputs.n_ues):
        if ue in serving:
            reports.append(reports_by_ue[ue])
        else:
            reports.append(metrics.dropped_report(ue, cfg.noise_w))
    alloc = Allocation(serving=serving,
                       per_gnb={g: l for g, l in per_gnb.items() if l},
                       mode=AllocMode.CBF_TDMA, states={},
                       initial_gnbs=initial)
    return alloc, reports


def _cbf_evaluate(serving: dict, per_gnb: dict, inputs: AllocationInputs,
                  rng: np.random.Generator) -> dict:
    """Expected-SINR link reports under random TDMA slot alignment."""
    cfg = inputs.cfg
    book = inputs.gnb_book
    # one co-slotted transmit beam per (gNB, slot draw)
    slot_beam: dict[int, list[np.ndarray]] = {}
    for g, ues in per_gnb.items():
        if not ues:
            continue
        picks = rng.integers(0, len(ues), size=CBF_SLOT_DRAWS)
        slot_beam[g] = [book.matrix[:, serving[ues[k]].gnb_beam]
                        for k in picks]
    out = {}
    for ue, bpl in sorted(serving.items()):
        w = book.matrix[:, bpl.gnb_beam]
        row = inputs.true_row_fn(ue, bpl.gnb, bpl.ue_beam)
        sig = 0.0 if row is None else float(
            cfg.p_max_w * column_powers(row[None, :], w[:, None])[0, 0])
        inter = 0.0
        for g, beams in slot_beam.items():
            if g == bpl.gnb:
                continue
            row_g = inputs.true_row_fn(ue, g, bpl.ue_beam)
            if row_g is None:
                continue
            contrib = [float(cfg.p_max_w *
                             column_powers(row_g[None, :], b[:, None])[0, 0])
                       for b in beams]
            inter += float(np.mean(contrib))
        out[ue] = metrics.link_report(
            ue, bpl, (sig, 0.0, inter), cfg.noise_w, cfg,
            inputs.sweeps and _initial_gnbs(inputs.sweeps).get(ue, -1),
            time_share=len(per_gnb[bpl.gnb]))
    return out


def allocate(inputs: AllocationInputs, mode: AllocMode,
             rng: Optional[np.random.Generator] = None):
    """Run one allocation mode; CBF TDMA also returns its link reports."""
    if mode is AllocMode.FIVEG_NR:
        return allocate_5gnr(inputs)
    if mode is AllocMode.DBF_5GNR:
        return allocate_5gnr(inputs, use_dbf=True)
    if mode in (AllocMode.DIABA, AllocMode.CIABA):
        return allocate_iaba(inputs, mode)
    if mode is AllocMode.ORACLE:
        return allocate_oracle(inputs)
    if mode is AllocMode.CBF_TDMA:
        if rng is None:
            rng = np.random.default_rng(inputs.cfg.seed)
        return allocate_cbf_tdma(inputs, rng)
    raise ValueError(f"unknown allocation mode: {mode}")
