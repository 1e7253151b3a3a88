"""Discrete-event simulation of beacon-less (unslotted) IEEE 802.15.4 CSMA/CA
on a tree network.

Modelling rules shared with the analysis: fixed-length frames, zero
propagation delay, no capture (any overlap at the receiver destroys the
frame), no IFS, per-link Bernoulli frame errors, error-free ACKs, point
sampled CCA and a common carrier-sense range.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from scipy import stats as _st

from .timing import SYMBOLS_PER_SECOND, MacParams
from .topology import NetworkSpec

# event kinds, listed in same-instant processing order: transmissions end
# before anything starts, and starts before any CCA samples the channel
TX_END, ACK_END, TX_START, ACK_START, RESOLVE, ARRIVAL, CCA = range(7)

NODE_METRICS = ("alpha", "gamma", "p", "delta", "theta", "nu", "q", "b", "beta",
                "sojourn")
SOURCE_METRICS = ("delivery", "e2e_delay")


@dataclass
class SimConfig:
    net: NetworkSpec
    params: MacParams
    measurement: float                 # symbol times
    warmup: float | None = None        # symbol times; None -> default rule
    seed: int = 1
    replications: int = 1
    cca_sample: str = "end"            # "end" or "start" of the 8-symbol CCA
    ack_occupies_channel: bool = True
    debug: bool = False
    workers: int = 1

    def __post_init__(self):
        if not self.measurement > 0:
            raise ValueError("measurement must be > 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.warmup is None:
            self.warmup = max(0.1 * self.measurement, 1e5)
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        if self.cca_sample not in ("end", "start"):
            raise ValueError("cca_sample must be 'end' or 'start'")


@dataclass
class RunStats:
    """One replication. Rates are per second and delays in seconds."""

    seed: int
    node: dict[int, dict[str, float]]
    source: dict[int, dict[str, float]]
    counters: dict[int, dict[str, int]]
    events: int

    def conservation_ok(self) -> bool:
        return all(c["generated"] + c["received"] ==
                   c["forwarded"] + c["discarded"] + c["lost"] + c["queued"]
                   for c in self.counters.values())


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float
    n: int


@dataclass
class SimStats:
    node: dict[int, dict[str, Estimate]]
    source: dict[int, dict[str, Estimate]]
    runs: list[RunStats] = field(default_factory=list)


class ProtocolViolation(AssertionError):
    pass


def _div(a, b):
    return a / b if b > 0 else math.nan


def run(cfg: SimConfig, seed: int | None = None) -> RunStats:
    """Simulate one replication."""
    net, prm = cfg.net, cfg.params
    seed = cfg.seed if seed is None else seed
    ids = net.all_ids
    idx = {n: k for k, n in enumerate(ids)}
    N = len(ids)
    sink = idx[net.sink]
    parent = [-1] * N
    lam = [0.0] * N
    lerr = [0.0] * N
    for n, spec in net.nodes.items():
        parent[idx[n]] = idx[spec.parent]
        lam[idx[n]] = spec.lam
        lerr[idx[n]] = spec.link_error
    omega = [tuple(idx[j] for j in sorted(net.omega(n))) for n in ids]
    # receivers whose interference region contains node k
    affects = [tuple(sorted(set(omega[k]) | {k})) for k in range(N)]

    r_arr = [random.Random(f"{seed}/{n}/arrivals") for n in ids]
    r_bo = [random.Random(f"{seed}/{n}/backoff") for n in ids]
    r_err = [random.Random(f"{seed}/{n}/noise") for n in ids]

    slot = prm.slot_symbols
    min_be, max_be = prm.mac_min_be, prm.mac_max_be
    max_nb = prm.max_csma_backoffs
    max_retries = prm.max_frame_retries if prm.ack_enabled else 0
    Tx = float(prm.data_symbols)
    ta = float(prm.turnaround_symbols)
    ack_len = float(prm.ack_symbols)
    ack_mode = prm.ack_enabled
    ack_phys = ack_mode and cfg.ack_occupies_channel
    if cfg.cca_sample == "end":
        cca_lead, after_fail, to_tx = float(prm.cca_symbols), 0.0, ta
    else:
        cca_lead, after_fail, to_tx = 0.0, float(prm.cca_symbols), prm.cca_symbols + ta
    debug = cfg.debug

    warm = float(cfg.warmup)
    end = warm + float(cfg.measurement)
    measuring = warm <= 0.0

    queue = [deque() for _ in range(N)]
    stage = [0] * N
    be = [min_be] * N
    retries = [0] * N
    heard = [0] * N            # active transmitters within CS range
    own_tx = [0] * N
    ack_ok = [False] * N
    attempt_ccas = [0] * N
    active = []                # receptions in progress: [sender, receiver, corrupted]
    current_rx = [None] * N    # sender's data reception record
    tx_log = {}                # debug: transmitter -> number of active intervals

    # whole-run conservation counters
    generated = [0] * N
    received = [0] * N
    forwarded = [0] * N
    discarded = [0] * N
    lost = [0] * N

    # measurement-window statistics
    ccas = [0] * N
    cca_fail = [0] * N
    txs = [0] * N
    collided = [0] * N
    failed = [0] * N
    done = [0] * N
    drops = [0] * N
    good = [0] * N
    arrivals = [0] * N
    soj_sum = [0.0] * N
    ne_time = [0.0] * N
    tx_time = [0.0] * N
    ne_since = [None] * N
    tx_since = [None] * N
    src_gen_done = {}
    src_deliv = {}
    src_delay = {}

    heap = []
    seq = 0

    def push(t, kind, node, arg=None):
        nonlocal seq
        seq += 1
        heapq.heappush(heap, (t, kind, seq, node, arg))

    def backoff(i, t):
        push(t + r_bo[i].randrange(1 << be[i]) * slot + cca_lead, CCA, i)

    def begin_attempt(i, t):
        stage[i] = 0
        be[i] = min_be
        attempt_ccas[i] = 0
        backoff(i, t)

    def enqueue(i, pkt, t):
        q = queue[i]
        q.append(pkt)
        pkt[2] = t
        if len(q) == 1:
            ne_since[i] = t
            retries[i] = 0
            begin_attempt(i, t)

    def finish(i, t, outcome):
        # outcome: 0 forwarded, 1 discarded, 2 lost on air
        q = queue[i]
        pkt = q.popleft()
        if outcome == 0:
            forwarded[i] += 1
        elif outcome == 1:
            discarded[i] += 1
        else:
            lost[i] += 1
        if measuring:
            done[i] += 1
            soj_sum[i] += t - pkt[2]
            if outcome == 0:
                good[i] += 1
            elif outcome == 1:
                drops[i] += 1
        if outcome == 0:
            r = parent[i]
            received[r] += 1
            if r == sink:
                if pkt[3]:
                    o = pkt[0]
                    src_gen_done[o] = src_gen_done.get(o, 0) + 1
                    src_deliv[o] = src_deliv.get(o, 0) + 1
                    src_delay[o] = src_delay.get(o, 0.0) + (t - pkt[1])
            else:
                enqueue(r, pkt, t)
        elif pkt[3]:
            o = pkt[0]
            src_gen_done[o] = src_gen_done.get(o, 0) + 1
        if q:
            retries[i] = 0
            begin_attempt(i, t)
        else:
            if measuring:
                ne_time[i] += t - ne_since[i]
            ne_since[i] = None

    def start_tx(k, receiver, t):
        """Put k on the air towards ``receiver``; returns the reception record."""
        for rec in active:
            if rec[2] or rec[0] == k:
                continue
            if rec[1] in affects[k]:
                rec[2] = True
        rec = [k, receiver, heard[receiver] > 0 or own_tx[receiver] > 0]
        active.append(rec)
        own_tx[k] += 1
        for j in omega[k]:
            heard[j] += 1
        if debug:
            tx_log[k] = tx_log.get(k, 0) + 1
        return rec

    def stop_tx(k, rec):
        active.remove(rec)
        own_tx[k] -= 1
        for j in omega[k]:
            heard[j] -= 1
        if debug:
            tx_log[k] -= 1

    def reset_window(t):
        for i in range(N):
            for arr in (ccas, cca_fail, txs, collided, failed, done, drops, good,
                        arrivals):
                arr[i] = 0
            soj_sum[i] = ne_time[i] = tx_time[i] = 0.0
            if ne_since[i] is not None:
                ne_since[i] = t
            if tx_since[i] is not None:
                tx_since[i] = t

    for i in range(N):
        if lam[i] > 0:
            push(r_arr[i].expovariate(lam[i]), ARRIVAL, i)

    events = 0
    heappop = heapq.heappop
    while heap:
        t, kind, _, i, arg = heap[0]
        if t > end:
            break
        heappop(heap)
        events += 1
        if not measuring and t >= warm:
            measuring = True
            reset_window(warm)

        if kind == CCA:
            busy = heard[i] > 0
            if debug:
                truth = any(tx_log.get(j, 0) > 0 for j in omega[i])
                if truth != busy:
                    raise ProtocolViolation(f"channel state mismatch at node {ids[i]}")
            attempt_ccas[i] += 1
            if debug and attempt_ccas[i] > max_nb + 1:
                raise ProtocolViolation(f"too many CCAs at node {ids[i]}")
            if measuring:
                ccas[i] += 1
            if busy:
                if measuring:
                    cca_fail[i] += 1
                stage[i] += 1
                if stage[i] > max_nb:
                    finish(i, t + after_fail, 1)
                else:
                    if be[i] < max_be:
                        be[i] += 1
                    backoff(i, t + after_fail)
            else:
                push(t + to_tx, TX_START, i)

        elif kind == ARRIVAL:
            generated[i] += 1
            if measuring:
                arrivals[i] += 1
            enqueue(i, [ids[i], t, t, measuring], t)
            push(t + r_arr[i].expovariate(lam[i]), ARRIVAL, i)

        elif kind == TX_START:
            r = parent[i]
            current_rx[i] = start_tx(i, r, t)
            tx_since[i] = t
            if measuring:
                txs[i] += 1
            push(t + Tx, TX_END, i)

        elif kind == TX_END:
            rec = current_rx[i]
            stop_tx(i, rec)
            corrupt = rec[2]
            ok = not corrupt and not (lerr[i] > 0 and r_err[i].random() < lerr[i])
            if measuring:
                if corrupt:
                    collided[i] += 1
                if not ok:
                    failed[i] += 1
            if not ack_mode:
                if measuring:
                    tx_time[i] += t - tx_since[i]
                tx_since[i] = None
                finish(i, t, 0 if ok else 2)
            else:
                ack_ok[i] = False
                if ok:
                    if ack_phys:
                        push(t + ta, ACK_START, parent[i], i)
                    else:
                        ack_ok[i] = True
                push(t + ta + ack_len, RESOLVE, i)

        elif kind == ACK_START:
            # i acknowledges arg; a node already on the air cannot
            if own_tx[i] == 0:
                push(t + ack_len, ACK_END, i, start_tx(i, arg, t))

        elif kind == ACK_END:
            stop_tx(i, arg)
            ack_ok[arg[1]] = not arg[2]

        elif kind == RESOLVE:
            if measuring:
                tx_time[i] += t - tx_since[i]
            tx_since[i] = None
            if ack_ok[i]:
                finish(i, t, 0)
            else:
                retries[i] += 1
                if retries[i] > max_retries:
                    finish(i, t, 1)
                else:
                    begin_attempt(i, t)

    t_end = end
    for i in range(N):
        if measuring and ne_since[i] is not None:
            ne_time[i] += t_end - ne_since[i]
        if measuring and tx_since[i] is not None:
            tx_time[i] += t_end - tx_since[i]
    if not measuring:
        reset_window(t_end)

    M = end - max(warm, 0.0)
    per_s = SYMBOLS_PER_SECOND
    node_out, counters = {}, {}
    for n in net.ids:
        i = idx[n]
        bo = ne_time[i] - tx_time[i]
        node_out[n] = {
            "alpha": _div(cca_fail[i], ccas[i]),
            "gamma": _div(failed[i], txs[i]),
            "p": _div(collided[i], txs[i]),
            "delta": _div(drops[i], done[i]),
            "theta": good[i] / M * per_s,
            "nu": arrivals[i] / M * per_s,
            "q": ne_time[i] / M,
            "b": _div(bo, ne_time[i]),
            "beta": _div(ccas[i], bo) * per_s,
            "sojourn": _div(soj_sum[i], done[i]) / per_s,
        }
        counters[n] = {"generated": generated[i], "received": received[i],
                       "forwarded": forwarded[i], "discarded": discarded[i],
                       "lost": lost[i], "queued": len(queue[i])}
    counters[net.sink] = {"generated": 0, "received": received[sink],
                          "forwarded": received[sink], "discarded": 0, "lost": 0,
                          "queued": 0}
    src_out = {}
    for n in net.sources():
        i = idx[n]
        src_out[n] = {
            "delivery": _div(src_deliv.get(n, 0), src_gen_done.get(n, 0)),
            "e2e_delay": _div(src_delay.get(n, 0.0), src_deliv.get(n, 0)) / per_s,
        }
    return RunStats(seed, node_out, src_out, counters, events)


def _estimate(values: list[float]) -> Estimate:
    vals = [v for v in values if not math.isnan(v)]
    n = len(vals)
    if n == 0:
        return Estimate(math.nan, math.nan, 0)
    mean = math.fsum(vals) / n
    if n < 2:
        return Estimate(mean, math.nan, n)
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    hw = float(_st.t.ppf(0.975, n - 1)) * math.sqrt(var / n)
    return Estimate(mean, hw, n)


def aggregate(runs: list[RunStats]) -> SimStats:
    first = runs[0]
    node = {n: {m: _estimate([r.node[n][m] for r in runs]) for m in NODE_METRICS}
            for n in first.node}
    source = {n: {m: _estimate([r.source[n][m] for r in runs]) for m in SOURCE_METRICS}
              for n in first.source}
    return SimStats(node, source, list(runs))


def _run_seed(args):
    cfg, seed = args
    return run(cfg, seed)


def replicate(cfg: SimConfig) -> SimStats:
    """Independent replications with seeds seed, seed+1, ...; results are
    aggregated in seed order regardless of ``cfg.workers``."""
    seeds = [cfg.seed + k for k in range(cfg.replications)]
    if cfg.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            runs = list(ex.map(_run_seed, [(cfg, s) for s in seeds]))
    else:
        runs = [run(cfg, s) for s in seeds]
    return aggregate(runs)
