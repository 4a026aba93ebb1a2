"""Slot-synchronous Monte Carlo simulation of both ARQ protocols.

Each frame is simulated as a walk over sampled forward and reverse channel
outcomes: both chains advance one step per slot, transmission rounds read
the slots they occupy, and feedback is acted on once the round-trip latency
has passed.  Frames are independent; each starts from the same input-state
distribution the analytic model uses (the stationary law weighted by a
forward success).

Transmission counts are kept in packet units and reported in frame
equivalents, so the two-packet protocol's single-packet repairs weigh half
a frame and throughput is packet efficiency for both protocols.

The engine advances all in-flight frames of a batch in lock step, one
protocol event per iteration, with vectorized channel draws.  Frame batches
draw from their own seeded streams so runs are reproducible and batches
could be evaluated in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelHMM
from .coded import ProtocolParams, ProtocolParameterError

__all__ = [
    "DivergenceError",
    "ChannelTraceSampler",
    "SimStats",
    "simulate_cf_arq",
    "simulate_uncoded",
    "estimate_trace_erasure",
]

DEFAULT_SLOT_CAP = 10_000_000
_CHUNK = 8192

# phases of a frame's lifecycle
_ROUND, _REPAIR, _WAIT = 0, 1, 2


class DivergenceError(RuntimeError):
    """Raised when a frame exceeds the per-frame slot cap."""


class ChannelTraceSampler:
    """Deterministic per-slot sampler of one channel's erasure process.

    The hidden state path is generated run by run (sojourn times in a
    two-state chain are geometric, and states strictly alternate), which
    keeps long traces cheap.  The state carries over between calls.
    """

    def __init__(self, channel: ChannelHMM, rng_seed: int):
        self.channel = channel
        self.rng_seed = int(rng_seed)
        self._rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.rng_seed)))
        self._leave = np.array([channel.transition[0, 1], channel.transition[1, 0]])
        self._eps = np.array([
            channel.error[0].sum() / channel.transition[0].sum(),
            channel.error[1].sum() / channel.transition[1].sum(),
        ])
        self.current_state = int(self._rng.random() < channel.stationary[1])

    def sample(self, n_slots: int) -> np.ndarray:
        """Return erasure flags for the next ``n_slots`` slots."""
        if n_slots < 1:
            raise ValueError("n_slots must be >= 1")
        states = np.empty(n_slots, dtype=np.int8)
        pos = 0
        state = self.current_state
        while pos < n_slots:
            leave = self._leave[state]
            remaining = n_slots - pos
            if leave <= 0.0:
                run, completed = remaining, False
            else:
                drawn = int(self._rng.geometric(leave))
                run, completed = (drawn, True) if drawn <= remaining else (remaining, False)
            states[pos : pos + run] = state
            pos += run
            if completed:
                state = 1 - state
        self.current_state = int(state)
        return self._rng.random(n_slots) < self._eps[states]


def estimate_trace_erasure(sampler: ChannelTraceSampler, n_slots: int) -> float:
    """Empirical fraction of erased slots in a sampled trace."""
    return float(np.mean(sampler.sample(n_slots)))


@dataclass(frozen=True)
class SimStats:
    """Per-frame outcomes of a Monte Carlo run with summary statistics.

    ``throughput_estimate`` is delivered frames over transmitted frame
    equivalents, i.e. the reciprocal mean per-frame transmission count; its
    standard error comes from the delta method.  Delays are slots from first
    transmission to the confirming acknowledgment.
    """

    frames_completed: int
    total_transmissions: float
    per_frame_transmissions: np.ndarray = field(repr=False)
    per_frame_delay_slots: np.ndarray = field(repr=False)
    throughput_estimate: float
    mean_delay_estimate: float
    std_error_throughput: float
    std_error_delay: float

    @classmethod
    def from_samples(cls, tau: np.ndarray, delay: np.ndarray) -> "SimStats":
        n = tau.size
        mean_tau = float(tau.mean())
        se_tau = float(tau.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return cls(
            frames_completed=n,
            total_transmissions=float(tau.sum()),
            per_frame_transmissions=tau,
            per_frame_delay_slots=delay,
            throughput_estimate=1.0 / mean_tau,
            mean_delay_estimate=float(delay.mean()),
            std_error_throughput=se_tau / mean_tau**2,
            std_error_delay=float(delay.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        )


class _ChainSampler:
    """Vectorized state-jump and joint (outcome, state) draws for one link."""

    def __init__(self, channel: ChannelHMM):
        self.transition = channel.transition
        # outcome order per state row: (ok, ->G), (ok, ->B), (erased, ->G), (erased, ->B)
        rows = np.hstack([channel.success, channel.error])
        self.obs_cum = np.cumsum(rows, axis=1)[:, :3]
        self._jump_to_bad: dict[int, np.ndarray] = {}
        self.stationary_bad = float(channel.stationary[1])
        start = channel.stationary @ channel.success
        mass = start.sum()
        self.start_bad = float(start[1] / mass) if mass > 0.0 else self.stationary_bad

    def jump_prob(self, m: int) -> np.ndarray:
        if m not in self._jump_to_bad:
            self._jump_to_bad[m] = np.linalg.matrix_power(self.transition, m)[:, 1].copy()
        return self._jump_to_bad[m]

    def init_states(self, n: int, rng) -> np.ndarray:
        return (rng.random(n) < self.start_bad).astype(np.int8)

    def jump(self, states: np.ndarray, m: int, rng) -> np.ndarray:
        return (rng.random(states.size) < self.jump_prob(m)[states]).astype(np.int8)

    def observe(self, states: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
        u = rng.random(states.size)
        idx = (u[:, None] > self.obs_cum[states]).sum(axis=1)
        return (idx >> 1).astype(np.int8), (idx & 1).astype(np.int8)


def _mask(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    full = np.zeros(outer.size, dtype=bool)
    full[np.flatnonzero(outer)[inner]] = True
    return full


def _run_batch(fwd: _ChainSampler, rev: _ChainSampler, p: ProtocolParams, n: int, rng, slot_cap: int, coded: bool):
    k, t, d = p.k, p.timeout, p.residual
    window = 2 if coded else 1
    out_tau = np.empty(n, dtype=np.int64)
    out_delay = np.empty(n, dtype=np.int64)

    idx = np.arange(n)
    fs = fwd.init_states(n, rng)
    # reverse chain starts from its stationary law; only the forward link is
    # conditioned by the input-state weighting
    rs = (rng.random(n) < rev.stationary_bad).astype(np.int8)
    tau = np.full(n, window, dtype=np.int64)  # packet transmissions
    init_blanks = k if coded else k - 1
    delay = np.full(n, init_blanks, dtype=np.int64)
    phase = np.full(n, _ROUND, dtype=np.int8)
    wlimit = np.zeros(n, dtype=np.int64)
    wpos = np.zeros(n, dtype=np.int64)
    wcost = np.zeros(n, dtype=np.int64)  # packets per window-expiry retransmission
    jump = np.full(n, init_blanks, dtype=np.int64)

    while idx.size:
        for m in np.unique(jump):
            if m <= 0:
                continue
            sel = jump == m
            fs[sel] = fwd.jump(fs[sel], int(m), rng)
            rs[sel] = rev.jump(rs[sel], int(m), rng)
        jump[:] = 0
        done = np.zeros(idx.size, dtype=bool)

        rnd = phase == _ROUND
        if rnd.any():
            if coded:
                x1, nf = fwd.observe(fs[rnd], rng)
                x2, nf = fwd.observe(nf, rng)
                y1, nr = rev.observe(rs[rnd], rng)
                y2, nr = rev.observe(nr, rng)
                fs[rnd], rs[rnd] = nf, nr
                acked1 = (x1 == 0) & (y1 == 0)
                acked2 = (x2 == 0) & (y2 == 0)
                both_in = (x1 == 0) & (x2 == 0)
                complete = acked1 & acked2
                confirm = both_in & ~complete
                one_acked = ~both_in & (acked1 | acked2)
                rest = ~(both_in | one_acked)
                informed = ((x1 == 0) | (y1 == 0)) & ((x2 == 0) | (y2 == 0))

                fin = _mask(rnd, complete)
                delay[fin] += 1
                done[fin] = True
                cw = _mask(rnd, confirm)
                delay[cw] += 1
                phase[cw] = _WAIT
                wlimit[cw] = d
                wpos[cw] = 0
                wcost[cw] = 2
                oa = _mask(rnd, one_acked)
                tau[oa] += 1  # pipelined repair packet
                delay[oa] += 1
                phase[oa] = _REPAIR
                again = _mask(rnd, rest & informed)
                tau[again] += 2
                delay[again] += k + 2
                jump[again] = k
                late = _mask(rnd, rest & ~informed)
                tau[late] += 2
                delay[late] += t + 1
                jump[late] = k + d
            else:
                x, nf = fwd.observe(fs[rnd], rng)
                y, nr = rev.observe(rs[rnd], rng)
                fs[rnd], rs[rnd] = nf, nr
                ok = x == 0

                fin = _mask(rnd, ok & (y == 0))
                delay[fin] += 1
                done[fin] = True
                # delivered but unconfirmed: only duplicate retransmissions
                # solicit further acknowledgments
                dup = _mask(rnd, ok & (y == 1))
                delay[dup] += 1
                phase[dup] = _WAIT
                jump[dup] = t
                again = _mask(rnd, ~ok & (y == 0))
                tau[again] += 1
                delay[again] += k
                jump[again] = k - 1
                late = _mask(rnd, ~ok & (y == 1))
                tau[late] += 1
                delay[late] += t + 1
                jump[late] = t

        rep = phase == _REPAIR
        if rep.any():
            x, nf = fwd.observe(fs[rep], rng)
            y, nr = rev.observe(rs[rep], rng)
            fs[rep], rs[rep] = nf, nr

            fin = _mask(rep, (x == 0) & (y == 0))
            delay[fin] += 1
            done[fin] = True
            cw = _mask(rep, (x == 0) & (y == 1))
            delay[cw] += 1
            phase[cw] = _WAIT
            wlimit[cw] = d - 1
            wpos[cw] = 0
            wcost[cw] = 1
            again = _mask(rep, (x == 1) & (y == 0))
            tau[again] += 1
            delay[again] += k + 1
            jump[again] = k
            late = _mask(rep, (x == 1) & (y == 1))
            tau[late] += 1
            delay[late] += t + 1
            jump[late] = t

        wt = phase == _WAIT
        if wt.any():
            if coded:
                expired = wt & (wpos == wlimit)
                tau[expired] += wcost[expired]
                wpos[expired] = 0
                wlimit[expired] = t
                fs[wt] = fwd.jump(fs[wt], 1, rng)
                y, nr = rev.observe(rs[wt], rng)
                rs[wt] = nr
                delay[wt] += 1
                done[_mask(wt, y == 0)] = True
                wpos[_mask(wt, y == 1)] += 1
            else:
                tau[wt] += 1  # one duplicate per timeout
                fs[wt] = fwd.jump(fs[wt], 1, rng)
                y, nr = rev.observe(rs[wt], rng)
                rs[wt] = nr
                delay[wt] += t + 1
                done[_mask(wt, y == 0)] = True
                jump[_mask(wt, y == 1)] = t

        if np.any(delay > slot_cap):
            raise DivergenceError(f"a frame exceeded the per-frame slot cap of {slot_cap}")

        if done.any():
            out_tau[idx[done]] = tau[done]
            out_delay[idx[done]] = delay[done]
            keep = ~done
            idx, fs, rs, tau, delay = idx[keep], fs[keep], rs[keep], tau[keep], delay[keep]
            phase, wlimit, wpos, wcost, jump = phase[keep], wlimit[keep], wpos[keep], wcost[keep], jump[keep]

    return out_tau, out_delay


def _simulate(fwd: ChannelHMM, rev: ChannelHMM, p: ProtocolParams, n_frames: int, seed: int, slot_cap: int, coded: bool) -> SimStats:
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    fwd_s, rev_s = _ChainSampler(fwd), _ChainSampler(rev)
    taus, delays = [], []
    for chunk, start in enumerate(range(0, n_frames, _CHUNK)):
        n = min(_CHUNK, n_frames - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed), chunk))))
        tau, delay = _run_batch(fwd_s, rev_s, p, n, rng, slot_cap, coded)
        taus.append(tau)
        delays.append(delay)
    tau = np.concatenate(taus) / (2.0 if coded else 1.0)  # frame equivalents
    return SimStats.from_samples(tau, np.concatenate(delays))


def simulate_cf_arq(
    fwd: ChannelHMM,
    rev: ChannelHMM,
    p: ProtocolParams,
    n_frames: int,
    seed: int,
    slot_cap: int = DEFAULT_SLOT_CAP,
) -> SimStats:
    """Simulate two-packet frames with cumulative per-slot feedback."""
    if p.window != 2:
        raise ProtocolParameterError("cumulative-feedback simulation requires window = 2")
    return _simulate(fwd, rev, p, n_frames, seed, slot_cap, coded=True)


def simulate_uncoded(
    fwd: ChannelHMM,
    rev: ChannelHMM,
    p: ProtocolParams,
    n_frames: int,
    seed: int,
    slot_cap: int = DEFAULT_SLOT_CAP,
) -> SimStats:
    """Simulate the single-packet selective-repeat baseline."""
    if p.window != 1:
        raise ProtocolParameterError("the uncoded baseline requires window = 1")
    return _simulate(fwd, rev, p, n_frames, seed, slot_cap, coded=False)
