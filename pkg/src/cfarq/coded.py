"""Analytic model of the cumulative-feedback ARQ protocol (window size 2).

A frame is two coded packets sent in consecutive slots; the receiver needs
both degrees of freedom and acknowledges cumulatively in every slot.  The
sender's per-frame evolution is a flow graph over the four-state composite
channel: a two-slot transmission round is classified into five outcomes
(frame confirmed / confirmation pending / one packet acknowledged /
immediate retransmission / retransmission on timer expiry), single-packet
repair rounds follow when exactly one acknowledgment got through, and
timer-driven wait loops absorb lost confirmations.

The transmission-count and delay generating functions are built by direct
composition of the closed-form graph reductions.  In the transmission-count
function z counts (re)transmission rounds; in the delay function z counts
elapsed slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Literal

import numpy as np

from .channel import CompositeChannel
from .msfg import Dual, DualMatrix, MatrixGain, pgf_stats

__all__ = [
    "ProtocolParameterError",
    "ProtocolParams",
    "RoundOutcome",
    "classify_round",
    "CfTransitionSet",
    "cf_transition_set",
    "Timing",
    "mgf_transmission",
    "mgf_delay",
    "throughput",
    "mean_delay",
    "cf_erasure_rate",
]

# The self-loop gains come in two timing conventions that agree exactly on
# memoryless channels and differ slightly in how many channel steps a
# retransmission cycle advances:
#   "standard" - retransmission cycles advance the chain one step more than
#                the slots they occupy, and the pre-timeout wait in the
#                transmission-count function advances two steps per slot;
#   "slot"     - every counted slot advances the chain exactly one step,
#                matching the discrete-event simulator's slot walk.
Timing = Literal["standard", "slot"]


class ProtocolParameterError(ValueError):
    """Raised for protocol parameters outside their valid ranges."""


@dataclass(frozen=True)
class ProtocolParams:
    """Slot-level protocol parameters.

    k is the feedback latency parameter: the acknowledgment covering slot t
    becomes available k slots later, so a window of ``window`` packets has a
    round-trip time of k + window - 1 slots.  T is the retransmission
    timeout, counted from the start of each (re)transmission; it must exceed
    the round-trip time, leaving ``residual`` slots of extra grace.
    """

    k: int
    timeout: int
    window: int = 2

    def __post_init__(self):
        if self.window not in (1, 2):
            raise ProtocolParameterError(f"window must be 1 or 2, got {self.window}")
        if not isinstance(self.k, int) or self.k < 2:
            raise ProtocolParameterError(f"k must be an integer >= 2, got {self.k!r}")
        if not isinstance(self.timeout, int) or self.timeout <= self.rtt:
            raise ProtocolParameterError(
                f"timeout must be an integer greater than the round-trip time {self.rtt}, got {self.timeout!r}"
            )

    @property
    def rtt(self) -> int:
        return self.k + self.window - 1

    @property
    def residual(self) -> int:
        return self.timeout - self.rtt

    @property
    def dof_needed(self) -> int:
        return self.window


class RoundOutcome(Enum):
    """Sender-side outcome of one two-packet transmission round."""

    COMPLETE = "complete"  # both packets acknowledged
    CONFIRM_WAIT = "confirm-wait"  # both packets received, confirmation pending
    ONE_ACKED = "one-acked"  # exactly one acknowledgment delivered
    RETRANSMIT_NOW = "retransmit-now"  # full failure picture known, resend at once
    RETRANSMIT_TIMEOUT = "retransmit-timeout"  # missing information, wait for the timer


def classify_round(x1: int, y1: int, x2: int, y2: int) -> RoundOutcome:
    """Classify a round from its per-slot outcomes.

    x_i is the forward erasure flag of packet i, y_i the erasure flag of the
    feedback slot tied to packet i (1 means erased).  The rules:

    * both packets delivered and both acknowledgments through: frame done;
    * both packets delivered but an acknowledgment lost: the sender holds
      the frame and waits for a later cumulative acknowledgment;
    * exactly one acknowledgment delivered: one degree of freedom is
      confirmed and the sender moves to single-packet repair;
    * no acknowledgment delivered but every lost packet's rejection got
      through: the sender knows the full failure picture and retransmits
      immediately;
    * otherwise the sender lacks decisive feedback and waits for the timer.
    """
    acked = (x1 == 0 and y1 == 0) + (x2 == 0 and y2 == 0)
    if x1 == 0 and x2 == 0:
        return RoundOutcome.COMPLETE if acked == 2 else RoundOutcome.CONFIRM_WAIT
    if acked == 1:
        return RoundOutcome.ONE_ACKED
    nacked_all = (x1 == 0 or y1 == 0) and (x2 == 0 or y2 == 0)
    return RoundOutcome.RETRANSMIT_NOW if nacked_all else RoundOutcome.RETRANSMIT_TIMEOUT


@dataclass(frozen=True)
class CfTransitionSet:
    """Round-outcome transition matrices of the two-packet protocol.

    The ``*_1`` matrices classify a full two-packet round (products of two
    slot matrices); together with ``one_acked`` they partition the two-step
    transition law.  ``confirm_wait_1`` splits by how many packets are left
    unacknowledged (timer expiries retransmit only those).  The ``*_2``
    matrices govern single-packet repair rounds and equal the composite
    channel's one-slot matrices.
    """

    complete_1: np.ndarray
    confirm_wait_one: np.ndarray
    confirm_wait_two: np.ndarray
    retransmit_now_1: np.ndarray
    retransmit_timeout_1: np.ndarray
    one_acked: np.ndarray
    complete_2: np.ndarray
    confirm_wait_2: np.ndarray
    retransmit_now_2: np.ndarray
    retransmit_timeout_2: np.ndarray

    @property
    def confirm_wait_1(self) -> np.ndarray:
        return self.confirm_wait_one + self.confirm_wait_two

    def success_rev(self, n: int) -> np.ndarray:
        if n == 1:
            return self.complete_1 + self.retransmit_now_1
        return self.complete_2 + self.retransmit_now_2

    def error_rev(self, n: int) -> np.ndarray:
        if n == 1:
            return self.confirm_wait_1 + self.retransmit_timeout_1
        return self.confirm_wait_2 + self.retransmit_timeout_2


def cf_transition_set(c: CompositeChannel) -> CfTransitionSet:
    """Build the round transition matrices by enumerating slot outcomes.

    Every pair of slot observations contributes its two-step transition
    product to the bucket chosen by :func:`classify_round`, so the five
    round outcomes partition the squared transition matrix exactly.
    """
    dim = c.transition.shape[0]
    buckets = {outcome: np.zeros((dim, dim)) for outcome in RoundOutcome}
    wait_one = np.zeros((dim, dim))
    wait_two = np.zeros((dim, dim))
    for (x1, y1), (x2, y2) in product(c.obs.keys(), c.obs.keys()):
        outcome = classify_round(x1, y1, x2, y2)
        step = c.obs[x1, y1] @ c.obs[x2, y2]
        buckets[outcome] += step
        if outcome is RoundOutcome.CONFIRM_WAIT:
            if y1 + y2 == 2:
                wait_two += step
            else:
                wait_one += step
    return CfTransitionSet(
        complete_1=buckets[RoundOutcome.COMPLETE],
        confirm_wait_one=wait_one,
        confirm_wait_two=wait_two,
        retransmit_now_1=buckets[RoundOutcome.RETRANSMIT_NOW],
        retransmit_timeout_1=buckets[RoundOutcome.RETRANSMIT_TIMEOUT],
        one_acked=buckets[RoundOutcome.ONE_ACKED],
        complete_2=c.obs[0, 0],
        confirm_wait_2=c.obs[0, 1],
        retransmit_now_2=c.obs[1, 0],
        retransmit_timeout_2=c.obs[1, 1],
    )


def _mpow(m: np.ndarray, n: int) -> np.ndarray:
    return np.linalg.matrix_power(m, n)


def _geometric_partial(m: np.ndarray, n: int) -> np.ndarray:
    """I + m + ... + m^{n-1} (zero matrix for n = 0)."""
    out = np.zeros_like(m)
    acc = np.eye(m.shape[0])
    for _ in range(n):
        out += acc
        acc = acc @ m
    return out


def _check_cf(c: CompositeChannel, p: ProtocolParams):
    if p.window != 2:
        raise ProtocolParameterError("the cumulative-feedback model requires window = 2")
    if float((c.stationary @ c.fwd_success).sum()) <= 0.0:
        raise ProtocolParameterError(
            "forward channel never succeeds; no finite transmission time exists"
        )


def exit_gain_counts(
    done: np.ndarray,
    pendings: list[tuple[np.ndarray, float]],
    rev_ok: np.ndarray,
    rev_lost: np.ndarray,
    first_window: int,
    timeout: int,
) -> MatrixGain:
    """Exit gain of a retransmission state when z counts transmitted frames.

    ``done`` confirms the round outright; each ``(pending, weight)`` entry
    leaves confirmation outstanding, after which every slot gives one
    feedback chance.  The first ``first_window`` chances ride on the running
    timer; every later window of ``timeout`` chances is preceded by a
    retransmission of the still-unacknowledged packets, counting ``weight``
    frames (half per packet).
    """
    done_m = DualMatrix.constant(done)
    pending_ms = [(DualMatrix.constant(m), w) for m, w in pendings]
    pre = DualMatrix.constant(_geometric_partial(rev_lost, first_window) @ rev_ok)
    shift = DualMatrix.constant(_mpow(rev_lost, first_window))
    block = DualMatrix.constant(_mpow(rev_lost, timeout))
    window = DualMatrix.constant(_geometric_partial(rev_lost, timeout) @ rev_ok)

    def evaluate(z: Dual) -> DualMatrix:
        out = done_m
        for pending_m, weight in pending_ms:
            zw = z**weight
            loop = block.scale(zw).inverse_of_identity_minus()
            out = out + pending_m @ (pre + shift @ loop @ window.scale(zw))
        return out

    return MatrixGain(evaluate, done_m.dim)


def exit_gain_slots(
    done: np.ndarray,
    pending: np.ndarray,
    rev_ok: np.ndarray,
    rev_lost: np.ndarray,
) -> MatrixGain:
    """Exit gain of a retransmission state when z counts slots.

    Each feedback chance while waiting for confirmation costs one slot;
    timer-driven retransmissions add no delay of their own because any later
    delivered acknowledgment still ends the frame.
    """
    done_m = DualMatrix.constant(done)
    pending_m = DualMatrix.constant(pending)
    ok = DualMatrix.constant(rev_ok)
    lost = DualMatrix.constant(rev_lost)

    def evaluate(z: Dual) -> DualMatrix:
        wait = lost.scale(z).inverse_of_identity_minus()
        return done_m.scale(z) + pending_m.scale(z) @ wait @ ok.scale(z)

    return MatrixGain(evaluate, done_m.dim)


def mgf_transmission(c: CompositeChannel, p: ProtocolParams, timing: Timing = "standard") -> MatrixGain:
    """Matrix generating function of rounds transmitted per delivered frame."""
    _check_cf(c, p)
    ts = cf_transition_set(c)
    pmat, k, d, rtt = c.transition, p.k, p.residual, p.rtt
    if timing == "standard":
        wait_full = _mpow(pmat @ pmat, d)
        advance_full = _mpow(pmat, rtt)
        wait_repair = _mpow(pmat, d - 1)
    else:
        wait_full = _mpow(pmat, d)
        advance_full = _mpow(pmat, k)
        wait_repair = _mpow(pmat, d + 1)
    loop_full = DualMatrix.constant((ts.retransmit_now_1 + ts.retransmit_timeout_1 @ wait_full) @ advance_full)
    loop_repair = DualMatrix.constant((ts.retransmit_now_2 + ts.retransmit_timeout_2 @ wait_repair) @ _mpow(pmat, k))
    prefix = DualMatrix.constant(_mpow(pmat, k))
    split = DualMatrix.constant(ts.one_acked)
    exit_full = exit_gain_counts(
        ts.complete_1,
        [(ts.confirm_wait_one, 0.5), (ts.confirm_wait_two, 1.0)],
        c.rev_success,
        c.rev_error,
        d,
        p.timeout,
    )
    exit_repair = exit_gain_counts(
        ts.complete_2, [(ts.confirm_wait_2, 0.5)], c.rev_success, c.rev_error, d - 1, p.timeout
    )

    def evaluate(z: Dual) -> DualMatrix:
        # a single-packet repair transmission counts half a frame, so frame
        # counts stay comparable with the one-packet baseline: the mean is
        # packet transmissions per delivered packet in both protocols
        half = z**0.5
        inv_full = loop_full.scale(z).inverse_of_identity_minus()
        inv_repair = loop_repair.scale(half).inverse_of_identity_minus()
        bracket = exit_full(z) + split.scale(half) @ inv_repair @ exit_repair(z)
        return prefix.scale(z) @ inv_full @ bracket

    return MatrixGain(evaluate, prefix.dim)


def mgf_delay(c: CompositeChannel, p: ProtocolParams, timing: Timing = "standard") -> MatrixGain:
    """Matrix generating function of slots from first transmission to acknowledgment."""
    _check_cf(c, p)
    ts = cf_transition_set(c)
    pmat, k, d, rtt = c.transition, p.k, p.residual, p.rtt
    now_full = DualMatrix.constant(ts.retransmit_now_1)
    late_full = DualMatrix.constant(ts.retransmit_timeout_1 @ _mpow(pmat, d))
    now_repair = DualMatrix.constant(ts.retransmit_now_2)
    late_repair = DualMatrix.constant(ts.retransmit_timeout_2 @ _mpow(pmat, d + 1))
    adv_full = DualMatrix.constant(_mpow(pmat, rtt if timing == "standard" else k))
    adv_repair = DualMatrix.constant(_mpow(pmat, rtt - 1))
    prefix = DualMatrix.constant(_mpow(pmat, k))
    split = DualMatrix.constant(ts.one_acked)
    exit_full = exit_gain_slots(ts.complete_1, ts.confirm_wait_1, c.rev_success, c.rev_error)
    exit_repair = exit_gain_slots(ts.complete_2, ts.confirm_wait_2, c.rev_success, c.rev_error)

    def evaluate(z: Dual) -> DualMatrix:
        # loops are cut at the observation point (observe, then advance the
        # pipeline), which is the only rotation that conserves probability
        # against the observation-based exit gains
        loop_full = (now_full.scale(z) + late_full.scale(z ** (1 + d))) @ adv_full.scale(z**rtt)
        loop_repair = (now_repair.scale(z) + late_repair.scale(z ** (d + 2))) @ adv_repair.scale(z ** (rtt - 1))
        inv_full = loop_full.inverse_of_identity_minus()
        inv_repair = loop_repair.inverse_of_identity_minus()
        bracket = exit_full(z) + split.scale(z) @ inv_repair @ exit_repair(z)
        return prefix.scale(z**k) @ inv_full @ bracket

    return MatrixGain(evaluate, prefix.dim)


def throughput(c: CompositeChannel, p: ProtocolParams, timing: Timing = "standard") -> float:
    """Delivered frames per transmitted frame: the reciprocal mean round count."""
    mean, _ = pgf_stats(mgf_transmission(c, p, timing), c)
    return 1.0 / mean


def mean_delay(c: CompositeChannel, p: ProtocolParams, timing: Timing = "standard") -> float:
    """Expected slots from first transmission to the confirming acknowledgment."""
    mean, _ = pgf_stats(mgf_delay(c, p, timing), c)
    return mean


def cf_erasure_rate(e: float) -> float:
    """Effective erasure rate of a two-packet frame on a symmetric memoryless link.

    Equals sqrt(e^4 + 2 e^3 (1 - e)) and is never below e^2.
    """
    if not 0.0 <= e <= 1.0 or not math.isfinite(e):
        raise ProtocolParameterError(f"erasure rate must be in [0, 1], got {e!r}")
    return math.sqrt(e**4 + 2.0 * e**3 * (1.0 - e))
