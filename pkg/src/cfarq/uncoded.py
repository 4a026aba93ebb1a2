"""Single-packet selective-repeat baseline with per-round feedback.

One packet per frame, round-trip time k, residual timer T - k.  Feedback
here is plain per-packet acknowledgment: every (re)transmission triggers
exactly one feedback opportunity, and a lost acknowledgment can only be
recovered by retransmitting after the timer runs out.  This is the
structural contrast to the cumulative scheme, whose receiver re-acknowledges
in every slot so that a lost acknowledgment costs at most a short wait.

A round either completes (packet and acknowledgment both through), turns
into duplicate retransmissions (packet delivered, acknowledgment lost),
retransmits immediately on a delivered rejection, or retransmits on timer
expiry.  Built from the composite-channel slot matrices and the same
reduction machinery as the two-packet protocol.
"""

from __future__ import annotations

import numpy as np

from .channel import CompositeChannel
from .coded import (
    ProtocolParams,
    ProtocolParameterError,
    Timing,
    _mpow,
)
from .msfg import Dual, DualMatrix, MatrixGain, pgf_stats

__all__ = [
    "uncoded_mgf_transmission",
    "uncoded_mgf_delay",
    "uncoded_throughput",
    "uncoded_mean_delay",
]


def _check(c: CompositeChannel, p: ProtocolParams):
    if p.window != 1:
        raise ProtocolParameterError("the uncoded baseline requires window = 1")
    if float((c.stationary @ c.fwd_success).sum()) <= 0.0:
        raise ProtocolParameterError(
            "forward channel never succeeds; no finite transmission time exists"
        )


def _pieces(c: CompositeChannel, p: ProtocolParams, timing: Timing):
    pmat, k, d = c.transition, p.k, p.residual
    if timing == "standard":
        retry_loop = (c.obs[1, 0] + c.obs[1, 1] @ _mpow(pmat, d)) @ _mpow(pmat, k)
    else:
        retry_loop = (c.obs[1, 0] + c.obs[1, 1] @ _mpow(pmat, d + 1)) @ _mpow(pmat, k - 1)
    # after a lost acknowledgment the packet is already delivered: each timer
    # expiry retransmits a duplicate whose only purpose is to solicit a fresh
    # acknowledgment one timeout later
    dup_miss = _mpow(pmat, p.timeout) @ c.rev_error
    dup_ack = _mpow(pmat, p.timeout) @ c.rev_success
    return retry_loop, dup_miss, dup_ack


def uncoded_mgf_transmission(c: CompositeChannel, p: ProtocolParams, timing: Timing = "standard") -> MatrixGain:
    """Matrix generating function of rounds per delivered packet."""
    _check(c, p)
    retry_loop, dup_miss, dup_ack = _pieces(c, p, timing)
    loop = DualMatrix.constant(retry_loop)
    prefix = DualMatrix.constant(_mpow(c.transition, p.k - 1))
    done = DualMatrix.constant(c.obs[0, 0])
    pending = DualMatrix.constant(c.obs[0, 1])
    miss = DualMatrix.constant(dup_miss)
    ack = DualMatrix.constant(dup_ack)

    def evaluate(z: Dual) -> DualMatrix:
        inv = loop.scale(z).inverse_of_identity_minus()
        dups = miss.scale(z).inverse_of_identity_minus() @ ack.scale(z)
        return prefix.scale(z) @ inv @ (done + pending @ dups)

    return MatrixGain(evaluate, prefix.dim)


def uncoded_mgf_delay(c: CompositeChannel, p: ProtocolParams, timing: Timing = "standard") -> MatrixGain:
    """Matrix generating function of slots to the confirming acknowledgment."""
    _check(c, p)
    pmat, k, d, t = c.transition, p.k, p.residual, p.timeout
    _, dup_miss, dup_ack = _pieces(c, p, timing)
    advance = DualMatrix.constant(_mpow(pmat, k - 1))
    now = DualMatrix.constant(c.obs[1, 0])
    late = DualMatrix.constant(c.obs[1, 1] @ _mpow(pmat, d + 1))
    prefix = DualMatrix.constant(_mpow(pmat, k - 1))
    done = DualMatrix.constant(c.obs[0, 0])
    pending = DualMatrix.constant(c.obs[0, 1])
    miss = DualMatrix.constant(dup_miss)
    ack = DualMatrix.constant(dup_ack)

    def evaluate(z: Dual) -> DualMatrix:
        # cycle cut at the observation point; see the delay gains of the
        # two-packet protocol
        loop = (now.scale(z) + late.scale(z ** (d + 2))) @ advance.scale(z ** (k - 1))
        inv = loop.inverse_of_identity_minus()
        dups = miss.scale(z ** (t + 1)).inverse_of_identity_minus() @ ack.scale(z ** (t + 1))
        return prefix.scale(z ** (k - 1)) @ inv @ (done.scale(z) + pending.scale(z) @ dups)

    return MatrixGain(evaluate, prefix.dim)


def uncoded_throughput(c: CompositeChannel, p: ProtocolParams, timing: Timing = "standard") -> float:
    """Delivered packets per transmitted packet."""
    mean, _ = pgf_stats(uncoded_mgf_transmission(c, p, timing), c)
    return 1.0 / mean


def uncoded_mean_delay(c: CompositeChannel, p: ProtocolParams, timing: Timing = "standard") -> float:
    """Expected slots from first transmission to the confirming acknowledgment."""
    mean, _ = pgf_stats(uncoded_mgf_delay(c, p, timing), c)
    return mean
