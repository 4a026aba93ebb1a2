"""Gilbert-Elliott erasure channel models and their forward x reverse composite.

A directional link is a two-state hidden Markov chain (good/bad) whose
per-slot erasure probability depends on the hidden state.  Splitting the
state-transition matrix by the observed outcome gives the success and error
matrices used by all downstream protocol analysis.  A bidirectional link pair
is combined into a single four-state chain via Kronecker products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelParameterError",
    "GilbertElliottParams",
    "ChannelHMM",
    "CompositeChannel",
    "build_ge_channel",
    "memoryless_channel",
    "compose_channels",
]

# Tolerance for algebraic identities checked at construction time.  Products
# of products accumulate roundoff, so derived-matrix checks get a looser bar.
ATOL = 1e-12
ATOL_PRODUCTS = 1e-10


class ChannelParameterError(ValueError):
    """Raised when channel parameters fall outside their valid ranges."""


def _check_probability(name: str, value: float) -> float:
    if not np.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ChannelParameterError(f"{name} must be in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class GilbertElliottParams:
    """Parameters of one directional Gilbert-Elliott channel.

    q is the good-to-bad transition probability, r the bad-to-good one
    (1/r is the mean error-burst length, so low r means bursty errors).
    eps_g and eps_b are the erasure probabilities in the good and bad state.
    """

    q: float
    r: float
    eps_g: float
    eps_b: float

    def __post_init__(self):
        for name in ("q", "r", "eps_g", "eps_b"):
            object.__setattr__(self, name, _check_probability(name, getattr(self, name)))
        if self.q + self.r == 0.0:
            raise ChannelParameterError(
                "q + r must be positive; the all-zero chain has no unique stationary distribution"
            )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelHMM:
    """A two-state erasure channel: transition matrix split by slot outcome.

    ``success + error == transition`` elementwise; ``stationary`` solves
    pi P = pi with entries summing to one; ``erasure_rate`` is the
    stationary fraction of erased slots.
    """

    transition: np.ndarray
    success: np.ndarray
    error: np.ndarray
    stationary: np.ndarray
    erasure_rate: float

    def __post_init__(self):
        for name in ("transition", "success", "error", "stationary"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        p, p0, p1 = self.transition, self.success, self.error
        if p.shape != (2, 2) or p0.shape != (2, 2) or p1.shape != (2, 2):
            raise ChannelParameterError("channel matrices must be 2x2")
        if np.any(p < -ATOL) or np.any(p0 < -ATOL) or np.any(p1 < -ATOL):
            raise ChannelParameterError("channel matrices must be nonnegative")
        if not np.allclose(p.sum(axis=1), 1.0, atol=ATOL):
            raise ChannelParameterError("transition matrix rows must sum to 1")
        if not np.allclose(p0 + p1, p, atol=ATOL):
            raise ChannelParameterError("success + error must equal transition")
        pi = self.stationary
        if not np.allclose(pi @ p, pi, atol=ATOL) or not np.isclose(pi.sum(), 1.0, atol=ATOL):
            raise ChannelParameterError("stationary vector must solve pi P = pi, pi 1 = 1")


def build_ge_channel(params: GilbertElliottParams) -> ChannelHMM:
    """Build the two-state channel model for the given burst parameters."""
    q, r = params.q, params.r
    eps = np.array([params.eps_g, params.eps_b])
    transition = np.array([[1.0 - q, q], [r, 1.0 - r]])
    success = transition @ np.diag(1.0 - eps)
    error = transition @ np.diag(eps)
    stationary = np.array([r, q]) / (q + r)
    erasure_rate = float(stationary @ eps)
    return ChannelHMM(transition, success, error, stationary, erasure_rate)


def memoryless_channel(e: float) -> ChannelHMM:
    """Channel whose erasures are i.i.d. Bernoulli(e).

    Realized with state-independent erasure probability and q = r = 0.5 so
    that the state sequence itself is i.i.d. as well.
    """
    _check_probability("e", e)
    return build_ge_channel(GilbertElliottParams(q=0.5, r=0.5, eps_g=e, eps_b=e))


@dataclass(frozen=True)
class CompositeChannel:
    """Joint four-state chain of independent forward and reverse channels.

    ``obs[(i, j)]`` is the transition matrix restricted to forward outcome i
    and reverse outcome j in the same slot; the four matrices partition
    ``transition``.  The one-sided aggregates marginalize the other link.
    """

    transition: np.ndarray
    obs: dict[tuple[int, int], np.ndarray]
    fwd_success: np.ndarray
    fwd_error: np.ndarray
    rev_success: np.ndarray
    rev_error: np.ndarray
    stationary: np.ndarray
    forward: ChannelHMM = field(repr=False)
    reverse: ChannelHMM = field(repr=False)

    def __post_init__(self):
        for name in ("transition", "fwd_success", "fwd_error", "rev_success", "rev_error", "stationary"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        object.__setattr__(self, "obs", {k: _readonly(v) for k, v in self.obs.items()})

    # The protocol analysis weights its input state by a forward-success
    # step, so the composite "success"/"error" matrices are the forward
    # marginals.
    @property
    def success(self) -> np.ndarray:
        return self.fwd_success

    @property
    def error(self) -> np.ndarray:
        return self.fwd_error


def compose_channels(fwd: ChannelHMM, rev: ChannelHMM) -> CompositeChannel:
    """Combine independent forward and reverse channels into one chain."""
    parts = {
        (0, 0): np.kron(fwd.success, rev.success),
        (0, 1): np.kron(fwd.success, rev.error),
        (1, 0): np.kron(fwd.error, rev.success),
        (1, 1): np.kron(fwd.error, rev.error),
    }
    transition = np.kron(fwd.transition, rev.transition)
    stationary = np.kron(fwd.stationary, rev.stationary)
    return CompositeChannel(
        transition=transition,
        obs=parts,
        fwd_success=parts[0, 0] + parts[0, 1],
        fwd_error=parts[1, 0] + parts[1, 1],
        rev_success=parts[0, 0] + parts[1, 0],
        rev_error=parts[0, 1] + parts[1, 1],
        stationary=stationary,
        forward=fwd,
        reverse=rev,
    )
