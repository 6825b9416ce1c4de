"""Binary (occupied/empty) model of a synchronized source-memory unit.

A memory is tracked as charged or empty.  Per pump pulse it charges with
probability r = q * eta_s * (1-R) and empties with probability

    s = b[(1-R)(1-q) + Rq] + (1-q)R + q(1-R)(1-eta_s)

(decoherence on standby, decoherence while bypassed during a readout,
readout itself, and a failed replacement attempt).  The stationary charge
is P = r/(r+s), each unit provides a photon with probability
p_sync = q + (1-q) eta_r P, and the N-fold coincidence probability is
c_sync = p_sync^N.  With the linearized decoherence b = 1/B this equals the
closed form

    c_sync = q^N { 1 + (1-R)(1-q) eta B / [1 + (B-1)(R(1-2q) + q)] }^N

exactly; with dark counts the leading q^N becomes (q-d)^N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .belief import solve_belief
from .core import (
    MemoryParams,
    SystemParams,
    decoherence_step_prob,
    herald_prob,
    params_fingerprint,
)
from .errors import DegenerateChainError

#: Relative tolerance for the closed-form / chain-based identity check.
IDENTITY_RTOL = 1e-12


@dataclass(frozen=True)
class ChainRates:
    """Per-pulse charging (r), loss (s) and decoherence (b) probabilities."""

    r: float
    s: float
    b: float


@dataclass(frozen=True)
class SyncReport:
    """Closed-form synchronization figures for one parameter point.

    c_sync is computed from the steady occupancy P (honoring the configured
    decoherence mode); c_closed_form is the literal closed-form value, which
    assumes b = 1/B.  The two agree to machine precision in linearized mode.
    waiting_time is 1/(pump_rate * c_sync), infinite when c_sync = 0.
    """

    q: float
    Y: float
    R: float
    P: float
    p_sync: float
    c_sync: float
    c_closed_form: float
    waiting_time: float
    N: int
    pump_rate: float
    fingerprint: str = ""


def chain_rates(q: float, R: float, memory: MemoryParams) -> ChainRates:
    """Charging and loss probabilities of the binary occupancy chain."""
    if not 0.0 <= q <= 1.0 or not 0.0 <= R <= 1.0:
        raise ValueError("q and R must be probabilities")
    b = decoherence_step_prob(memory)
    r = q * memory.eta_s * (1.0 - R)
    s = (
        b * ((1.0 - R) * (1.0 - q) + R * q)
        + (1.0 - q) * R
        + q * (1.0 - R) * (1.0 - memory.eta_s)
    )
    return ChainRates(r=r, s=s, b=b)


def chain_transfer_matrix(rates: ChainRates) -> np.ndarray:
    """Column-stochastic 2x2 transfer matrix [[1-r, s], [r, 1-s]]."""
    return np.array([[1.0 - rates.r, rates.s], [rates.r, 1.0 - rates.s]])


def steady_occupancy(rates: ChainRates) -> float:
    """Stationary charged probability P = r/(r+s).

    Raises:
        DegenerateChainError: r = s = 0, where every distribution is
            stationary and P is undefined.
    """
    total = rates.r + rates.s
    if total == 0.0:
        raise DegenerateChainError("r = s = 0: the occupancy chain has no unique steady state")
    return rates.r / total


def unit_gain_factor(q: float, R: float, eta: float, B: float) -> float:
    """Closed-form per-unit enhancement factor (the braced term above)."""
    denom = 1.0 + (B - 1.0) * (R * (1.0 - 2.0 * q) + q)
    return 1.0 + (1.0 - R) * (1.0 - q) * eta * B / denom


def waiting_time(c: float, pump_rate: float) -> float:
    """Average waiting time 1/(pump_rate * c) between N-photon events.

    A zero coincidence probability yields ``inf`` rather than an exception.
    """
    if c < 0.0:
        raise ValueError(f"coincidence probability must be >= 0, got {c}")
    if pump_rate <= 0.0:
        raise ValueError(f"pump_rate must be positive, got {pump_rate}")
    if c == 0.0:
        return math.inf
    return 1.0 / (pump_rate * c)


def coincidence_closed_form(params: SystemParams, R_override: float | None = None) -> SyncReport:
    """N-fold coincidence probability and waiting time of the binary model.

    Readout readiness R is obtained from the belief model unless explicitly
    overridden (in which case Y is reported as NaN).  The steady-occupancy
    path honors ``memory.decoherence_mode``; in linearized mode its result
    is cross-checked against the literal closed form, which is an algebraic
    identity, to one part in 1e12.

    With dark counts the leading factor q^N is replaced by (q-d)^N in both
    paths, with q still including dark counts.
    """
    source, memory = params.source, params.memory
    q = herald_prob(source)

    if R_override is None:
        sol = solve_belief(q, params.N)
        Y, R = sol.Y, sol.R
    else:
        if not 0.0 <= R_override <= 1.0:
            raise ValueError("R_override must be a probability")
        Y, R = math.nan, R_override

    rates = chain_rates(q, R, memory)
    P = steady_occupancy(rates)
    p_sync = q + (1.0 - q) * memory.eta_r * P

    d = source.d
    dark_factor = 1.0 if d == 0.0 else (q - d) / q
    c_sync = (dark_factor * p_sync) ** params.N

    lead = max(q - d, 0.0)
    c_closed = (lead * unit_gain_factor(q, R, memory.eta, memory.B)) ** params.N

    if memory.decoherence_mode == "linearized":
        scale = max(c_sync, c_closed)
        if scale > 0.0 and abs(c_sync - c_closed) > IDENTITY_RTOL * scale:
            raise ArithmeticError(
                "closed form and steady-occupancy coincidence disagree under b=1/B: "
                f"{c_closed} vs {c_sync}"
            )

    return SyncReport(
        q=q, Y=Y, R=R, P=P, p_sync=p_sync, c_sync=c_sync, c_closed_form=c_closed,
        waiting_time=waiting_time(c_sync, params.pump_rate),
        N=params.N, pump_rate=params.pump_rate,
        fingerprint=params_fingerprint(params),
    )


def small_rate_limit(params: SystemParams) -> float:
    """Small-rate approximation (q * eta * B)^N, valid when {RB, qB} << 1."""
    q = herald_prob(params.source)
    return (q * params.memory.eta * params.memory.B) ** params.N
