"""Parameter types and elementary photon-number statistics.

Everything downstream (the binary occupancy chain, the number-resolved
transfer matrix, the Monte Carlo protocol simulator) consumes the types and
probability maps defined here: thermal pair emission, herald click
probability, the heralded conditional photon-number distribution, binomial
loss, and the per-step decoherence probability of a memory.

All functions are pure and all types immutable, so concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UndefinedConditionalError

DEFAULT_N_MAX = 8

#: Total probability may exceed 1 by at most this much (floating-point slack).
MASS_TOL = 1e-12

#: A distribution counts as normalized when |total - 1| is below this.
NORMALIZED_TOL = 1e-9


@dataclass(frozen=True)
class SourceParams:
    """Heralded parametric pair source.

    Attributes:
        p: thermal emission parameter per pump pulse, 0 <= p < 1.
        h: herald detector efficiency, 0 <= h <= 1.
        d: dark-count probability per pulse, 0 <= d < 1.
    """

    p: float
    h: float
    d: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"thermal parameter p must be in [0, 1), got {self.p}")
        if not 0.0 <= self.h <= 1.0:
            raise ValueError(f"herald efficiency h must be in [0, 1], got {self.h}")
        if not 0.0 <= self.d < 1.0:
            raise ValueError(f"dark-count probability d must be in [0, 1), got {self.d}")


@dataclass(frozen=True)
class MemoryParams:
    """Quantum memory characterized by efficiencies and time-bandwidth product.

    Attributes:
        eta_s: storage efficiency (includes source-to-memory coupling loss).
        eta_r: retrieval efficiency.
        B: time-bandwidth product, >= 1; sets the per-step decoherence
            probability b = 1 - exp(-1/B) (or 1/B when linearized).
        decoherence_mode: "exact" or "linearized".
    """

    eta_s: float
    eta_r: float
    B: float
    decoherence_mode: str = "exact"

    def __post_init__(self):
        if not 0.0 <= self.eta_s <= 1.0:
            raise ValueError(f"storage efficiency eta_s must be in [0, 1], got {self.eta_s}")
        if not 0.0 <= self.eta_r <= 1.0:
            raise ValueError(f"retrieval efficiency eta_r must be in [0, 1], got {self.eta_r}")
        if not self.B >= 1.0:
            raise ValueError(f"time-bandwidth product B must be >= 1, got {self.B}")
        if self.decoherence_mode not in ("exact", "linearized"):
            raise ValueError(
                f"decoherence_mode must be 'exact' or 'linearized', got {self.decoherence_mode!r}"
            )

    @property
    def eta(self) -> float:
        """Total memory efficiency eta_s * eta_r."""
        return self.eta_s * self.eta_r


@dataclass(frozen=True)
class SystemParams:
    """A synchronized array of N identical source-memory units.

    Attributes:
        N: number of source-memory units, >= 1.
        source: SourceParams shared by every unit.
        memory: MemoryParams shared by every unit.
        pump_rate: pump pulses per second.
        n_max: photon-number truncation for number-resolved calculations.
    """

    N: int
    source: SourceParams
    memory: MemoryParams
    pump_rate: float = 1e9
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        if not (isinstance(self.N, int) and self.N >= 1):
            raise ValueError(f"N must be an integer >= 1, got {self.N}")
        if not self.pump_rate > 0:
            raise ValueError(f"pump_rate must be positive, got {self.pump_rate}")
        if not (isinstance(self.n_max, int) and self.n_max >= 1):
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")


def params_fingerprint(params: SystemParams) -> str:
    """Stable identifier used to match analytic reports with simulation runs."""
    s, m = params.source, params.memory
    return "|".join(
        repr(v)
        for v in (
            params.N, s.p, s.h, s.d, m.eta_s, m.eta_r, m.B, m.decoherence_mode,
            params.pump_rate, params.n_max,
        )
    )


@dataclass(frozen=True)
class ProbDist:
    """A truncated photon-number distribution, indexed n = 0..n_max.

    Weights are nonnegative and total at most 1 (up to floating slack).  A
    truncation deficit (1 - total) is carried explicitly and never silently
    renormalized; call :meth:`renormalized` to rescale on purpose.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-D array")
        if w.min() < -NORMALIZED_TOL:
            raise ValueError(f"negative weight {w.min()} in distribution")
        w = np.where(w < 0.0, 0.0, w)  # clip float dust only
        total = float(w.sum())
        if total > 1.0 + MASS_TOL:
            raise ValueError(f"total probability {total} exceeds 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_max(self) -> int:
        return self.weights.size - 1

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def deficit(self) -> float:
        """Probability mass lost to truncation (>= 0 up to float slack)."""
        return 1.0 - self.total

    @property
    def is_normalized(self) -> bool:
        return abs(self.total - 1.0) <= NORMALIZED_TOL

    def renormalized(self) -> "ProbDist":
        """Explicitly rescale the weights to total 1."""
        total = self.total
        if total <= 0.0:
            raise ValueError("cannot renormalize a zero distribution")
        return ProbDist(self.weights / total)

    def __len__(self) -> int:
        return self.weights.size

    def __getitem__(self, n) -> float:
        return float(self.weights[n])


def thermal_dist(p: float, n_max: int = DEFAULT_N_MAX) -> ProbDist:
    """Thermal photon-pair number distribution, P(n) = (1-p) p^n.

    The truncated tail p^(n_max+1) is carried as the distribution's deficit.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"thermal parameter p must be in [0, 1), got {p}")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    n = np.arange(n_max + 1)
    return ProbDist((1.0 - p) * p**n)


def click_prob_given_n(n, h: float, d: float, form: str = "exact"):
    """Probability that the herald detector fires given n photon pairs.

    The exact form is 1 - (1-d)(1-h)^n.  form="paper" selects the
    (1-d)[1 - (1-h)^n + d] variant, which differs by exactly d^2 and is kept
    for literal reproduction; both agree at d = 0.
    """
    n = np.asarray(n)
    if form == "exact":
        return 1.0 - (1.0 - d) * (1.0 - h) ** n
    if form == "paper":
        return (1.0 - d) * (1.0 - (1.0 - h) ** n + d)
    raise ValueError(f"unknown click-probability form {form!r}")


def herald_prob(source: SourceParams) -> float:
    """Per-pulse herald click probability q.

    Computed as the exact no-click complement
    q = 1 - (1-d)(1-p) / (1 - p(1-h)), which is identical to
    (hp + d(1-p)) / (1 - p(1-h)).
    """
    p, h, d = source.p, source.h, source.d
    return 1.0 - (1.0 - d) * (1.0 - p) / (1.0 - p * (1.0 - h))


def heralded_dist(source: SourceParams, n_max: int = DEFAULT_N_MAX,
                  form: str = "exact") -> ProbDist:
    """Photon-number distribution sent to the memory, conditioned on a click.

    p_h(n) = p_source(n) * P(click | n) / q.  Raises
    UndefinedConditionalError when q = 0 (p = 0 and d = 0).
    """
    q = herald_prob(source)
    if q <= 0.0:
        raise UndefinedConditionalError(
            "herald probability is zero (p=0, d=0); conditional distribution undefined"
        )
    base = thermal_dist(source.p, n_max)
    click = click_prob_given_n(np.arange(n_max + 1), source.h, source.d, form)
    return ProbDist(base.weights * click / q)


@lru_cache(maxsize=128)
def loss_matrix(survival: float, n_max: int) -> np.ndarray:
    """Column-stochastic binomial loss matrix M[j, k] = C(k, j) s^j (1-s)^(k-j)."""
    if not 0.0 <= survival <= 1.0:
        raise ValueError(f"survival probability must be in [0, 1], got {survival}")
    M = np.zeros((n_max + 1, n_max + 1))
    for k in range(n_max + 1):
        for j in range(k + 1):
            M[j, k] = math.comb(k, j) * survival**j * (1.0 - survival) ** (k - j)
    M.setflags(write=False)
    return M


def binomial_loss(dist: ProbDist, survival: float) -> ProbDist:
    """Each photon independently survives with the given probability.

    Total mass is preserved, and losses compose:
    binomial_loss(binomial_loss(D, a), b) == binomial_loss(D, a*b).
    """
    return ProbDist(loss_matrix(survival, dist.n_max) @ dist.weights)


def decoherence_step_prob(memory: MemoryParams) -> float:
    """Per-pulse decoherence probability b of a stored photon.

    exact mode: b = 1 - exp(-1/B); linearized mode: b = 1/B.
    """
    if memory.decoherence_mode == "linearized":
        return 1.0 / memory.B
    return -math.expm1(-1.0 / memory.B)
