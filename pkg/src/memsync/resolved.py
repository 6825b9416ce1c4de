"""Photon-number-resolved model: transfer matrix, fidelities, thresholds.

The memory's charge state becomes a distribution over photon numbers
0..n_max.  Per pulse the occupation moves from k to j with probability

    T[j,k] = C(k,j) b^(k-j) (1-b)^j [(1-R)(1-q) + Rq]   (decoherence)
           + (1-q) R [j = 0]                            (readout)
           + q (1-R) p_s(j)                             (clean-and-store)

where p_s is the heralded distribution thinned by the storage efficiency.
From the steady state x_s the retrieved distribution is p_r = thin(x_s,
eta_r), each unit delivers p_sync(n) = q p_h(n) + (1-q) p_r(n), and the
exact N-fold coincidence probability is c = p_sync(1)^N.

Fidelity measures divide c by the probability of the event conditioned on:
the unpostselected F = (c / RY)^(1/N) conditions on a readout being
believed possible, and the postselected F~ = (c / p_geq)^(1/N) conditions
on a readout actually delivering at least N photons in total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .belief import BeliefSolution, solve_belief
from .binary import SyncReport, coincidence_closed_form
from .core import (
    MemoryParams,
    ProbDist,
    SystemParams,
    binomial_loss,
    click_prob_given_n,
    decoherence_step_prob,
    herald_prob,
    heralded_dist,
    params_fingerprint,
    thermal_dist,
)
from .errors import (
    ConvergenceError,
    DegenerateChainError,
    FidelityUndefinedError,
    ThresholdError,
    UndefinedConditionalError,
)

#: Eigenvalues within this of 1 count toward steady-state multiplicity.
_DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class TransferMatrix:
    """Number-resolved transfer matrix with tracked truncation residuals.

    Columns sum to 1 minus ``column_residuals`` (the storage-term deficit of
    the truncated p_s); the residual is carried, never silently dropped.
    """

    matrix: np.ndarray
    column_residuals: np.ndarray
    q: float
    R: float
    b: float

    def __post_init__(self):
        self.matrix.setflags(write=False)
        self.column_residuals.setflags(write=False)

    @property
    def n_max(self) -> int:
        return self.matrix.shape[0] - 1


@dataclass(frozen=True)
class FidelityReport:
    """Per-parameter-point fidelity figures.

    Attributes:
        c: probability of exactly one photon from every unit, p_sync(1)^N.
        p_less: probability of fewer than N photons in total.  In
            "normalized" mode this is conditioned on a readout event; in
            "paper_literal" mode it is the unconditioned convolution head.
        p_geq: the postselection denominator.  In "normalized" mode the
            probability that a readout occurs and delivers >= N photons,
            R*Y*tail; in "paper_literal" mode q - p_less (may be negative,
            in which case F_tilde is unavailable upstream).
        F: unpostselected normalized fidelity (c / RY)^(1/N).
        F_tilde: postselected normalized fidelity (c / p_geq)^(1/N).
        denominator_mode: "normalized" or "paper_literal".
    """

    c: float
    p_less: float
    p_geq: float
    F: float
    F_tilde: float
    denominator_mode: str
    N: int
    fingerprint: str = ""


@dataclass(frozen=True)
class ThresholdResult:
    """Largest emission parameter meeting a fidelity threshold."""

    p_theta: float
    fidelity: float
    theta: float
    fidelity_kind: str
    denominator_mode: str
    non_monotone: bool


def build_transfer_matrix(q: float, R: float, memory: MemoryParams,
                          p_h: ProbDist) -> TransferMatrix:
    """Assemble the number-resolved transfer matrix for one unit."""
    if not 0.0 <= q <= 1.0 or not 0.0 <= R <= 1.0:
        raise ValueError("q and R must be probabilities")
    b = decoherence_step_prob(memory)
    p_s = binomial_loss(p_h, memory.eta_s)
    n = p_h.n_max
    T = np.zeros((n + 1, n + 1))
    stay = (1.0 - R) * (1.0 - q) + R * q
    for k in range(n + 1):
        for j in range(k + 1):
            T[j, k] = math.comb(k, j) * b ** (k - j) * (1.0 - b) ** j * stay
    T[0, :] += (1.0 - q) * R
    T += q * (1.0 - R) * p_s.weights[:, None]
    residuals = 1.0 - T.sum(axis=0)
    return TransferMatrix(matrix=T, column_residuals=residuals, q=q, R=R, b=b)


def _as_matrix(T) -> np.ndarray:
    return T.matrix if isinstance(T, TransferMatrix) else np.asarray(T, dtype=float)


def _normalized_map_residual(M: np.ndarray, x: np.ndarray) -> float:
    y = M @ x
    total = y.sum()
    if total <= 0.0:
        return math.inf
    return float(np.max(np.abs(y / total - x)))


def _power_iteration(M: np.ndarray, x0: np.ndarray, tol: float, max_iter: int):
    x = x0 / x0.sum()
    residual = math.inf
    for _ in range(max_iter):
        y = M @ x
        total = y.sum()
        if total <= 0.0:
            raise ConvergenceError("transfer matrix annihilated the iterate", residual)
        y /= total
        residual = float(np.max(np.abs(y - x)))
        x = y
        if residual <= tol:
            return x, residual
    raise ConvergenceError(
        f"steady state not reached within {max_iter} iterations (residual {residual})",
        residual,
    )


def steady_state(T, tol: float = 1e-12, method: str = "auto",
                 max_iter: int = 10**6) -> ProbDist:
    """Stationary charge distribution x_s with T @ x_s = x_s.

    method="auto" (default) solves the linear system directly and verifies
    the fixed-point residual; method="power" repeatedly applies T starting
    from the vacuum state.  Both reject chains without a unique steady
    state (e.g. the identity matrix).

    Raises:
        DegenerateChainError: the unit eigenvalue is not simple.
        ConvergenceError: the residual cannot be brought below ``tol``.
    """
    M = _as_matrix(T)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("transfer matrix must be square")
    if n == 1:
        return ProbDist(np.array([1.0]))

    if method == "power":
        x, residual = _power_iteration(M, np.eye(n)[0], tol, max_iter)
        x_alt, _ = _power_iteration(M, np.full(n, 1.0 / n), tol, max_iter)
        if np.max(np.abs(x - x_alt)) > max(100.0 * tol, 1e-8):
            raise DegenerateChainError("steady state depends on the starting vector")
        return ProbDist(np.where(x < 0.0, 0.0, x))

    if method != "auto":
        raise ValueError(f"unknown steady-state method {method!r}")

    # The steady state is the dominant (Perron) eigenvector; truncation may
    # leave the columns slightly substochastic, so test uniqueness via the
    # spectral gap rather than against eigenvalue 1 exactly.
    eigvals, eigvecs = np.linalg.eig(M)
    order = np.argsort(-np.abs(eigvals))
    if n > 1 and abs(eigvals[order[1]]) >= abs(eigvals[order[0]]) - _DEGENERACY_TOL:
        raise DegenerateChainError(
            "dominant eigenvalue is not simple: no unique steady state"
        )
    x = np.real(eigvecs[:, order[0]])
    if x.sum() < 0.0:
        x = -x
    x = np.where(x < 0.0, 0.0, x)
    x /= x.sum()
    residual = _normalized_map_residual(M, x)
    if residual > tol:
        x, residual = _power_iteration(M, x, tol, max_iter)
    return ProbDist(x)


def retrieved_dist(x_s: ProbDist, eta_r: float) -> ProbDist:
    """Photon-number distribution retrieved from the memory."""
    return binomial_loss(x_s, eta_r)


def sync_output_dist(q: float, p_h: ProbDist, p_r: ProbDist) -> ProbDist:
    """Per-pulse delivered distribution p_sync = q p_h + (1-q) p_r."""
    if len(p_h) != len(p_r):
        raise ValueError("p_h and p_r must share the same support")
    return ProbDist(q * p_h.weights + (1.0 - q) * p_r.weights)


def readout_conditional_dist(p_sync: ProbDist, Y: float) -> ProbDist:
    """Delivered distribution conditioned on the unit being believed available.

    A unit can only deliver photons on pulses where it heralds or is
    believed charged (probability Y), so u(n) = p_sync(n)/Y for n >= 1 with
    the remainder at n = 0.  This is the per-unit distribution entering the
    postselection tail.
    """
    if Y <= 0.0:
        raise UndefinedConditionalError("believed-availability probability Y is zero")
    u = p_sync.weights / Y
    excess = u[1:].sum()
    if excess > 1.0 + 1e-9:
        raise ArithmeticError(
            f"delivered mass {excess} exceeds availability probability; "
            "inconsistent inputs"
        )
    u = u.copy()
    u[0] = max(0.0, 1.0 - excess)
    return ProbDist(u)


def coincidence_exact(p_sync: ProbDist, N: int) -> float:
    """Exact-one-photon-per-unit coincidence probability p_sync(1)^N."""
    return p_sync[1] ** N


def nfold_convolution(dist: ProbDist, N: int) -> np.ndarray:
    """Distribution of the total photon number from N independent units."""
    if not (isinstance(N, int) and N >= 1):
        raise ValueError("N must be an integer >= 1")
    out = np.array([1.0])
    for _ in range(N):
        out = np.convolve(out, dist.weights)
    return out


def prob_fewer_than(p_sync: ProbDist, N: int) -> float:
    """Probability that N units deliver fewer than N photons in total."""
    return float(nfold_convolution(p_sync, N)[:N].sum())


def prob_at_least(p_sync: ProbDist, N: int) -> float:
    """Tail-summed complement of prob_fewer_than (no cancellation)."""
    return float(nfold_convolution(p_sync, N)[N:].sum())


def fidelity_unpostselected(c: float, R: float, Y: float, N: int) -> float:
    """Normalized fidelity F = (c / (R Y))^(1/N)."""
    denom = R * Y
    if denom <= 0.0:
        raise FidelityUndefinedError("R*Y is zero; unpostselected fidelity undefined")
    return (c / denom) ** (1.0 / N)


def fidelity_no_memory(source) -> float:
    """Normalized fidelity of the memoryless system, p_h(1).

    Evaluated in closed form: at d = 0 this equals (1-p)(1-p(1-h)).
    """
    q = herald_prob(source)
    if q <= 0.0:
        raise FidelityUndefinedError("herald probability is zero")
    p_source_1 = (1.0 - source.p) * source.p
    return float(p_source_1 * click_prob_given_n(1, source.h, source.d) / q)


def fidelity_postselected(c: float, p_less: float, q: float, N: int,
                          mode: str = "normalized") -> float:
    """Postselected normalized fidelity (c / denominator)^(1/N).

    mode="normalized" uses 1 - p_less; mode="paper_literal" uses q - p_less,
    which is frequently nonpositive (expected at small q) and then raises.
    """
    if mode == "normalized":
        denom = 1.0 - p_less
    elif mode == "paper_literal":
        denom = q - p_less
    else:
        raise ValueError(f"unknown denominator mode {mode!r}")
    if denom <= 0.0:
        raise FidelityUndefinedError(
            f"postselection denominator {denom} is not positive (mode={mode})"
        )
    return (c / denom) ** (1.0 / N)


@dataclass(frozen=True)
class SystemAnalysis:
    """Full analytic pipeline output for one parameter point."""

    params: SystemParams
    belief: BeliefSolution
    chain: SyncReport
    transfer: TransferMatrix
    p_h: ProbDist
    x_s: ProbDist
    p_r: ProbDist
    p_sync: ProbDist
    fidelity: FidelityReport


def analyze_system(params: SystemParams,
                   denominator_mode: str = "normalized") -> SystemAnalysis:
    """Run q -> belief -> transfer matrix -> steady state -> fidelities."""
    q = herald_prob(params.source)
    sol = solve_belief(q, params.N)
    chain = coincidence_closed_form(params)
    p_h = heralded_dist(params.source, params.n_max)
    T = build_transfer_matrix(q, sol.R, params.memory, p_h)
    x_s = steady_state(T)
    p_r = retrieved_dist(x_s, params.memory.eta_r)
    p_sync = sync_output_dist(q, p_h, p_r)

    N = params.N
    c = coincidence_exact(p_sync, N)
    F = fidelity_unpostselected(c, sol.R, sol.Y, N)

    if denominator_mode == "normalized":
        u = readout_conditional_dist(p_sync, sol.Y)
        p_less = prob_fewer_than(u, N)
        p_geq = sol.R * sol.Y * prob_at_least(u, N)
        if p_geq <= 0.0:
            raise FidelityUndefinedError("readout >=N probability is zero")
        F_tilde = (c / p_geq) ** (1.0 / N)
    elif denominator_mode == "paper_literal":
        p_less = prob_fewer_than(p_sync, N)
        p_geq = q - p_less
        F_tilde = fidelity_postselected(c, p_less, q, N, "paper_literal")
    else:
        raise ValueError(f"unknown denominator mode {denominator_mode!r}")

    fid = FidelityReport(
        c=c, p_less=p_less, p_geq=p_geq, F=F, F_tilde=F_tilde,
        denominator_mode=denominator_mode, N=N,
        fingerprint=params_fingerprint(params),
    )
    return SystemAnalysis(
        params=params, belief=sol, chain=chain, transfer=T,
        p_h=p_h, x_s=x_s, p_r=p_r, p_sync=p_sync, fidelity=fid,
    )


def threshold_p_unsync(h: float, theta: float) -> float:
    """Largest p with memoryless fidelity (1-p)(1-p(1-h)) = theta.

    Closed form: p = {2-h - [(2-h)^2 - 4(1-h)(1-theta)]^(1/2)} / (2(1-h)),
    degenerating to 1 - theta at h = 1.
    """
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"h must be in [0, 1], got {h}")
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must be in (0, 1], got {theta}")
    if h == 1.0:
        return 1.0 - theta
    hbar = 1.0 - h
    disc = (2.0 - h) ** 2 - 4.0 * hbar * (1.0 - theta)
    return (2.0 - h - math.sqrt(disc)) / (2.0 * hbar)


def _fidelity_at(params: SystemParams, p: float, fidelity_kind: str,
                 denominator_mode: str) -> float:
    trial = replace(params, source=replace(params.source, p=p))
    try:
        analysis = analyze_system(trial, denominator_mode)
    except FidelityUndefinedError:
        return -math.inf
    fid = analysis.fidelity
    value = fid.F_tilde if fidelity_kind == "postselected" else fid.F
    return value if math.isfinite(value) else -math.inf


def threshold_p_sync(params: SystemParams, theta: float,
                     fidelity_kind: str = "postselected",
                     denominator_mode: str = "normalized",
                     tol: float = 1e-10,
                     p_min: float = 1e-9, p_max: float = 0.5,
                     grid_points: int = 97) -> ThresholdResult:
    """Largest p at which the chosen fidelity equals theta.

    The full pipeline is re-evaluated per candidate p.  A descending
    logarithmic scan locates the rightmost crossing (the unpostselected
    fidelity rises and then falls with p, so crossings need not be unique);
    bisection then pins it down until the fidelity matches theta within
    ``tol``.  Multiple crossings set the ``non_monotone`` flag.

    Raises:
        ThresholdError: the fidelity stays below theta on the whole range.
    """
    if fidelity_kind not in ("postselected", "unpostselected"):
        raise ValueError(f"unknown fidelity kind {fidelity_kind!r}")
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must be in (0, 1], got {theta}")

    fid = lambda p: _fidelity_at(params, p, fidelity_kind, denominator_mode)

    grid = np.geomspace(p_max, p_min, grid_points)
    values = [fid(p) for p in grid]
    above = [v >= theta for v in values]
    crossings = sum(1 for a, b_ in zip(above, above[1:]) if a != b_)

    try:
        idx = above.index(True)
    except ValueError:
        raise ThresholdError(
            f"{fidelity_kind} fidelity stays below theta={theta} for p in "
            f"[{p_min}, {p_max}]"
        ) from None

    if idx == 0:
        # already above threshold at p_max; report the endpoint
        return ThresholdResult(
            p_theta=float(grid[0]), fidelity=values[0], theta=theta,
            fidelity_kind=fidelity_kind, denominator_mode=denominator_mode,
            non_monotone=crossings > 1,
        )

    lo, f_lo = float(grid[idx]), values[idx]        # fid >= theta
    hi = float(grid[idx - 1])                       # fid < theta, hi > lo
    for _ in range(200):
        if abs(f_lo - theta) <= tol:
            break
        mid = math.sqrt(lo * hi)
        f_mid = fid(mid)
        if f_mid >= theta:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-15:
            break
    return ThresholdResult(
        p_theta=lo, fidelity=f_lo, theta=theta,
        fidelity_kind=fidelity_kind, denominator_mode=denominator_mode,
        non_monotone=crossings > 1,
    )


__all__ = [
    "TransferMatrix", "FidelityReport", "ThresholdResult", "SystemAnalysis",
    "build_transfer_matrix", "steady_state", "retrieved_dist",
    "sync_output_dist", "readout_conditional_dist", "coincidence_exact",
    "nfold_convolution", "prob_fewer_than", "prob_at_least",
    "fidelity_unpostselected", "fidelity_no_memory", "fidelity_postselected",
    "analyze_system", "threshold_p_unsync", "threshold_p_sync",
]
