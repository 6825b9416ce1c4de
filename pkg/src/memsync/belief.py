"""Controller belief model: when does the system think it can read out?

The controller tracks, for each unit, whether it believes the memory is
charged.  Belief is updated by heralds and readouts only; decoherence is
invisible to it.  With w = (1-R)q the per-step probability that an
empty-believed memory becomes believed-charged and z = (1-q)R the reverse,
the stationary believed-charged probability is V = w/(w+z).  A unit counts
as available when it heralds now or is believed charged, Y = q + (1-q)V,
and readout readiness (all N-1 other units available) is R = Y^(N-1).
Eliminating V gives the consistency condition

    (1 - 2q) Y^N + q^2 Y^(N-1) + q Y - q = 0,

whose root on [q, 1] this module finds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BeliefRootError

_SCAN_POINTS = 64


@dataclass(frozen=True)
class BeliefSolution:
    """Solution of the belief self-consistency condition.

    Attributes:
        q: herald click probability.
        N: number of units.
        Y: probability a unit is believed to provide a photon.
        V: stationary probability a memory is believed charged.
        R: readout readiness, Y^(N-1).
        w: believed charging probability per step, (1-R)q.
        z: believed discharge probability per step, (1-q)R.
        residual: consistency polynomial value at the returned Y.
        multi_root: True when more than one root bracket was found on [q, 1]
            (the smallest root is returned in that case).
    """

    q: float
    N: int
    Y: float
    V: float
    R: float
    w: float
    z: float
    residual: float
    multi_root: bool = False


def consistency_residual(q: float, N: int, Y: float) -> float:
    """Value of (1-2q) Y^N + q^2 Y^(N-1) + qY - q."""
    return (1.0 - 2.0 * q) * Y**N + q * q * Y ** (N - 1) + q * Y - q


def _consistency_derivative(q: float, N: int, Y: float) -> float:
    return N * (1.0 - 2.0 * q) * Y ** (N - 1) + (N - 1) * q * q * Y ** (N - 2) + q


def belief_transfer(q: float, R: float) -> np.ndarray:
    """2x2 column-stochastic belief transfer matrix.

    Column 0 is the believed-empty state, column 1 believed-charged; the
    steady state is [z, w]/(w+z) whenever w + z > 0.
    """
    if not 0.0 <= q <= 1.0 or not 0.0 <= R <= 1.0:
        raise ValueError("q and R must be probabilities")
    w = (1.0 - R) * q
    z = (1.0 - q) * R
    return np.array([[1.0 - w, z], [w, 1.0 - z]])


def _solution(q, N, Y, residual, multi_root=False) -> BeliefSolution:
    V = 0.0 if q >= 1.0 else max(0.0, (Y - q) / (1.0 - q))
    R = Y ** (N - 1)
    return BeliefSolution(
        q=q, N=N, Y=Y, V=V, R=R, w=(1.0 - R) * q, z=(1.0 - q) * R,
        residual=residual, multi_root=multi_root,
    )


def solve_belief(q: float, N: int, tol: float = 1e-12) -> BeliefSolution:
    """Solve the belief consistency condition for Y on [q, 1].

    Bisection on the bracket guarantees convergence; a final Newton polish
    pushes the residual to machine level.  If several sign-change brackets
    exist the smallest root is returned and flagged via ``multi_root``.

    Raises:
        BeliefRootError: no sign change on [q, 1], or the residual at the
            returned root exceeds ``tol``.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must be in [0, 1), got {q}")
    if not (isinstance(N, int) and N >= 1):
        raise ValueError(f"N must be an integer >= 1, got {N}")
    if not tol > 0.0:
        raise ValueError("tol must be positive")

    if N == 1:
        # polynomial factors as (1-q)(Y-q); memory belief is never consulted
        return _solution(q, N, q, consistency_residual(q, N, q))
    if q == 0.0:
        return _solution(q, N, 0.0, 0.0)

    f = lambda Y: consistency_residual(q, N, Y)

    # f(q) = -q(1-q)(1 - q^(N-1)) < 0 and f(1) = (1-q)^2 > 0 for q in (0,1),
    # so a bracket always exists; scan anyway to detect extra roots.
    grid = np.linspace(q, 1.0, _SCAN_POINTS + 1)
    values = [f(x) for x in grid]
    brackets = [
        (grid[i], grid[i + 1])
        for i in range(_SCAN_POINTS)
        if values[i] == 0.0 or (values[i] < 0.0) != (values[i + 1] < 0.0)
    ]
    if not brackets:
        raise BeliefRootError(
            f"no sign change of the consistency polynomial on [{q}, 1] (N={N})"
        )
    multi_root = len(brackets) > 1

    lo, hi = brackets[0]
    flo = f(lo)
    if flo == 0.0:
        Y = lo
    else:
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm < 0.0) == (flo < 0.0):
                lo, flo = mid, fm
            else:
                hi = mid
        Y = 0.5 * (lo + hi)
        for _ in range(4):  # Newton polish inside the bracket
            df = _consistency_derivative(q, N, Y)
            if df == 0.0:
                break
            step = f(Y) / df
            Y_new = Y - step
            if not q <= Y_new <= 1.0:
                break
            Y = Y_new

    residual = f(Y)
    if abs(residual) > tol:
        raise BeliefRootError(
            f"consistency residual {residual} exceeds tolerance {tol} at Y={Y}"
        )
    return _solution(q, N, Y, residual, multi_root)
