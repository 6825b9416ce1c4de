"""Independent test oracles.

These deliberately avoid the library's own algorithms: the total-photon
head probability is enumerated composition by composition, and the
two-unit protocol is solved as an exact joint Markov chain over
(belief, occupation) pairs, clicks and all, so the Monte Carlo simulator
can be checked against exact expectations rather than against the
mean-field model.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from memsync import ProbDist, SystemParams, decoherence_step_prob


def enumerate_fewer_than(dist: ProbDist, N: int) -> float:
    """Brute-force sum over all N-unit outcome assignments with total < N."""
    total = 0.0
    for combo in itertools.product(range(len(dist)), repeat=N):
        if sum(combo) < N:
            prob = 1.0
            for n in combo:
                prob *= dist[n]
            total += prob
    return total


def _thin_matrix(survival: float, size: int) -> np.ndarray:
    M = np.zeros((size, size))
    for k in range(size):
        for j in range(k + 1):
            M[j, k] = math.comb(k, j) * survival**j * (1 - survival) ** (k - j)
    return M


def _binom_pmf(k: int, s: float, size: int) -> np.ndarray:
    out = np.zeros(size)
    for j in range(k + 1):
        out[j] = math.comb(k, j) * s**j * (1 - s) ** (k - j)
    return out


@dataclass(frozen=True)
class TwoUnitExpectations:
    occupancy_actual: float
    occupancy_believed: float
    readout_rate: float
    exact_rate: float
    geqn_rate: float


def exact_two_unit_chain(params: SystemParams, emit_cap: int = 6) -> TwoUnitExpectations:
    """Exact stationary per-pulse expectations of the full N=2 protocol.

    The joint state is (belief_1, count_1, belief_2, count_2) with counts
    bounded by ``emit_cap`` (storage is the only way counts grow, so the
    bound is exact up to the thermal tail beyond emit_cap, which is
    renormalized away; at p ~ 1e-3 that tail is ~1e-21).
    """
    assert params.N == 2
    src, mem = params.source, params.memory
    p, h, d = src.p, src.h, src.d
    b = decoherence_step_prob(mem)
    eta_s, eta_r = mem.eta_s, mem.eta_r
    E = emit_cap
    K = E + 1  # photon counts 0..E

    n_probs = np.array([(1 - p) * p**n for n in range(E + 1)])
    n_probs /= n_probs.sum()
    click_given_n = 1 - (1 - d) * (1 - h) ** np.arange(E + 1)
    q = float(n_probs @ click_given_n)
    n_given_click = n_probs * click_given_n / q if q > 0 else n_probs * 0.0

    D = _thin_matrix(1 - b, K)  # decoherence applied to every stored photon
    # occupation after a storage attempt (independent of prior contents)
    store_dist = np.zeros(K)
    for n in range(E + 1):
        store_dist += n_given_click[n] * _binom_pmf(n, eta_s, K)

    # per-unit delivered-count pmf given the unit's branch and prior count k
    fresh_deliver = np.zeros(E + 1)
    fresh_deliver[: E + 1] = n_given_click
    readout_deliver = {
        k: _binom_pmf(k, (1 - b) * eta_r, K) for k in range(K)
    }

    n_states = 2 * K  # (belief, count) pairs per unit
    idx = lambda bel, k: bel * K + k
    dim = n_states * n_states
    T = np.zeros((dim, dim))
    readout_prob = np.zeros(dim)
    exact_prob = np.zeros(dim)
    geq_prob = np.zeros(dim)

    zero_vec = np.zeros(K)
    zero_vec[0] = 1.0

    for b1, k1, b2, k2 in itertools.product((0, 1), range(K), (0, 1), range(K)):
        col = idx(b1, k1) * n_states + idx(b2, k2)
        for c1, c2 in itertools.product((0, 1), (0, 1)):
            pc = (q if c1 else 1 - q) * (q if c2 else 1 - q)
            if pc == 0.0:
                continue
            trigger = (b1 or c1) and (b2 or c2)
            units = []
            deliver = []
            for bel, k, c in ((b1, k1, c1), (b2, k2, c2)):
                thinned = D[:, k]
                if trigger:
                    if c:
                        units.append((bel, thinned))
                        deliver.append(fresh_deliver)
                    else:
                        units.append((0, zero_vec))
                        deliver.append(readout_deliver[k])
                else:
                    if c:
                        units.append((1, store_dist))
                    else:
                        units.append((bel, thinned))
            (nb1, kdist1), (nb2, kdist2) = units
            block = np.zeros(dim)
            joint = np.outer(kdist1, kdist2).ravel()
            for (kk1, kk2), w in zip(
                itertools.product(range(K), range(K)), joint
            ):
                if w:
                    block[idx(nb1, kk1) * n_states + idx(nb2, kk2)] += w
            T[:, col] += pc * block
            if trigger:
                readout_prob[col] += pc
                exact_prob[col] += pc * deliver[0][1] * deliver[1][1]
                tot = np.convolve(deliver[0], deliver[1])
                geq_prob[col] += pc * tot[2:].sum()

    eigvals, eigvecs = np.linalg.eig(T)
    i = int(np.argmax(eigvals.real))
    assert abs(eigvals[i] - 1.0) < 1e-10
    pi = np.abs(eigvecs[:, i].real)
    pi /= pi.sum()

    occ_a = occ_b = 0.0
    for b1, k1, b2, k2 in itertools.product((0, 1), range(K), (0, 1), range(K)):
        w = pi[idx(b1, k1) * n_states + idx(b2, k2)]
        occ_a += w * ((k1 > 0) + (k2 > 0)) / 2.0
        occ_b += w * (b1 + b2) / 2.0

    return TwoUnitExpectations(
        occupancy_actual=float(occ_a),
        occupancy_believed=float(occ_b),
        readout_rate=float(pi @ readout_prob),
        exact_rate=float(pi @ exact_prob),
        geqn_rate=float(pi @ geq_prob),
    )
