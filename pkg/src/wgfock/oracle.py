"""Brute-force reference implementation for small photon numbers.

Everything here expands the time-ordered emission amplitude literally over
orderings of the integration variables and evaluates each ordered region in
closed form with the nested rule  integral_s^inf e^{-a t} dt = e^{-a s} / a.
No recurrence, no quadrature; cost grows factorially, which is the point:
these routines exist to validate :mod:`wgfock.correlators` on instances small
enough to enumerate.
"""

from __future__ import annotations

import math
from itertools import combinations, permutations

import numpy as np

from .emitter import EmitterSpec
from .modes import commutator

ORACLE_MAX_N = 4  # (N!)^2-flavored enumeration; keep small


def _check_small(N: int):
    if N > ORACLE_MAX_N:
        raise ValueError(f"oracle is limited to N <= {ORACLE_MAX_N}, got N={N}")


def _level_exponents(spec: EmitterSpec) -> np.ndarray:
    """exponent[r] multiplying the r-th largest time in the emission
    amplitude: i(omega_{r-1} - omega_r) + (gamma_{r-1} - gamma_r)/2."""
    om = np.asarray(spec.omega)
    gam = np.asarray(spec.gamma)
    a = np.zeros(spec.N + 1, dtype=complex)
    a[1:] = 1j * (om[:-1] - om[1:]) + 0.5 * (gam[:-1] - gam[1:])
    return a


def amplitude_direct(spec: EmitterSpec, times) -> complex:
    """Emission wavefunction at the given times (any order; it is symmetric)."""
    t = np.asarray(times, dtype=float)
    if t.shape != (spec.N,):
        raise ValueError(f"need exactly N={spec.N} times, got shape {t.shape}")
    if np.any(t < 0):
        raise ValueError("emission times must be nonnegative")
    t = np.sort(t)[::-1]
    a = _level_exponents(spec)
    gam = np.asarray(spec.gamma)
    return complex(np.prod(np.sqrt(gam[1:])) * np.exp(np.dot(a[1:], t)))


# ---------------------------------------------------------------------------
# ordering enumeration
# ---------------------------------------------------------------------------

_ARRANGEMENT_CACHE: dict = {}


def _arrangements(n_left: int, n_right: int, n_shared: int):
    """All distinct descending orderings of the tagged integration variables.

    Tags: 0..n_left-1 the left-mode times, n_left..n_left+n_right-1 the
    right-mode times, and a single shared tag for the interchangeable times
    common to bra and ket.  Returns (codes, ket_rank, bra_rank) arrays of
    shape (n_orderings, n_vars).
    """
    key = (n_left, n_right, n_shared)
    if key in _ARRANGEMENT_CACHE:
        return _ARRANGEMENT_CACHE[key]
    shared_code = n_left + n_right
    bag = list(range(n_left + n_right)) + [shared_code] * n_shared
    codes = np.array(sorted(set(permutations(bag))), dtype=np.int64)
    is_ket = (codes < n_left) | (codes == shared_code)
    is_bra = codes >= n_left
    ket_rank = np.cumsum(is_ket, axis=1)
    bra_rank = np.cumsum(is_bra, axis=1)
    out = (codes, is_ket, is_bra, ket_rank, bra_rank)
    _ARRANGEMENT_CACHE[key] = out
    return out


def _core_integral(spec: EmitterSpec, lmodes, rmodes) -> complex:
    """The p-pair analogue of the state's squared norm: bra and ket each carry
    p extra mode profiles, N-p times stay shared, everything integrated."""
    p = len(lmodes)
    N = spec.N
    codes, is_ket, is_bra, ket_rank, bra_rank = _arrangements(p, p, N - p)

    a = _level_exponents(spec)
    # per-tag profile exponents; left (annihilator) profiles enter conjugated
    prof = np.zeros(2 * p + 1, dtype=complex)
    for i, m in enumerate(lmodes):
        prof[i] = 1j * m.omega - m.gamma / 2.0
    for i, m in enumerate(rmodes):
        prof[p + i] = -1j * m.omega - m.gamma / 2.0

    E = np.where(is_ket, a[ket_rank], 0) + np.where(is_bra, np.conj(a)[bra_rank], 0)
    E = E + prof[codes]
    prefix = np.cumsum(E, axis=1)
    terms = 1.0 / np.prod(-prefix, axis=1)

    gam = np.asarray(spec.gamma)
    front = np.prod(gam[1:]) * math.prod(math.sqrt(m.gamma) for m in lmodes)
    front *= math.prod(math.sqrt(m.gamma) for m in rmodes)
    return complex(front * math.factorial(N - p) / math.factorial(N) * terms.sum())


def norm_direct(spec: EmitterSpec) -> float:
    _check_small(spec.N)
    val = _core_integral(spec, (), ())
    return float(np.real(val))


def correlator_direct(req) -> complex:
    """<state| b_L1 .. b_Ln b_R1^dag .. b_Rn^dag |state> by full enumeration.

    Wick-contracting the mode operators against the state's continuum
    operators pairs each left mode either with a right mode (a commutator
    factor) or with one of the N state times; p modes left unpaired on each
    side give N(N-1)..(N-p+1) equal contractions of the p-pair core integral.
    """
    spec, left, right = req.spec, req.left, req.right
    _check_small(spec.N)
    n = req.n
    N = spec.N

    cores: dict = {}

    def core(l_idx, r_idx):
        if l_idx not in cores:
            cores[l_idx] = {}
        if r_idx not in cores[l_idx]:
            cores[l_idx][r_idx] = _core_integral(
                spec, [left[i] for i in l_idx], [right[j] for j in r_idx]
            )
        return cores[l_idx][r_idx]

    idx = tuple(range(n))
    total = 0.0 + 0.0j
    for q in range(n + 1):
        slots = math.prod(range(N - (n - q) + 1, N + 1))  # N falling (n-q)
        for lsub in combinations(idx, q):
            lrest = tuple(i for i in idx if i not in lsub)
            for rsub in combinations(idx, q):
                rrest = tuple(j for j in idx if j not in rsub)
                for rperm in permutations(rsub):
                    w = 1.0 + 0.0j
                    for i, j in zip(lsub, rperm):
                        w *= commutator(left[i], right[j])
                    total += w * slots * core(lrest, rrest)
    return total


def overlap_direct(spec: EmitterSpec, base, occupation) -> complex:
    """<0| b_1^{k_1} .. b_D^{k_D} |state> by enumerating time orderings."""
    _check_small(spec.N)
    base = tuple(base)
    occ = tuple(int(k) for k in occupation)
    if len(occ) != len(base):
        raise ValueError("occupation length must match number of modes")
    if any(k < 0 for k in occ):
        raise ValueError("occupations must be nonnegative")
    N = spec.N
    if sum(occ) != N:
        return 0.0 + 0.0j

    a = _level_exponents(spec)
    prof = np.array([1j * m.omega - m.gamma / 2.0 for m in base])

    bag = []
    for j, k in enumerate(occ):
        bag.extend([j] * k)
    total = 0.0 + 0.0j
    for arr in sorted(set(permutations(bag))):
        csum = 0.0 + 0.0j
        term = 1.0 + 0.0j
        for rank, j in enumerate(arr, start=1):
            csum += a[rank] + prof[j]
            term /= -csum
        total += term

    gam = np.asarray(spec.gamma)
    front = np.prod(np.sqrt(gam[1:]))
    front *= math.prod(math.sqrt(m.gamma) ** k for m, k in zip(base, occ))
    front *= math.prod(math.factorial(k) for k in occ)
    return complex(front * total)
