"""Exact correlators of the emitted N-photon state via sparse matrix chains.

The emitted state has a time-ordered product wavefunction: on descending-
sorted emission times the amplitude is a product of level exponentials
(see :mod:`wgfock.oracle` for the literal form).  Expectation values of
exponential-mode operators reduce to nested integrals of pure exponentials
over all orderings of the integration variables.  Summed naively those have
factorially many terms, but the integrand is symmetric under permutations of
the times shared between bra and ket, so the ordering sum collapses onto a
small state space:

    state = (k, S, T)   with k shared times already integrated,
                        S/T the subsets of left/right modes already integrated.

Peeling the largest remaining variable maps each state to at most 2n+1
successors with closed-form coefficients, because the accumulated exponent of
all peeled variables depends only on the state (the level exponentials
telescope).  The full integral is then one entry of a product of ~N copies of
a sparse transition matrix over the 4^n * (N-n+1) states.  The 1/N!
normalization of the state is folded into the chain (divide one factor of j
out of each of the first N applications) so no factorial is ever formed.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .emitter import EmitterSpec
from .modes import ExpMode, commutator

MAX_CHAIN_STATES = 2_000_000  # refuse chains beyond this state count


class ChainOverflowError(ArithmeticError):
    """A rescaled matrix chain still left the representable range."""


@dataclass(frozen=True)
class CorrelatorRequest:
    """n left (annihilator) and n right (creator) modes against one emitter."""

    spec: EmitterSpec
    left: tuple
    right: tuple

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        n = len(self.left)
        if n != len(self.right):
            raise ValueError(f"left and right must have equal length, got {n} and {len(self.right)}")
        if n < 1:
            raise ValueError("need at least one mode per side")
        if n > self.spec.N:
            raise ValueError(f"correlator order n={n} exceeds photon number N={self.spec.N}")

    @property
    def n(self) -> int:
        return len(self.left)


def _chain_coo(spec: EmitterSpec, left, right):
    """Peeling operator over states (k, S, T) in COO form; entry [s, s'] is
    the coefficient picked up when stepping from s' one peel back to s."""
    N, n = spec.N, len(left)
    gam = np.asarray(spec.gamma)
    om = np.asarray(spec.omega)
    nmask = 1 << n
    n_shared = N - n
    size = (n_shared + 1) * nmask * nmask
    if size > MAX_CHAIN_STATES:
        raise ValueError(
            f"chain state space {size} exceeds budget {MAX_CHAIN_STATES}; "
            "reduce the correlator order"
        )

    lsum = np.zeros(nmask, dtype=complex)
    rsum = np.zeros(nmask, dtype=complex)
    pop = np.zeros(nmask, dtype=np.int64)
    for mask in range(1, nmask):
        j = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        lsum[mask] = lsum[rest] + (left[j].gamma / 2.0 - 1j * left[j].omega)
        rsum[mask] = rsum[rest] + (right[j].gamma / 2.0 + 1j * right[j].omega)
        pop[mask] = pop[rest] + 1

    def c_of(k, s, t):
        ks, kt = k + pop[s], k + pop[t]
        return lsum[s] + rsum[t] + 0.5 * (gam[ks] + gam[kt]) + 1j * (om[ks] - om[kt])

    def idx(k, s, t):
        return (k * nmask + s) * nmask + t

    rows, cols, vals = [], [], []
    for k in range(n_shared + 1):
        for s in range(nmask):
            for t in range(nmask):
                i = idx(k, s, t)
                if k < n_shared:
                    w = (n_shared - k) * math.sqrt(
                        gam[k + 1 + pop[s]] * gam[k + 1 + pop[t]]
                    ) / c_of(k + 1, s, t)
                    rows.append(i)
                    cols.append(idx(k + 1, s, t))
                    vals.append(w)
                for j in range(n):
                    bit = 1 << j
                    if not s & bit:
                        w = math.sqrt(left[j].gamma * gam[k + pop[s] + 1]) / c_of(k, s | bit, t)
                        rows.append(i)
                        cols.append(idx(k, s | bit, t))
                        vals.append(w)
                    if not t & bit:
                        w = math.sqrt(right[j].gamma * gam[k + pop[t] + 1]) / c_of(k, s, t | bit)
                        rows.append(i)
                        cols.append(idx(k, s, t | bit))
                        vals.append(w)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=complex)
    return rows, cols, vals, size, idx(n_shared, nmask - 1, nmask - 1), idx(0, 0, 0)


def _run_chain(rows, cols, vals, size, start, stop, n_steps, n_rescale):
    """Apply the peeling operator n_steps times, dividing the first
    n_rescale applications by their step index."""
    W = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(size, size), dtype=complex).tocsr()
    v = np.zeros(size, dtype=complex)
    v[start] = 1.0
    for j in range(1, n_steps + 1):
        v = W @ v
        if j <= n_rescale:
            v = v / j
        if not np.all(np.isfinite(v)):
            raise ChainOverflowError(f"chain left representable range at step {j}/{n_steps}")
    return v[stop]


def chain_I(req: CorrelatorRequest) -> complex:
    """Core n-photon integral I_n: the fully mode-contracted correlator with
    all commutator (vacuum) pairings removed, divided by N!.

    The anti-normal-ordered correlator is assembled from these in
    :func:`correlator`.
    """
    spec = req.spec
    rows, cols, vals, size, start, stop = _chain_coo(spec, req.left, req.right)
    return complex(
        _run_chain(rows, cols, vals, size, start, stop, n_steps=spec.N + req.n, n_rescale=spec.N)
    )


def _chain_I_mp(req: CorrelatorRequest, bits: int = 256):
    """Arbitrary-precision evaluation of :func:`chain_I` (gmpy2 mpc result).

    Same peeling recurrence evaluated with gmpy2 at the requested precision;
    used to validate the floating-point chains where contractions against
    ill-conditioned mode families would otherwise amplify their rounding.
    """
    import gmpy2
    from gmpy2 import mpc, mpfr

    spec, left, right = req.spec, req.left, req.right
    N, n = spec.N, req.n
    with gmpy2.context(precision=bits):
        gam = [mpfr(g) for g in spec.gamma]
        om = [mpfr(w) for w in spec.omega]
        lprof = [mpc(mpfr(m.gamma) / 2, -mpfr(m.omega)) for m in left]
        rprof = [mpc(mpfr(m.gamma) / 2, mpfr(m.omega)) for m in right]
        nmask = 1 << n
        lsum = [mpc(0)] * nmask
        rsum = [mpc(0)] * nmask
        pop = [0] * nmask
        for mask in range(1, nmask):
            j = (mask & -mask).bit_length() - 1
            rest = mask & (mask - 1)
            lsum[mask] = lsum[rest] + lprof[j]
            rsum[mask] = rsum[rest] + rprof[j]
            pop[mask] = pop[rest] + 1

        def c_of(k, s, t):
            ks, kt = k + pop[s], k + pop[t]
            return lsum[s] + rsum[t] + (gam[ks] + gam[kt]) / 2 + mpc(0, om[ks] - om[kt])

        n_shared = N - n
        level = {(n_shared, nmask - 1, nmask - 1): mpc(1)}
        for step in range(1, N + n + 1):
            nxt: dict = {}
            for (k, s, t), val in level.items():
                if k > 0:
                    w = (n_shared - k + 1) * gmpy2.sqrt(gam[k + pop[s]] * gam[k + pop[t]]) / c_of(k, s, t)
                    key = (k - 1, s, t)
                    nxt[key] = nxt.get(key, mpc(0)) + w * val
                for j in range(n):
                    bit = 1 << j
                    if s & bit:
                        w = gmpy2.sqrt(mpfr(left[j].gamma) * gam[k + pop[s]]) / c_of(k, s, t)
                        key = (k, s ^ bit, t)
                        nxt[key] = nxt.get(key, mpc(0)) + w * val
                    if t & bit:
                        w = gmpy2.sqrt(mpfr(right[j].gamma) * gam[k + pop[t]]) / c_of(k, s, t)
                        key = (k, s, t ^ bit)
                        nxt[key] = nxt.get(key, mpc(0)) + w * val
            if step <= N:
                nxt = {key: v / step for key, v in nxt.items()}
            level = nxt
        out = level.get((0, 0, 0), mpc(0))
        return out


def norm(spec: EmitterSpec) -> float:
    """Squared norm of the emitted state.  Equals 1 for any valid ladder;
    computed through the same chain (order zero) as an engine self-check."""
    N = spec.N
    gam = spec.gamma
    v = np.zeros(N + 1, dtype=complex)
    v[N] = 1.0
    # order-0 chain: states are just k; the peel coefficient is
    # (N-k) * gamma_{k+1} / gamma_{k+1}, rescaled by the step index.
    for j in range(1, N + 1):
        w = np.zeros(N + 1, dtype=complex)
        for k in range(N):
            csum = gam[k + 1]
            w[k] = (N - k) * gam[k + 1] / csum * v[k + 1]
        v = w / j
    out = complex(v[0])
    if abs(out.imag) > 1e-12:
        raise ChainOverflowError(f"norm came out non-real: {out}")
    return out.real


def _falling(N: int, p: int) -> float:
    out = 1.0
    for i in range(p):
        out *= N - i
    return out


def correlator(req: CorrelatorRequest) -> complex:
    """Full correlator <state| b_L1 .. b_Ln  b_R1^dag .. b_Rn^dag |state>.

    Normal ordering produces one term per partial pairing between left and
    right modes: each paired (i, j) contributes the commutator of the two
    modes, and the p unpaired pairs contribute N(N-1)..(N-p+1) * I_p over the
    remaining modes.  I_p is symmetric in its mode lists, so sub-chains are
    memoized on the unpaired index sets.
    """
    from itertools import combinations, permutations

    spec, left, right = req.spec, req.left, req.right
    n = req.n
    N = spec.N

    K = {(i, j): commutator(left[i], right[j]) for i in range(n) for j in range(n)}

    core_cache: dict = {}

    def core(l_idx, r_idx) -> complex:
        if not l_idx:
            return 1.0
        key = (l_idx, r_idx)
        if key not in core_cache:
            sub = CorrelatorRequest(
                spec, tuple(left[i] for i in l_idx), tuple(right[j] for j in r_idx)
            )
            core_cache[key] = chain_I(sub)
        return core_cache[key]

    total = 0.0 + 0.0j
    all_idx = tuple(range(n))
    for npaired in range(n + 1):
        for lsub in combinations(all_idx, npaired):
            lrest = tuple(i for i in all_idx if i not in lsub)
            for rsub in combinations(all_idx, npaired):
                rrest = tuple(j for j in all_idx if j not in rsub)
                for rperm in permutations(rsub):
                    kprod = 1.0 + 0.0j
                    for i, j in zip(lsub, rperm):
                        kprod *= K[(i, j)]
                    p = n - npaired
                    total += kprod * _falling(N, p) * core(lrest, rrest)
    return total


def _correlator_mp(req: CorrelatorRequest, bits: int = 320):
    """Arbitrary-precision version of :func:`correlator` (gmpy2 mpc result).

    Downstream quadratic forms in the two-pair correlators carry coefficient
    vectors of size ~1e4 over nearly degenerate families; their values then
    depend on digits 17..22 of these entries, beyond any hardware float.
    """
    import gmpy2
    from gmpy2 import mpc, mpfr

    from itertools import combinations, permutations

    spec, left, right = req.spec, req.left, req.right
    n = req.n
    N = spec.N
    with gmpy2.context(precision=bits):

        def K_mp(m1, m2):
            g, gp = mpfr(m1.gamma), mpfr(m2.gamma)
            return 2 * gmpy2.sqrt(g * gp) / mpc(g + gp, 2 * (m2.omega - m1.omega))

        K = {(i, j): K_mp(left[i], right[j]) for i in range(n) for j in range(n)}
        core_cache: dict = {}

        def core(l_idx, r_idx):
            if not l_idx:
                return mpfr(1)
            key = (l_idx, r_idx)
            if key not in core_cache:
                sub = CorrelatorRequest(
                    spec, tuple(left[i] for i in l_idx), tuple(right[j] for j in r_idx)
                )
                core_cache[key] = _chain_I_mp(sub, bits=bits)
            return core_cache[key]

        total = mpc(0)
        all_idx = tuple(range(n))
        for npaired in range(n + 1):
            for lsub in combinations(all_idx, npaired):
                lrest = tuple(i for i in all_idx if i not in lsub)
                for rsub in combinations(all_idx, npaired):
                    rrest = tuple(j for j in all_idx if j not in rsub)
                    for rperm in permutations(rsub):
                        kprod = mpc(1)
                        for i, j in zip(lsub, rperm):
                            kprod *= K[(i, j)]
                        total += kprod * _falling(N, n - npaired) * core(lrest, rrest)
        return total


def photon_number(spec: EmitterSpec, mode: ExpMode) -> float:
    """Mean photon number of the emitted state in one exponential mode."""
    req = CorrelatorRequest(spec, (mode,), (mode,))
    f = correlator(req)
    val = f - commutator(mode, mode)
    if abs(val.imag) > 1e-9 * max(1.0, abs(val)):
        raise ChainOverflowError(f"photon number came out non-real: {val}")
    return val.real


# ---------------------------------------------------------------------------
# Vacuum overlaps  <0| b_1^{k_1} .. b_D^{k_D} |state>
# ---------------------------------------------------------------------------


def overlap_amplitude(spec: EmitterSpec, base, occupation, max_states: int = MAX_CHAIN_STATES) -> complex:
    """Overlap of the emitted state with a product of mode monomials.

    Zero without computation unless the occupation sums to N.  Evaluated by
    the same peeling construction on the box of partial consumption counts
    s <= occupation, of dimension prod(k_j + 1).
    """
    base = tuple(base)
    occ = tuple(int(k) for k in occupation)
    if len(occ) != len(base):
        raise ValueError(f"occupation length {len(occ)} != number of modes {len(base)}")
    if any(k < 0 for k in occ):
        raise ValueError(f"occupations must be nonnegative, got {occ}")
    if sum(occ) != spec.N:
        return 0.0 + 0.0j

    dims = tuple(k + 1 for k in occ)
    size = math.prod(dims)
    if size > max_states:
        warnings.warn(
            f"overlap state space {size} exceeds budget {max_states}; "
            "expect heavy memory use",
            ResourceWarning,
        )

    N = spec.N
    gam = np.asarray(spec.gamma)
    om = np.asarray(spec.omega)
    xs = np.array([m.gamma for m in base])
    ys = np.array([m.omega for m in base])
    prof = xs / 2.0 - 1j * ys

    strides = np.ones(len(dims), dtype=np.int64)
    for j in range(len(dims) - 2, -1, -1):
        strides[j] = strides[j + 1] * dims[j + 1]

    # enumerate box states; s_of[i] = consumption counts of flat index i
    s_of = np.array(np.unravel_index(np.arange(size), dims)).T

    def c_of(svec):
        m = int(svec.sum())
        return complex(np.dot(svec, prof)) + 0.5 * gam[m] + 1j * om[m]

    rows, cols, vals = [], [], []
    for i in range(size):
        s = s_of[i]
        m = int(s.sum())
        for j in range(len(occ)):
            if s[j] < occ[j]:
                s2 = s.copy()
                s2[j] += 1
                w = (occ[j] - s[j]) * math.sqrt(xs[j] * gam[m + 1]) / c_of(s2)
                rows.append(i)
                cols.append(i + strides[j])
                vals.append(w)
    W = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(size, size), dtype=complex).tocsr()
    v = np.zeros(size, dtype=complex)
    v[size - 1] = 1.0  # fully consumed corner
    for step in range(N):
        v = W @ v
        if not np.all(np.isfinite(v)):
            raise ChainOverflowError(f"overlap chain overflow at step {step + 1}/{N}")
    return complex(v[0])


def all_monomial_overlaps(spec: EmitterSpec, base):
    """Overlaps <0| b^{M} |state> for every monomial M with |M| = N, at once.

    One forward pass over the lattice of partial monomials: dividing out the
    per-step multiplicities turns every single-monomial box chain into a path
    sum with state-independent weights, so all monomials share one sweep.
    Returns (compositions, values) with compositions the list of occupation
    tuples over the base modes in generation order.
    """
    base = tuple(base)
    N, D = spec.N, len(base)
    gam = np.asarray(spec.gamma)
    om = np.asarray(spec.omega)
    xs = np.array([m.gamma for m in base])
    prof = xs / 2.0 - 1j * np.array([m.omega for m in base])
    sqx = np.sqrt(xs)

    level = {(0,) * D: 1.0 + 0.0j}
    for m in range(N):
        nxt: dict = {}
        g = math.sqrt(gam[m + 1])
        for comp, val in level.items():
            csum_base = complex(np.dot(comp, prof))
            for j in range(D):
                comp2 = comp[:j] + (comp[j] + 1,) + comp[j + 1 :]
                c = csum_base + prof[j] + 0.5 * gam[m + 1] + 1j * om[m + 1]
                nxt[comp2] = nxt.get(comp2, 0.0) + val * sqx[j] * g / c
        level = nxt

    comps = sorted(level.keys(), reverse=True)
    vals = np.array(
        [level[c] * math.prod(math.factorial(k) for k in c) for c in comps], dtype=complex
    )
    return comps, vals


# ---------------------------------------------------------------------------
# Correlator cache
# ---------------------------------------------------------------------------


def fingerprint(spec: EmitterSpec, base) -> str:
    payload = {
        "N": spec.N,
        "omega": list(spec.omega),
        "gamma": list(spec.gamma),
        "modes": [[m.gamma, m.omega] for m in base],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


class CacheMismatchError(ValueError):
    """Cache file does not belong to the requested emitter/basis."""


@dataclass
class CorrelatorCache:
    """Saved one- and two-pair correlators over a fixed base-mode family.

    ``order1[(i, j)]`` holds <b_i b_j^dag> for all index pairs and
    ``order2[(i, j, k, l)]``, with i <= j and k <= l, holds
    <b_i b_j b_k^dag b_l^dag>; the operators commute within each group so the
    sorted form is canonical.  Two-pair entries are arbitrary-precision
    complex values (gmpy2 mpc at ``bits`` precision); see
    :func:`_correlator_mp` for why doubles do not suffice there.
    """

    fp: str
    D: int
    max_order: int
    bits: int = 320
    order1: dict = field(default_factory=dict)
    order2: dict = field(default_factory=dict)

    def get1(self, i: int, j: int) -> complex:
        try:
            return self.order1[(i, j)]
        except KeyError:
            raise KeyError(f"one-pair correlator ({i},{j}) missing from cache") from None

    def get2(self, i: int, j: int, k: int, l: int):
        key = (min(i, j), max(i, j), min(k, l), max(k, l))
        try:
            return self.order2[key]
        except KeyError:
            raise KeyError(f"two-pair correlator {key} missing from cache") from None

    @property
    def n_entries(self) -> int:
        return len(self.order1) + len(self.order2)

    def save(self, path):
        import gmpy2

        # str() of an mpfr prints enough digits to reparse bit-identically
        with gmpy2.context(precision=self.bits):
            order2 = [
                [i, j, k, l, str(v.real), str(v.imag)]
                for (i, j, k, l), v in sorted(self.order2.items())
            ]
        payload = {
            "fingerprint": self.fp,
            "D": self.D,
            "max_order": self.max_order,
            "bits": self.bits,
            "order1": [[i, j, v.real, v.imag] for (i, j), v in sorted(self.order1.items())],
            "order2": order2,
        }
        path = str(path)
        fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(payload, fh)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path, expected_fp: str | None = None) -> "CorrelatorCache":
        import gmpy2
        from gmpy2 import mpc, mpfr

        with open(path) as fh:
            payload = json.load(fh)
        if expected_fp is not None and payload["fingerprint"] != expected_fp:
            raise CacheMismatchError(
                f"cache fingerprint {payload['fingerprint'][:12]}... does not match "
                f"requested {expected_fp[:12]}..."
            )
        bits = int(payload.get("bits", 320))
        cache = cls(
            fp=payload["fingerprint"], D=payload["D"], max_order=payload["max_order"], bits=bits
        )
        for i, j, re, im in payload["order1"]:
            cache.order1[(i, j)] = complex(re, im)
        with gmpy2.context(precision=bits):
            for i, j, k, l, re, im in payload["order2"]:
                cache.order2[(i, j, k, l)] = mpc(mpfr(re), mpfr(im))
        return cache


def build_cache(
    spec: EmitterSpec, base, max_order: int = 2, cache_path=None, bits: int = 320
) -> CorrelatorCache:
    """Compute and store all one- (and optionally two-) pair correlators.

    Hermiticity (<b_i b_j b_k^dag b_l^dag> = conj of the index-swapped entry)
    halves the number of chains actually run; the full canonical table is
    stored.  Two-pair entries are evaluated in arbitrary precision.  If
    ``cache_path`` exists with a matching fingerprint it is loaded instead of
    recomputed.
    """
    if max_order not in (1, 2):
        raise ValueError(f"max_order must be 1 or 2, got {max_order}")
    base = tuple(base)
    fp = fingerprint(spec, base)
    if cache_path is not None and os.path.exists(cache_path):
        cache = CorrelatorCache.load(cache_path, expected_fp=fp)
        if cache.max_order >= max_order:
            return cache

    D = len(base)
    cache = CorrelatorCache(fp=fp, D=D, max_order=max_order, bits=bits)
    for i in range(D):
        for j in range(i, D):
            val = correlator(CorrelatorRequest(spec, (base[i],), (base[j],)))
            cache.order1[(i, j)] = val
            if i != j:
                cache.order1[(j, i)] = np.conj(val)

    if max_order == 2 and spec.N >= 2:
        import gmpy2

        pairs = [(i, j) for i in range(D) for j in range(i, D)]
        # conjugation must run at full precision; gmpy2 rounds every
        # operation to the *active* context
        with gmpy2.context(precision=bits):
            for a, (i, j) in enumerate(pairs):
                for k, l in pairs[a:]:
                    val = _correlator_mp(
                        CorrelatorRequest(spec, (base[i], base[j]), (base[k], base[l])),
                        bits=bits,
                    )
                    cache.order2[(i, j, k, l)] = val
                    if (i, j) != (k, l):
                        cache.order2[(k, l, i, j)] = val.conjugate()

    if cache_path is not None:
        cache.save(cache_path)
    return cache


def one_body_matrix(spec: EmitterSpec, base, cache: CorrelatorCache | None = None) -> np.ndarray:
    """Normal-ordered matrix T[k, l] = <b_k^dag b_l>, Hermitian PSD."""
    base = tuple(base)
    D = len(base)
    T = np.empty((D, D), dtype=complex)
    for k in range(D):
        for l in range(D):
            anti = cache.get1(l, k) if cache is not None else correlator(
                CorrelatorRequest(spec, (base[l],), (base[k],))
            )
            T[k, l] = anti - commutator(base[l], base[k])
    herm_defect = np.max(np.abs(T - T.conj().T))
    if herm_defect > 1e-8 * max(1.0, float(np.max(np.abs(T)))):
        raise ChainOverflowError(f"one-body matrix not Hermitian, defect {herm_defect:.3e}")
    return 0.5 * (T + T.conj().T)
