"""Few-mode characterization of the emitted state.

Given an orthonormal mode basis (from :func:`wgfock.modes.orthogonalize`),
this module reports per-mode photon occupations, cumulative captured
fractions C_d, photon-number variances of the leading d modes, and the
explicit occupation-basis amplitudes of the state projected onto the d
leading modes together with the projection fidelity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .correlators import CorrelatorCache, one_body_matrix
from .emitter import EmitterSpec
from .modes import OrthoBasis, gram_matrix, ladder_family, orthogonalize

PROJECT_MAX_PHOTONS = 12  # occupation-basis projection cap; overridable


def build_basis(spec: EmitterSpec, D: int, omega0: float | None = None,
                cache: CorrelatorCache | None = None) -> OrthoBasis:
    """Orthonormal modes for ``spec`` from the D-mode rate-ladder family.

    The family is centred on ``omega0`` (default: the lowest transition
    frequency of the ladder).
    """
    if omega0 is None:
        omega0 = spec.omega[1] - spec.omega[0]
    fam = ladder_family(spec.N, D, omega0)
    T = one_body_matrix(spec, fam, cache=cache)
    return orthogonalize(T, gram_matrix(fam), base=fam)


def mode_occupations(spec: EmitterSpec, basis: OrthoBasis, d: int) -> np.ndarray:
    """Mean photon numbers of the d leading orthonormal modes (nonincreasing)."""
    if d < 1 or d > basis.n_modes:
        raise ValueError(f"d must be in 1..{basis.n_modes}, got {d}")
    return np.array(basis.lambdas[:d], dtype=float)


def ratio_C(spec: EmitterSpec, basis: OrthoBasis, d: int) -> float:
    """Fraction of the N photons contained in the d leading modes."""
    return float(np.sum(mode_occupations(spec, basis, d)) / spec.N)


def variance_sigma(spec: EmitterSpec, basis: OrthoBasis, d: int, cache: CorrelatorCache) -> float:
    """Standard deviation of the photon count in the d leading modes.

    Normal-ordering n_d^2 = (sum_j c_j^dag c_j)^2 against [c, c^dag] = 1 gives

        <n_d^2> = sum_{i,j<=d} <c_i c_j c_i^dag c_j^dag>
                  - (2d+1) <n_d> - d(d+1),

    with every <c c c^dag c^dag> assembled from the cached two-pair
    base-mode correlators through the basis coefficients.

    The mode coefficients reach ~1e4 over the nearly degenerate exponential
    family, so the quartic contraction cancels ~18 digits and must run in
    arbitrary precision against arbitrary-precision cached entries.
    """
    import gmpy2
    from gmpy2 import mpc, mpfr

    if d < 1 or d > basis.n_modes:
        raise ValueError(f"d must be in 1..{basis.n_modes}, got {d}")
    D = basis.D
    occ = basis.lambdas[:d]
    n_mean = float(np.sum(occ))

    with gmpy2.context(precision=cache.bits):
        V = [
            [mpc(mpfr(basis.V[p, j].real), mpfr(basis.V[p, j].imag)) for j in range(d)]
            for p in range(D)
        ]
        anti_sum = mpfr(0)
        for i in range(d):
            for j in range(d):
                acc = mpc(0)
                for p in range(D):
                    for q in range(D):
                        left = V[p][i] * V[q][j]
                        if left == 0:
                            continue
                        inner = mpc(0)
                        for r in range(D):
                            for s in range(D):
                                inner += (
                                    V[r][i].conjugate()
                                    * V[s][j].conjugate()
                                    * cache.get2(p, q, r, s)
                                )
                        acc += left * inner
                anti_sum += acc.real
        n2 = float(anti_sum) - (2 * d + 1) * n_mean - d * (d + 1)

    var = n2 - n_mean**2
    if var < -1e-6 * max(1.0, n_mean**2):
        raise ArithmeticError(f"variance came out negative: {var}")
    return math.sqrt(max(var, 0.0))


@dataclass
class OccupationAmplitudes:
    """Projection of the emitted state onto d orthonormal modes.

    ``amps[(k_1, .., k_d)]`` is the amplitude on the occupation state with
    k_j photons in mode j (all tuples sum to N).  The squared norm is the
    projection fidelity and is <= 1; :meth:`normalized` rescales to a unit
    state for use as an interferometer input.
    """

    d: int
    N: int
    amps: dict = field(default_factory=dict)

    @property
    def fidelity(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amps.values()))

    def occupations(self) -> np.ndarray:
        """Mean photon number per mode implied by the retained amplitudes."""
        out = np.zeros(self.d)
        for k, a in self.amps.items():
            out += np.asarray(k) * abs(a) ** 2
        return out

    def normalized(self) -> "OccupationAmplitudes":
        nrm = math.sqrt(self.fidelity)
        if nrm == 0:
            raise ValueError("cannot normalize a zero projection")
        return OccupationAmplitudes(
            self.d, self.N, {k: a / nrm for k, a in self.amps.items()}
        )

    def sorted_items(self):
        return sorted(self.amps.items(), reverse=True)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "N": self.N,
            "amps": [[list(k), a.real, a.imag] for k, a in self.sorted_items()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "OccupationAmplitudes":
        amps = {tuple(k): complex(re, im) for k, re, im in data["amps"]}
        return cls(d=int(data["d"]), N=int(data["N"]), amps=amps)

    @classmethod
    def from_json(cls, text: str) -> "OccupationAmplitudes":
        return cls.from_dict(json.loads(text))


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative ints summing to ``total``,
    lexicographically descending."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _required_bits(basis: OrthoBasis, d: int, N: int) -> int:
    """Working precision for the monomial expansion of orthonormal-mode
    powers: intermediate coefficient mass grows like prod ||V column||_1^k."""
    col_l1 = np.sum(np.abs(basis.V[:, :d]), axis=0)
    worst = float(np.max(col_l1)) if len(col_l1) else 1.0
    return min(2048, 96 + int(N * math.log2(2.0 + worst)))


def project(spec: EmitterSpec, basis: OrthoBasis, d: int,
            max_photons: int = PROJECT_MAX_PHOTONS) -> OccupationAmplitudes:
    """Occupation amplitudes of the emitted state in the d leading modes.

    Every vacuum overlap against a base-mode monomial of total degree N is
    computed once (a single lattice sweep); the orthonormal-mode monomials
    are then expanded over them by applying one mode factor at a time, with
    the expansion vectors shared along the lexicographic prefix tree of
    occupation tuples.

    The whole pipeline runs in arbitrary precision (gmpy2): the orthonormal
    modes carry coefficients up to ~1e4 over a nearly degenerate exponential
    family, so the degree-N expansion cancels ~N*log10(|V|) digits and would
    be pure noise in doubles already for N around 4.
    """
    import gmpy2
    from gmpy2 import mpc, mpfr

    if d < 1 or d > basis.n_modes:
        raise ValueError(f"d must be in 1..{basis.n_modes}, got {d}")
    N, D = spec.N, basis.D
    if N > max_photons:
        raise ValueError(
            f"projection of an N={N} state exceeds the {max_photons}-photon budget; "
            "raise max_photons explicitly if you mean it"
        )

    bits = _required_bits(basis, d, N)
    with gmpy2.context(precision=bits):
        gam = [mpfr(g) for g in spec.gamma]
        om = [mpfr(w) for w in spec.omega]
        xs = [mpfr(m.gamma) for m in basis.base]
        prof = [mpc(xs[p] / 2, -mpfr(basis.base[p].omega)) for p in range(D)]
        sqx = [gmpy2.sqrt(x) for x in xs]
        Vmp = [[mpc(mpfr(basis.V[p, j].real), mpfr(basis.V[p, j].imag)) for j in range(d)]
               for p in range(D)]

        index_at = [{c: i for i, c in enumerate(_compositions(m, D))} for m in range(N + 1)]

        # vacuum overlaps <0| b^M |state> for every degree-N monomial M,
        # by one forward sweep with per-step multiplicities divided out
        level = [mpc(0)] * len(index_at[0])
        level[0] = mpc(1)
        for m in range(N):
            src, dst = index_at[m], index_at[m + 1]
            nxt = [mpc(0)] * len(dst)
            g = gmpy2.sqrt(gam[m + 1])
            for comp, i in src.items():
                val = level[i]
                if val == 0:
                    continue
                csum = sum((comp[p] * prof[p] for p in range(D) if comp[p]), mpc(0))
                for p in range(D):
                    c = csum + prof[p] + gam[m + 1] / 2 + mpc(0, om[m + 1])
                    nxt[dst[comp[:p] + (comp[p] + 1,) + comp[p + 1:]]] += val * sqx[p] * g / c
            level = nxt
        o_vec = [
            val * math.prod(math.factorial(k) for k in comp)
            for comp, val in zip(index_at[N].keys(), level)
        ]

        # transition index lists for "multiply by one power of c_j"
        moves = []
        for m in range(N):
            src, dst = index_at[m], index_at[m + 1]
            moves.append(
                [
                    (i, [dst[comp[:p] + (comp[p] + 1,) + comp[p + 1:]] for p in range(D)])
                    for comp, i in src.items()
                ]
            )

        def apply_mode(j, m, vec):
            out = [mpc(0)] * len(index_at[m + 1])
            for i, targets in moves[m]:
                val = vec[i]
                if val == 0:
                    continue
                for p in range(D):
                    out[targets[p]] += Vmp[p][j] * val
            return out

        amps: dict = {}

        def descend(j, level_m, vec, prefix):
            if j == d - 1:
                k_last = N - level_m
                for _ in range(k_last):
                    vec = apply_mode(j, level_m, vec)
                    level_m += 1
                key = prefix + (k_last,)
                beta = sum((a * b for a, b in zip(vec, o_vec)), mpc(0))
                beta /= gmpy2.sqrt(math.prod(math.factorial(k) for k in key))
                amps[key] = complex(beta)
                return
            cur = vec
            for k_j in range(0, N - level_m + 1):
                descend(j + 1, level_m + k_j, cur, prefix + (k_j,))
                if level_m + k_j < N:
                    cur = apply_mode(j, level_m + k_j, cur)

        descend(0, 0, [mpc(1)], ())
    return OccupationAmplitudes(d=d, N=N, amps=amps)
