"""Lossy multimode Mach-Zehnder interferometry over d modes per arm.

Arm states are fixed-photon-number occupation amplitudes (d internal modes
each).  The interferometer rotates each internal mode pair (a_j, b_j) by the
same angle, photon loss couples every output mode to its own environment
mode, and detection is photon counting that either resolves the internal
mode (MNR) or only the per-arm totals (NR).  Phase sensitivities come out as
the classical Fisher information of the outcome distribution, with the pure
-state quantum Fisher information as the benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .states import OccupationAmplitudes

MAX_PHOTONS = 12  # outcome space grows ~ N^(2d); guard rails
MAX_MODES = 3
P_FLOOR = 1e-14  # outcomes below this probability use the quadratic limit


def qfi_from_occupations(n, m) -> float:
    """Phase-estimation QFI of a product two-arm state from per-mode means.

    Q = sum_j n_j (1 + m_j) + m_j (1 + n_j).  Exact whenever neither arm has
    coherence between different internal modes (true for twin Fock states and
    for emitted states expressed in their natural orthonormal modes); states
    with inter-mode coherence pick up additional positive cross terms, see
    :func:`pure_qfi`.
    """
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    if n.shape != m.shape:
        raise ValueError(f"occupation lists differ in length: {n.shape} vs {m.shape}")
    if np.any(n < 0) or np.any(m < 0):
        raise ValueError("occupations must be nonnegative")
    return float(np.sum(n * (1 + m) + m * (1 + n)))


@dataclass
class TwoArmState:
    """Joint amplitudes over pairs of occupation tuples (arm A, arm B)."""

    d: int
    n: int
    m: int
    amps: dict = field(default_factory=dict)

    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amps.values()))

    def inner(self, other: "TwoArmState") -> complex:
        if len(self.amps) > len(other.amps):
            return np.conj(other.inner(self))
        return complex(
            sum(np.conj(a) * other.amps.get(k, 0.0) for k, a in self.amps.items())
        )


def _joint(stateA: OccupationAmplitudes, stateB: OccupationAmplitudes) -> TwoArmState:
    if stateA.d != stateB.d:
        raise ValueError(f"arm states differ in mode count: {stateA.d} vs {stateB.d}")
    if stateA.d > MAX_MODES:
        raise ValueError(f"at most {MAX_MODES} modes per arm supported, got {stateA.d}")
    if stateA.N + stateB.N > 2 * MAX_PHOTONS:
        raise ValueError(
            f"total photon number {stateA.N + stateB.N} exceeds the "
            f"{2 * MAX_PHOTONS} budget"
        )
    amps = {}
    for ka, aa in stateA.amps.items():
        if aa == 0:
            continue
        for kb, ab in stateB.amps.items():
            if ab == 0:
                continue
            amps[(ka, kb)] = aa * ab
    return TwoArmState(d=stateA.d, n=stateA.N, m=stateB.N, amps=amps)


@lru_cache(maxsize=None)
def _pair_rotation(M: int, phi: float) -> np.ndarray:
    """Fock-basis matrix of the two-mode rotation a -> cos a + sin b,
    b -> -sin a + cos b on the M-photon sector: U[r, p] maps |p, M-p>."""
    c, s = math.cos(phi / 2.0), math.sin(phi / 2.0)
    U = np.zeros((M + 1, M + 1))
    fact = [math.factorial(k) for k in range(M + 1)]
    for p in range(M + 1):
        for r in range(M + 1):
            acc = 0.0
            for q in range(max(0, r - (M - p)), min(p, r) + 1):
                acc += (
                    math.comb(p, q)
                    * math.comb(M - p, r - q)
                    * c ** (q + M - p - r + q)
                    * s ** (p - q)
                    * (-s) ** (r - q)
                )
            U[r, p] = acc * math.sqrt(fact[r] * fact[M - r] / (fact[p] * fact[M - p]))
    return U


def _rotate(joint: TwoArmState, phi: float) -> TwoArmState:
    amps = joint.amps
    for j in range(joint.d):
        nxt: dict = {}
        for (ka, kb), amp in amps.items():
            M = ka[j] + kb[j]
            U = _pair_rotation(M, phi)
            col = U[:, ka[j]]
            for r in range(M + 1):
                u = col[r]
                if u == 0.0:
                    continue
                key = (
                    ka[:j] + (r,) + ka[j + 1 :],
                    kb[:j] + (M - r,) + kb[j + 1 :],
                )
                nxt[key] = nxt.get(key, 0.0) + u * amp
        amps = nxt
    return TwoArmState(d=joint.d, n=joint.n, m=joint.m, amps=amps)


def evolve(stateA: OccupationAmplitudes, stateB: OccupationAmplitudes, phi: float) -> TwoArmState:
    """Output state of the interferometer at phase ``phi`` (unitary)."""
    return _rotate(_joint(stateA, stateB), phi)


def _apply_generator(joint: TwoArmState) -> TwoArmState:
    """d/dphi at the input side: (1/2) sum_j (b_j^dag a_j - a_j^dag b_j)."""
    out: dict = {}
    for (ka, kb), amp in joint.amps.items():
        for j in range(joint.d):
            if ka[j] > 0:
                key = (
                    ka[:j] + (ka[j] - 1,) + ka[j + 1 :],
                    kb[:j] + (kb[j] + 1,) + kb[j + 1 :],
                )
                out[key] = out.get(key, 0.0) + 0.5 * amp * math.sqrt(ka[j] * (kb[j] + 1))
            if kb[j] > 0:
                key = (
                    ka[:j] + (ka[j] + 1,) + ka[j + 1 :],
                    kb[:j] + (kb[j] - 1,) + kb[j + 1 :],
                )
                out[key] = out.get(key, 0.0) - 0.5 * amp * math.sqrt(kb[j] * (ka[j] + 1))
    return TwoArmState(d=joint.d, n=joint.n, m=joint.m, amps=out)


def derivative_state(
    stateA: OccupationAmplitudes, stateB: OccupationAmplitudes, phi: float
) -> TwoArmState:
    """Exact d/dphi of the output state: generator first, then the rotation
    (the generator commutes with the evolution it generates)."""
    return _rotate(_apply_generator(_joint(stateA, stateB)), phi)


def pure_qfi(stateA: OccupationAmplitudes, stateB: OccupationAmplitudes) -> float:
    """QFI of the pure lossless output family, 4 (<dpsi|dpsi> - |<psi|dpsi>|^2).

    Phase-independent, so evaluated without rotating.  Agrees with
    :func:`qfi_from_occupations` when the arms carry no inter-mode coherence;
    exceeds it otherwise.
    """
    joint = _joint(stateA, stateB)
    dpsi = _apply_generator(joint)
    overlap = joint.inner(dpsi)
    return 4.0 * (dpsi.norm_sq() - abs(overlap) ** 2 / joint.norm_sq())


# ---------------------------------------------------------------------------
# outcome distributions and Fisher information
# ---------------------------------------------------------------------------


@dataclass
class OutcomeEntry:
    label: tuple
    P: float
    dP: float
    aux: float  # sum of loss-weighted |d amplitude|^2; P'' / 2 where P = 0


@dataclass
class OutcomeDistribution:
    """Photon-counting outcome probabilities and their phase derivatives.

    ``granularity`` is "mnr" (per-mode counts) or "nr" (per-arm totals);
    entries are sorted by outcome label.
    """

    granularity: str
    phi: float
    eta: float
    entries: list

    def total_P(self) -> float:
        return float(sum(e.P for e in self.entries))

    def total_dP(self) -> float:
        return float(sum(e.dP for e in self.entries))


def _binomial_weights(k: int, eta: float) -> np.ndarray:
    return np.array(
        [math.comb(k, r) * eta**r * (1.0 - eta) ** (k - r) for r in range(k + 1)]
    )


def lossy_distribution(
    stateA: OccupationAmplitudes,
    stateB: OccupationAmplitudes,
    phi: float,
    eta: float = 1.0,
    granularity: str = "nr",
) -> OutcomeDistribution:
    """Counting statistics after the interferometer and per-mode loss.

    Loss couples every output mode to a fresh environment mode with
    transmissivity ``eta``; tracing the environment makes the surviving
    counts a per-mode binomial thinning of the lossless mode-resolved
    distribution (no coherence survives between different loss records).
    Derivatives ride through the same linear map.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmissivity must be in [0, 1], got {eta}")
    if granularity not in ("mnr", "nr"):
        raise ValueError(f"granularity must be 'mnr' or 'nr', got {granularity!r}")

    out = evolve(stateA, stateB, phi)
    dout = derivative_state(stateA, stateB, phi)

    P: dict = {}
    dP: dict = {}
    aux: dict = {}

    def accumulate(key, p, dp, au):
        P[key] = P.get(key, 0.0) + p
        dP[key] = dP.get(key, 0.0) + dp
        aux[key] = aux.get(key, 0.0) + au

    keys = set(out.amps) | set(dout.amps)
    for ka, kb in keys:
        amp = out.amps.get((ka, kb), 0.0)
        damp = dout.amps.get((ka, kb), 0.0)
        p0 = abs(amp) ** 2
        dp0 = 2.0 * (np.conj(amp) * damp).real
        au0 = abs(damp) ** 2
        if eta == 1.0:
            accumulate((ka, kb), p0, dp0, au0)
            continue
        wa = [_binomial_weights(k, eta) for k in ka]
        wb = [_binomial_weights(k, eta) for k in kb]
        # independent thinning of every mode
        surv_a = _survival_tuples(ka, wa)
        surv_b = _survival_tuples(kb, wb)
        for ra, pwa in surv_a:
            for rb, pwb in surv_b:
                w = pwa * pwb
                accumulate((ra, rb), p0 * w, dp0 * w, au0 * w)

    if granularity == "nr":
        Pn: dict = {}
        dPn: dict = {}
        auxn: dict = {}
        for (ka, kb), p in P.items():
            key = (sum(ka), sum(kb))
            Pn[key] = Pn.get(key, 0.0) + p
            dPn[key] = dPn.get(key, 0.0) + dP[(ka, kb)]
            auxn[key] = auxn.get(key, 0.0) + aux[(ka, kb)]
        P, dP, aux = Pn, dPn, auxn

    entries = [
        OutcomeEntry(k, P[k], dP[k], aux[k])
        for k in sorted(P)
        if P[k] != 0.0 or dP[k] != 0.0 or aux[k] != 0.0
    ]
    return OutcomeDistribution(granularity=granularity, phi=phi, eta=eta, entries=entries)


def _survival_tuples(occ, weights):
    """All surviving-count tuples r <= occ with their product weights."""
    out = [((), 1.0)]
    for j, k in enumerate(occ):
        nxt = []
        for prefix, w in out:
            for r in range(k + 1):
                nxt.append((prefix + (r,), w * weights[j][r]))
        out = nxt
    return out


@dataclass
class CfiResult:
    value: float
    dropped_mass: float
    n_limit_terms: int


def cfi_details(dist: OutcomeDistribution, p_floor: float = P_FLOOR) -> CfiResult:
    """Classical Fisher information sum (dP/dphi)^2 / P over outcomes.

    Outcomes with P below ``p_floor`` are 0/0 at phi = 0 exactly; there the
    quadratic expansion P ~ aux * phi^2 resolves the limit to 4 * aux, which
    is included when the distribution was evaluated at phi = 0.  Away from
    phi = 0 such outcomes are dropped and their mass reported.
    """
    total = 0.0
    dropped = 0.0
    n_limit = 0
    at_zero = dist.phi == 0.0
    for e in dist.entries:
        if e.P >= p_floor:
            total += e.dP * e.dP / e.P
        elif at_zero and e.aux > 0.0:
            total += 4.0 * e.aux
            n_limit += 1
        else:
            dropped += e.P
    return CfiResult(value=total, dropped_mass=dropped, n_limit_terms=n_limit)


def cfi(dist: OutcomeDistribution, p_floor: float = P_FLOOR) -> float:
    return cfi_details(dist, p_floor).value


def cfi_scan(stateA, stateB, phis, etas, granularity: str = "nr"):
    """CFI over a (phi, eta) grid, with the pure-state QFI and the shot-noise
    limit C = N as reference columns.  Deterministic row order."""
    phis = list(phis)
    etas = list(etas)
    if not phis or not etas:
        raise ValueError("phase and transmissivity grids must be nonempty")
    q = pure_qfi(stateA, stateB)
    snl = float(stateA.N + stateB.N)
    rows = []
    for phi in phis:
        for eta in etas:
            dist = lossy_distribution(stateA, stateB, phi, eta, granularity)
            rows.append(
                {
                    "phi": float(phi),
                    "eta": float(eta),
                    "granularity": granularity,
                    "cfi": cfi(dist),
                    "qfi": q,
                    "snl": snl,
                }
            )
    return rows


# ---------------------------------------------------------------------------
# named input states
# ---------------------------------------------------------------------------


def twin_fock_arm(N: int) -> OccupationAmplitudes:
    """One arm of a twin Fock input: |N/2> in a single mode."""
    if N < 2 or N % 2:
        raise ValueError(f"twin Fock needs an even total photon number, got {N}")
    return OccupationAmplitudes(d=1, N=N // 2, amps={(N // 2,): 1.0})


def uniform_two_mode_arm(n: int) -> OccupationAmplitudes:
    """Equal-weight superposition of all |j, n-j> splits (normalized)."""
    if n < 1:
        raise ValueError(f"need at least one photon, got {n}")
    amp = 1.0 / math.sqrt(n + 1)
    return OccupationAmplitudes(d=2, N=n, amps={(j, n - j): amp for j in range(n + 1)})


def noon_two_mode_arm(n: int) -> OccupationAmplitudes:
    """(|0, n> + |n, 0>) / sqrt(2): all photons bunched in either mode."""
    if n < 1:
        raise ValueError(f"need at least one photon, got {n}")
    s = 1.0 / math.sqrt(2.0)
    return OccupationAmplitudes(d=2, N=n, amps={(0, n): s, (n, 0): s})
