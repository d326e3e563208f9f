"""Exponential wavepacket modes and their orthogonalization.

A mode ``b_{gamma,omega}`` has the normalized temporal profile
``sqrt(gamma) * exp(-t*(i*omega + gamma/2))`` for t >= 0.  Families of such
modes are overcomplete and non-orthogonal; orthonormal bosonic modes that
maximize photon content are obtained from the generalized eigenproblem
``T v = lambda R v`` where T is the one-body correlator matrix and R the
Gram matrix of commutators.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class ExpMode:
    """Exponential wavepacket mode with decay rate ``gamma`` and carrier ``omega``."""

    gamma: float
    omega: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "omega", float(self.omega))
        if self.gamma <= 0:
            raise ValueError(f"mode decay rate must be positive, got {self.gamma}")


def commutator(m1: ExpMode, m2: ExpMode) -> complex:
    """Commutator [b_{m1}, b_{m2}^dag] = 2 sqrt(g g') / (g + g' + 2i(w' - w)).

    Equals the overlap of the two unit-norm profiles; it is 1 for identical
    modes and conjugate-symmetric under argument swap.
    """
    g, w = m1.gamma, m1.omega
    gp, wp = m2.gamma, m2.omega
    return 2.0 * math.sqrt(g * gp) / (g + gp + 2j * (wp - w))


def gram_matrix(modes) -> np.ndarray:
    """Hermitian PSD matrix R[i, j] = [b_i, b_j^dag] of a mode family."""
    D = len(modes)
    R = np.empty((D, D), dtype=complex)
    for i in range(D):
        for j in range(i, D):
            R[i, j] = commutator(modes[i], modes[j])
            R[j, i] = np.conj(R[i, j])
    return R


def ladder_family(N: float, D: int, omega0: float = 0.0) -> list[ExpMode]:
    """Heuristic family of D modes with rates j*N/ln(N), j = 1..D, at omega0.

    N/ln(N) is the inverse of the mean decay time of a collectively enhanced
    N-photon decay, which makes these rates a good starting family for such
    states.  Requires N >= 2 so the base rate is positive and finite.
    """
    if N < 2:
        raise ValueError(f"ladder family needs N >= 2, got {N}")
    if D < 1:
        raise ValueError(f"family size must be >= 1, got {D}")
    x = N / math.log(N)
    return [ExpMode(gamma=j * x, omega=omega0) for j in range(1, D + 1)]


class IllConditionedGramError(ValueError):
    """Raised when the Gram matrix is numerically singular beyond repair."""


@dataclass(frozen=True)
class OrthoBasis:
    """Orthonormal bosonic modes c_k = sum_j V[j, k] b_j built on a raw family.

    ``V`` has one column per retained mode and satisfies V^dag R V = I, i.e.
    [c_i, c_j^dag] = delta_ij.  Columns are ordered by descending eigenvalue
    ``lambdas[k]`` (the photon content of c_k in the state that produced T).
    ``n_deflated`` counts raw directions dropped because the Gram matrix was
    numerically degenerate along them.
    """

    base: tuple
    V: np.ndarray
    lambdas: np.ndarray
    R: np.ndarray
    T: np.ndarray
    n_deflated: int = 0
    defect: float = 0.0

    @property
    def D(self) -> int:
        return len(self.base)

    @property
    def n_modes(self) -> int:
        return self.V.shape[1]

    def to_dict(self) -> dict:
        return {
            "base": [{"gamma": m.gamma, "omega": m.omega} for m in self.base],
            "V": _interleave(self.V),
            "lambdas": [float(x) for x in self.lambdas],
            "R": _interleave(self.R),
            "T": _interleave(self.T),
            "n_deflated": self.n_deflated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _interleave(M: np.ndarray) -> list:
    """Complex matrix -> nested [re, im, re, im, ...] rows (JSON-safe)."""
    out = []
    for row in np.atleast_2d(M):
        flat = []
        for z in row:
            flat.extend((float(np.real(z)), float(np.imag(z))))
        out.append(flat)
    return out


def _deinterleave(rows: list) -> np.ndarray:
    data = []
    for row in rows:
        re = row[0::2]
        im = row[1::2]
        data.append([complex(a, b) for a, b in zip(re, im)])
    return np.array(data, dtype=complex)


def basis_from_dict(data: dict) -> OrthoBasis:
    base = tuple(ExpMode(m["gamma"], m["omega"]) for m in data["base"])
    return OrthoBasis(
        base=base,
        V=_deinterleave(data["V"]),
        lambdas=np.array(data["lambdas"], dtype=float),
        R=_deinterleave(data["R"]),
        T=_deinterleave(data["T"]),
        n_deflated=int(data.get("n_deflated", 0)),
    )


def basis_from_json(text: str) -> OrthoBasis:
    return basis_from_dict(json.loads(text))


# Gram eigenvalues below RCOND_GRAM * max are deflated.  The threshold sits
# just above eigensolver noise: barely-resolved directions still carry real
# photon content (cutting at 1e-10 visibly shifts the leading photon
# fractions of a 10-mode family), so only true numerical nulls are dropped.
RCOND_GRAM = 1e-13


def orthogonalize(T: np.ndarray, R: np.ndarray, base=(), rcond: float = RCOND_GRAM) -> OrthoBasis:
    """Solve T v = lambda R v and return R-orthonormal modes sorted by lambda.

    The pencil is reduced to an ordinary Hermitian eigenproblem by whitening
    with the well-conditioned part of R; directions where R's eigenvalues
    fall below ``rcond * max`` are deflated (close exponential rates make the
    family numerically degenerate, and keeping those directions would only
    amplify noise).  Eigenvector phases are fixed by making the largest
    component of each column real positive; eigenvalue ties are broken by the
    index of that component.
    """
    T = np.asarray(T, dtype=complex)
    R = np.asarray(R, dtype=complex)
    if T.shape != R.shape or T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"T and R must be square and same shape, got {T.shape} and {R.shape}")
    if np.max(np.abs(T - T.conj().T)) > 1e-8 * max(1.0, np.max(np.abs(T))):
        raise ValueError("one-body correlator matrix T must be Hermitian")
    if np.max(np.abs(R - R.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(R))):
        raise ValueError("Gram matrix R must be Hermitian")

    w, U = scipy.linalg.eigh(R)
    wmax = w[-1]
    if wmax <= 0:
        raise IllConditionedGramError("Gram matrix has no positive eigenvalues")
    keep = w > rcond * wmax
    n_deflated = int(np.sum(~keep))
    X = U[:, keep] / np.sqrt(w[keep])

    Tw = X.conj().T @ T @ X
    Tw = 0.5 * (Tw + Tw.conj().T)  # re-symmetrize rounding noise
    lam, W = scipy.linalg.eigh(Tw)
    V = X @ W

    # Polish residual non-orthonormality away with V <- V M^{-1/2}.  The
    # reachable floor is ~ eps * cond(R): barely-retained Gram directions
    # carry photon content that an exact solver would keep (dropping them
    # visibly distorts the leading photon fractions), so we keep them and
    # report the achieved defect instead of failing.
    defect = np.inf
    for _ in range(3):
        M = V.conj().T @ R @ V
        defect = float(np.max(np.abs(M - np.eye(M.shape[0]))))
        if defect < 1e-13:
            break
        mw, mU = scipy.linalg.eigh(0.5 * (M + M.conj().T))
        if mw[0] <= 0:
            raise IllConditionedGramError("orthonormality polish lost positive definiteness")
        V = V @ (mU / np.sqrt(mw)) @ mU.conj().T
        defect = float(np.max(np.abs(V.conj().T @ R @ V - np.eye(V.shape[1]))))
    if defect > 1e-6:
        raise IllConditionedGramError(
            f"orthonormality defect {defect:.3e} exceeds 1e-6; Gram matrix unusable"
        )

    lam = np.real(np.diag(V.conj().T @ T @ V))

    # descending lambda; ties broken by ascending index of largest |component|
    anchor = np.abs(V).argmax(axis=0)
    order = sorted(range(len(lam)), key=lambda k: (-lam[k], anchor[k]))
    lam = lam[order]
    V = V[:, order]

    # phase convention: largest-magnitude component real positive
    for k in range(V.shape[1]):
        piv = V[np.abs(V[:, k]).argmax(), k]
        if piv != 0:
            V[:, k] *= np.conj(piv) / abs(piv)

    return OrthoBasis(
        base=tuple(base), V=V, lambdas=lam, R=R, T=T, n_deflated=n_deflated, defect=defect
    )
