"""Nonlinear N-level emitters decaying into a 1D waveguide.

An emitter is fully described by its level frequencies ``omega[0..N]`` and
the decay rates ``gamma[0..N]`` of the transitions n -> n-1.  All rates and
frequencies are dimensionless (the elementary waveguide decay rate is the
unit of rate, its inverse the unit of time).  The ground level is pinned to
``omega[0] = gamma[0] = 0``: the emitted-photon amplitude only ever depends
on differences between adjacent levels, so this removes a gauge freedom.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class EmitterSpec:
    """Level ladder of an N-excitation emitter.

    Attributes
    ----------
    N : int
        Number of excitations, i.e. photons emitted in a full decay.
    omega : tuple of float
        Level frequencies omega_0 .. omega_N, with omega_0 = 0.
    gamma : tuple of float
        Transition rates gamma_0 .. gamma_N, gamma_0 = 0 and gamma_n > 0
        for 1 <= n <= N.
    """

    N: int
    omega: tuple = field(default=())
    gamma: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if self.N < 1:
            raise ValueError(f"need at least one excitation, got N={self.N}")
        if len(self.omega) != self.N + 1 or len(self.gamma) != self.N + 1:
            raise ValueError(
                f"omega and gamma must have N+1={self.N + 1} entries, got "
                f"{len(self.omega)} and {len(self.gamma)}"
            )
        if self.omega[0] != 0.0 or self.gamma[0] != 0.0:
            raise ValueError("ground-level convention requires omega[0] = gamma[0] = 0")
        if any(g <= 0.0 for g in self.gamma[1:]):
            raise ValueError("all transition rates gamma_1..gamma_N must be positive")

    def to_dict(self) -> dict:
        return {"N": self.N, "omega": list(self.omega), "gamma": list(self.gamma)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def superradiant_spec(N: int, Gamma1d: float = 1.0, omega0: float = 0.0) -> EmitterSpec:
    """Collectively enhanced decay ladder: gamma_n = Gamma1d * n(N-n+1).

    Models N emitters coupled to the waveguide in the mirror configuration,
    with equally spaced levels omega_n = n * omega0.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if Gamma1d <= 0:
        raise ValueError(f"Gamma1d must be positive, got {Gamma1d}")
    omega = tuple(n * omega0 for n in range(N + 1))
    gamma = tuple(Gamma1d * n * (N - n + 1) for n in range(N + 1))
    return EmitterSpec(N=N, omega=omega, gamma=gamma)


def kerr_spec(N: int, Gamma1d: float = 1.0, omega_a: float = 0.0, U: float = 0.0) -> EmitterSpec:
    """Anharmonic-cavity ladder: omega_n = n*omega_a + n(n-1)*U, gamma_n = n*Gamma1d."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if Gamma1d <= 0:
        raise ValueError(f"Gamma1d must be positive, got {Gamma1d}")
    omega = tuple(n * omega_a + n * (n - 1) * U for n in range(N + 1))
    gamma = tuple(n * Gamma1d for n in range(N + 1))
    return EmitterSpec(N=N, omega=omega, gamma=gamma)


_PRESETS = {"superradiant", "kerr"}


def spec_from_dict(data: dict) -> EmitterSpec:
    """Build an EmitterSpec from its JSON form.

    Accepts either explicit arrays ``{"N":, "omega": [...], "gamma": [...]}``
    or a preset ``{"preset": "superradiant"|"kerr", ...params}``.
    """
    if "preset" in data:
        preset = data["preset"]
        if preset not in _PRESETS:
            raise ValueError(f"unknown preset {preset!r}, expected one of {sorted(_PRESETS)}")
        N = int(data["N"])
        Gamma1d = float(data.get("Gamma1d", 1.0))
        if preset == "superradiant":
            return superradiant_spec(N, Gamma1d, float(data.get("omega0", 0.0)))
        return kerr_spec(N, Gamma1d, float(data.get("omega_a", 0.0)), float(data.get("U", 0.0)))
    return EmitterSpec(N=int(data["N"]), omega=data["omega"], gamma=data["gamma"])


def spec_from_json(text: str) -> EmitterSpec:
    return spec_from_dict(json.loads(text))
