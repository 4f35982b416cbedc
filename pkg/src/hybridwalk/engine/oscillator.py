"""Partial Fourier series oscillators and the LIPM relation between COM and ZMP."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hybridwalk import kernels

CHANNELS = ("X", "Y", "Z", "Theta", "Arm", "COMx", "COMy")


@dataclass(frozen=True)
class LIPMParams:
    g: float = 9.81
    c_z: float = 0.5

    def __post_init__(self):
        if not (self.g > 0 and self.c_z > 0):
            raise ValueError("gravity and COM height must be positive")

    @property
    def omega0(self) -> float:
        return math.sqrt(self.g / self.c_z)


@dataclass(frozen=True)
class PFSOscillator:
    """``sum_n A_n sin(n beta t + phi_n)`` for ``n = 0..N``."""

    amplitudes: np.ndarray
    phases: np.ndarray
    beta: float

    def __post_init__(self):
        a = np.ascontiguousarray(self.amplitudes, dtype=np.float64)
        p = np.ascontiguousarray(self.phases, dtype=np.float64)
        if a.ndim != 1 or a.shape != p.shape:
            raise ValueError("amplitude and phase sequences must have equal length N+1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "phases", p)

    @property
    def n_terms(self) -> int:
        return len(self.amplitudes) - 1

    def __call__(self, t: float) -> float:
        return kernels.pfs_eval(self.amplitudes, self.phases, self.beta, float(t), 0)

    def derivative(self, t: float, order: int = 1) -> float:
        return kernels.pfs_eval(self.amplitudes, self.phases, self.beta, float(t), order)

    def sample(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        n = np.arange(self.n_terms + 1)
        return np.sin(np.multiply.outer(t, n * self.beta) + self.phases) @ self.amplitudes

    def negated(self) -> "PFSOscillator":
        return PFSOscillator(-self.amplitudes, self.phases.copy(), self.beta)


def eval_pfs(osc: PFSOscillator, t: float) -> float:
    return osc(t)


def zmp_scales(n_terms: int, beta: float, omega0: float) -> np.ndarray:
    """Per-term COM-to-ZMP amplitude factors ``1 + (n beta / omega0)^2``."""
    n = np.arange(n_terms + 1)
    return 1.0 + (n * beta / omega0) ** 2


def zmp_from_com(com_osc: PFSOscillator, lipm: LIPMParams, t: float) -> float:
    """ZMP position implied by a COM oscillator under the LIPM."""
    scales = zmp_scales(com_osc.n_terms, com_osc.beta, lipm.omega0)
    return kernels.pfs_eval_scaled(com_osc.amplitudes, com_osc.phases, com_osc.beta, float(t), scales)


def zmp_oscillator(com_osc: PFSOscillator, lipm: LIPMParams) -> PFSOscillator:
    scales = zmp_scales(com_osc.n_terms, com_osc.beta, lipm.omega0)
    return PFSOscillator(com_osc.amplitudes * scales, com_osc.phases.copy(), com_osc.beta)


@dataclass
class OscillatorBank:
    """Fitted oscillators for one gait cycle (two strides) of a fixed command.

    Channel values live in a frame that moves with the average body
    velocity of the command; left-foot channels are stored and the right
    foot reuses them half a period later.
    """

    channels: dict
    lipm: LIPMParams
    w_t: float
    hip_width: float = 0.1
    residual_rms: float = 0.0
    relative_residual: float = 0.0
    iterations: int = 0
    knots: dict = field(default=None, repr=False, compare=False)
    velocity: tuple = (0.0, 0.0, 0.0)
    _packed: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        betas = {round(o.beta, 12) for o in self.channels.values()}
        if len(betas) != 1:
            raise ValueError("all channels must share one beta")
        expected = 2 * math.pi / (2 * self.w_t)
        if not math.isclose(self.beta, expected, rel_tol=1e-12):
            raise ValueError("beta must equal 2*pi / (2*w_t)")

    @property
    def beta(self) -> float:
        return next(iter(self.channels.values())).beta

    @property
    def period(self) -> float:
        return 2 * self.w_t

    def packed(self):
        """Padded ``(amps, phases, nterms)`` arrays in ``CHANNELS`` order for the bank kernel."""
        if self._packed is None:
            names = [c for c in CHANNELS if c in self.channels]
            width = max(self.channels[c].n_terms for c in names) + 1
            amps = np.zeros((len(names), width))
            phases = np.zeros((len(names), width))
            nterms = np.zeros(len(names), dtype=np.int64)
            for i, c in enumerate(names):
                osc = self.channels[c]
                amps[i, : osc.n_terms + 1] = osc.amplitudes
                phases[i, : osc.n_terms + 1] = osc.phases
                nterms[i] = osc.n_terms
            self._packed = (amps, phases, nterms, tuple(names))
        return self._packed

    def evaluate(self, t: float, out=None) -> np.ndarray:
        amps, phases, nterms, _ = self.packed()
        return kernels.bank_eval(amps, phases, nterms, self.beta, float(t), out)

    def zmp(self, t: float) -> tuple:
        return (
            zmp_from_com(self.channels["COMx"], self.lipm, t),
            zmp_from_com(self.channels["COMy"], self.lipm, t),
        )
