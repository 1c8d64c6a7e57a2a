"""Down-conversion source: gain parameters and ideal n-pair emission states.

The source emits polarization-entangled photon pairs into two spatial modes.
At nonlinear gain g, the n-pair term carries probability weight
(n+1) * tanh(g)^(2n) / cosh(g)^4, and within each term the polarization
structure is the n-fold singlet superposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .fock import PureState, TRANSMITTED_MODES

# State construction cost grows combinatorially with the pair number; scalar
# series are cheap and use far larger caps.
DEFAULT_TRUNCATION = 6


@dataclass(frozen=True)
class GainChannelParams:
    """Nonlinear gain g plus channel transmittivity eta, with derived scalars.

    eta is the per-photon transmission probability of the loss channel,
    assumed identical for every spatial mode and polarization.
    """

    g: float
    eta: float = 0.0

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"gain must be non-negative, got {self.g}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"transmittivity must lie in [0, 1], got {self.eta}")

    @property
    def gamma(self) -> float:
        """tanh(g); squared, the pair-number distribution's geometric ratio."""
        return math.tanh(self.g)

    @property
    def cosh_g(self) -> float:
        return math.cosh(self.g)

    @property
    def gamma_tilde(self) -> float:
        """(1 - eta) * tanh(g): the loss-attenuated gain parameter."""
        return (1.0 - self.eta) * math.tanh(self.g)

    @property
    def zeta(self) -> float:
        """eta / (1 - eta). Undefined at eta = 1."""
        if self.eta >= 1.0:
            raise ValueError("zeta is undefined at eta = 1")
        return self.eta / (1.0 - self.eta)

    @property
    def n_bar(self) -> float:
        """Mean photons generated per mode, sinh(g)^2."""
        return math.sinh(self.g) ** 2


def n_pair_singlet(n: int, truncation: int = DEFAULT_TRUNCATION) -> PureState:
    """Normalized n-pair singlet term over the four source modes.

    The n+1 amplitudes are (-1)^m / sqrt(n+1) on occupation
    (n-m, m, m, n-m) for m = 0..n; n = 0 is the vacuum.
    """
    if n < 0:
        raise ValueError(f"pair number must be non-negative, got {n}")
    if n > truncation:
        raise CapacityError(f"pair number {n} exceeds truncation {truncation}")
    amp = 1.0 / math.sqrt(n + 1)
    amplitudes = {
        (n - m, m, m, n - m): (-1) ** m * amp
        for m in range(n + 1)
    }
    return PureState(TRANSMITTED_MODES, amplitudes)


def pair_number_weights(params: GainChannelParams, n_max: int) -> np.ndarray:
    """Probabilities of emitting exactly n pairs, for n = 0..n_max.

    weights[n] = (n+1) * gamma^(2n) / cosh(g)^4; the full series sums to 1,
    so any partial sum is <= 1.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be non-negative, got {n_max}")
    n = np.arange(n_max + 1)
    return (n + 1) * params.gamma ** (2 * n) / params.cosh_g ** 4


def mean_photons_per_mode(params: GainChannelParams) -> float:
    """sinh(g)^2, the average photon number generated per mode."""
    return params.n_bar
