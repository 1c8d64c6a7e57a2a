"""Symmetric-loss channel: beam-splitter propagation and coincidence blocks.

Losses on both spatial modes are modeled by beam splitters of transmittivity
eta coupling each source mode to an undetected reflected mode. Two
independent routes produce the post-selected two-photon polarization matrix
of the n-pair term:

* brute force: expand the state over transmitted + reflected Fock modes,
  form the projector, trace out the reflected modes, restrict to the
  one-photon-per-spatial-mode block;
* closed form: the 4x4 block written directly in terms of n and eta.

The two agree exactly (not approximately): loss only redistributes weight
between photon-number blocks, and coincidence post-selection picks out one
block whose elements the closed form reproduces verbatim. Tests exploit this
as a machine-precision oracle.

Summing the blocks over the pair-number distribution and normalizing yields
a Werner state whose singlet weight is 1 / (2*((1-eta)*tanh g)^2 + 1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConvergenceError
from .fock import (
    ALL_MODES,
    TWO_PHOTON_BASIS,
    DensityMatrix,
    PureState,
    occupation_label,
    outer_product,
    partial_trace,
)
from .source import GainChannelParams, n_pair_singlet

# Brute-force cost grows like the square of the expansion size; four pairs
# (259 basis tuples) is already instant, beyond that the closed form is the
# only supported route.
BRUTE_FORCE_MAX_PAIRS = 4

SERIES_MIN_TERMS = 50
SERIES_TAIL_TOL = 1e-12
_SERIES_HARD_CAP = 5_000_000

# Occupations (1H, 1V, 2H, 2V) with one photon per spatial mode, in the
# polarization order HH, HV, VH, VV.
COINCIDENCE_OCCUPATIONS = (
    (1, 0, 1, 0),
    (1, 0, 0, 1),
    (0, 1, 1, 0),
    (0, 1, 0, 1),
)


def _require_open_channel(eta: float) -> None:
    if not 0.0 < eta < 1.0:
        raise ValueError(f"transmittivity must lie strictly in (0, 1), got {eta}")


def apply_beamsplitters(state: PureState, eta: float) -> PureState:
    """Propagate a four-mode state through one loss beam splitter per mode.

    Each creation operator splits into sqrt(eta) times the transmitted
    operator plus i*sqrt(1-eta) times the reflected one, so a single-mode
    Fock state |n> becomes

        sum_y sqrt(C(n, y)) * eta^(y/2) * (i sqrt(1-eta))^(n-y) |y>_T |n-y>_R.

    The output lives on the eight-mode set (four transmitted slots followed
    by four reflected slots), stays normalized, and conserves the total
    photon number term by term.
    """
    _require_open_channel(eta)
    if state.modes != ALL_MODES[:4]:
        raise ValueError("expected a state over the four transmitted modes")
    t_amp = math.sqrt(eta)
    r_amp = 1j * math.sqrt(1.0 - eta)

    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.amplitudes.items():
        per_mode = [
            [
                (y, math.sqrt(math.comb(n_i, y)) * t_amp**y * r_amp ** (n_i - y))
                for y in range(n_i + 1)
            ]
            for n_i in occ
        ]
        for combo in itertools.product(*per_mode):
            transmitted = tuple(c[0] for c in combo)
            coeff = amp
            for c in combo:
                coeff *= c[1]
            reflected = tuple(n_i - y for n_i, y in zip(occ, transmitted))
            key = transmitted + reflected
            out[key] = out.get(key, 0.0 + 0.0j) + coeff
    return PureState(ALL_MODES, out)


def transmitted_reduced_state(n: int, eta: float) -> DensityMatrix:
    """Exact reduced state of the n-pair term on the transmitted modes.

    Brute-force route: beam-splitter expansion, projector, partial trace
    over the reflected modes. Trace 1. Supported for n <= 4.
    """
    if n < 0:
        raise ValueError(f"pair number must be non-negative, got {n}")
    if n > BRUTE_FORCE_MAX_PAIRS:
        raise CapacityError(
            f"brute-force route supports n <= {BRUTE_FORCE_MAX_PAIRS}, got {n}"
        )
    _require_open_channel(eta)
    split = apply_beamsplitters(n_pair_singlet(n, truncation=BRUTE_FORCE_MAX_PAIRS), eta)
    rho_full = outer_product(split)
    return partial_trace(rho_full, keep=range(4))


def post_select_two_photon(rho: DensityMatrix) -> DensityMatrix:
    """Restrict to the one-photon-per-spatial-mode coincidence block.

    Input is a density matrix over the four transmitted Fock modes; the
    output is the 4x4 block on (HH, HV, VH, VV), left unnormalized so its
    trace is the coincidence post-selection probability.
    """
    labels = {occupation_label(o): k for k, o in enumerate(COINCIDENCE_OCCUPATIONS)}
    block = np.zeros((4, 4), dtype=complex)
    present = {lab: i for i, lab in enumerate(rho.basis) if lab in labels}
    for lab_i, i in present.items():
        for lab_j, j in present.items():
            block[labels[lab_i], labels[lab_j]] = rho.entries[i, j]
    return DensityMatrix(TWO_PHOTON_BASIS, block, check_positive=rho.check_positive)


def _closed_block_coefficients(n, eta):
    """Entry coefficients of the closed-form block, vectorized over n.

    Returns (corner, middle, off) where the unnormalized block is

        [[corner, 0,      0,      0],
         [0,      middle, off,    0],
         [0,      off,    middle, 0],
         [0,      0,      0,      corner]]

    with prefactor n * (1-eta)^(2n) * zeta^2 / 6 multiplying the integer
    pattern (n-1, 1+2n, -(n+2)).
    """
    n = np.asarray(n, dtype=float)
    zeta = eta / (1.0 - eta)
    pref = n * (1.0 - eta) ** (2.0 * n) * zeta**2 / 6.0
    return pref * (n - 1.0), pref * (1.0 + 2.0 * n), pref * -(n + 2.0)


def _assemble_block(corner, middle, off) -> np.ndarray:
    return np.array(
        [
            [corner, 0.0, 0.0, 0.0],
            [0.0, middle, off, 0.0],
            [0.0, off, middle, 0.0],
            [0.0, 0.0, 0.0, corner],
        ],
        dtype=complex,
    )


def two_photon_block_closed(n: int, eta: float) -> DensityMatrix:
    """Closed form of the post-selected two-photon block of the n-pair term.

    Unnormalized; the trace is n^2 * (1-eta)^(2n) * zeta^2. For n = 0 there
    is no two-photon coincidence and the block is identically zero. The
    diagonal corners carry a factor (n-1), so the single-pair block is a pure
    singlet and the normalized block for n pairs is a Werner state with
    singlet weight (n+2)/(3n).
    """
    if n < 0:
        raise ValueError(f"pair number must be non-negative, got {n}")
    _require_open_channel(eta)
    if n == 0:
        return DensityMatrix(TWO_PHOTON_BASIS, np.zeros((4, 4)))
    corner, middle, off = _closed_block_coefficients(n, eta)
    return DensityMatrix(TWO_PHOTON_BASIS, _assemble_block(corner, middle, off))


def singlet_weight(params: GainChannelParams) -> float:
    """Singlet weight of the gain-summed two-photon Werner state.

    p = 1 / (2*((1-eta)*tanh g)^2 + 1), always in (1/3, 1]. The eta -> 0
    limit is taken directly (the formula only involves (1-eta)*tanh g).
    """
    return 1.0 / (2.0 * params.gamma_tilde**2 + 1.0)


def _series_tail_bound(x: float, n_last: int) -> float:
    """Upper bound on sum_{n > n_last} n*(n+1)^2*x^n, covering every entry
    coefficient of the block series. Returns inf while the bounding ratio
    is >= 1."""
    ratio = x * (1.0 + 1.0 / n_last) ** 3
    if ratio >= 1.0:
        return math.inf
    a_last = n_last * (n_last + 1.0) ** 2 * x**n_last
    return a_last * ratio / (1.0 - ratio)


def two_photon_state(
    params: GainChannelParams,
    n_max: int | None = None,
    tail_tol: float = SERIES_TAIL_TOL,
) -> DensityMatrix:
    """Post-selected two-photon state at gain g, summed over pair numbers.

    Weighs each pair-number block by (n+1) * tanh(g)^(2n) / cosh(g)^4 and
    normalizes; the blocks add incoherently because different pair numbers
    shed different photon counts into the traced-out modes. The result is a
    Werner matrix whose singlet weight matches :func:`singlet_weight` up to
    the truncation tail.

    With ``n_max=None`` the truncation grows (from at least 50 terms) until
    the analytic tail bound drops below ``tail_tol`` relative to the
    accumulated trace. An explicit ``n_max`` is used as given and checked;
    if the tail bound still exceeds the tolerance a ``ConvergenceError``
    reports it.
    """
    _require_open_channel(params.eta)
    if params.g == 0.0:
        raise ValueError("no pairs are emitted at g = 0; coincidence state undefined")

    x = params.gamma_tilde**2
    gamma2 = params.gamma**2
    c4 = params.cosh_g**4

    def relative_tail(n_hi: int) -> float:
        trace_series = _trace_series_partial(x, n_hi)
        if trace_series <= 0.0:
            return math.inf
        return _series_tail_bound(x, n_hi) / (3.0 * trace_series)

    if n_max is not None:
        if n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {n_max}")
        n_terms = n_max
    else:
        n_terms = SERIES_MIN_TERMS
        while relative_tail(n_terms) > tail_tol and n_terms < _SERIES_HARD_CAP:
            n_terms *= 2

    tail_rel = relative_tail(n_terms)
    if tail_rel > tail_tol:
        raise ConvergenceError(
            f"series truncated at {n_terms} terms; relative tail bound "
            f"{tail_rel:.3e} exceeds tolerance {tail_tol:.1e}",
            diagnostics={"n_terms": n_terms, "relative_tail_bound": tail_rel},
        )

    n = np.arange(1, n_terms + 1, dtype=float)
    corner, middle, off = _closed_block_coefficients(n, params.eta)
    w = (n + 1.0) * gamma2**n / c4
    corner_s, middle_s, off_s = float(w @ corner), float(w @ middle), float(w @ off)
    trace = 2.0 * (corner_s + middle_s)
    block = _assemble_block(corner_s / trace, middle_s / trace, off_s / trace)
    return DensityMatrix(TWO_PHOTON_BASIS, block)


def _trace_series_partial(x: float, n_hi: int) -> float:
    """Partial sum of n^2*(n+1)*x^n: the block-trace series in pure-x units."""
    n = np.arange(1, n_hi + 1, dtype=float)
    return float(np.sum(n * n * (n + 1.0) * np.power(x, n)))


def _binom(a: int, k: int) -> int:
    """Binomial coefficient that vanishes outside 0 <= k <= a."""
    if a < 0 or k < 0 or k > a:
        return 0
    return math.comb(a, k)


@dataclass(frozen=True)
class LossCoefficients:
    """Coefficient tables of the general reduced state of the n-pair term.

    The reduced matrix over the transmitted modes can be written as a double
    sum over integers (h, k) with per-slot factors

        s(h, k, p)       = zeta^p * sqrt(C(k, p) * C(h, k-p))
        s_tilde(h, k, p) = zeta^p * sqrt(C(n-k, p) * C(n-h, k-h+p))

    real and vanishing whenever a binomial argument is out of range. The
    beam-splitter expansion amplitude of the transmitted occupation
    ``ys`` within the x-th singlet-power term is ``a_coefficient(x, ys)``
    (up to the overall 1/(sqrt(n+1) n!)); it carries the phase
    (-1)^x * (-i)^(2n - sum(ys)).
    """

    n: int
    eta: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"pair number must be non-negative, got {self.n}")
        _require_open_channel(self.eta)

    @property
    def zeta(self) -> float:
        return self.eta / (1.0 - self.eta)

    def s(self, h: int, k: int, p: int) -> float:
        return self.zeta**p * math.sqrt(_binom(k, p) * _binom(h, k - p))

    def s_tilde(self, h: int, k: int, p: int) -> float:
        return self.zeta**p * math.sqrt(
            _binom(self.n - k, p) * _binom(self.n - h, k - h + p)
        )

    def a_coefficient(self, x: int, ys: tuple[int, int, int, int]) -> complex:
        """Expansion amplitude of transmitted occupation ``ys`` in term x.

        ys = (y_1H, y_1V, y_2H, y_2V) are the transmitted photon counts out
        of the term's input occupations (n-x, x, x, n-x); the complementary
        photons go to the reflected slots. Each transmitted photon carries
        sqrt(eta), each reflected one -i*sqrt(1-eta).
        """
        n = self.n
        y1, y2, y3, y4 = ys
        caps = (n - x, x, x, n - x)
        combinatorial = _binom(n, x)
        for cap, y in zip(caps, ys):
            combinatorial *= _binom(cap, y)
        if combinatorial == 0:
            return 0.0 + 0.0j
        total_t = y1 + y2 + y3 + y4
        phase = (-1.0) ** x * (-1j * math.sqrt(1.0 - self.eta)) ** (2 * n - total_t)
        root = math.sqrt(
            math.prod(
                math.factorial(y) * math.factorial(cap - y)
                for cap, y in zip(caps, ys)
            )
        )
        return combinatorial * math.sqrt(self.eta) ** total_t * phase * root

    def reduced_state(self) -> DensityMatrix:
        """Assemble the full reduced matrix from the coefficient tables.

        Independent of the beam-splitter expansion route; agrees with
        :func:`transmitted_reduced_state` at machine precision, which the
        tests use as a cross-check on both.
        """
        n = self.n
        entries: dict[tuple[tuple[int, ...], tuple[int, ...]], float] = {}
        for k in range(n + 1):
            for h in range(n + 1):
                sign = (-1.0) ** (k + h) * (1.0 - self.eta) ** (2 * n) / (n + 1)
                for l1 in range(n - k + 1):
                    st1 = self.s_tilde(h, k, l1)
                    if st1 == 0.0:
                        continue
                    for l4 in range(n - k + 1):
                        st4 = self.s_tilde(h, k, l4)
                        if st4 == 0.0:
                            continue
                        for l2 in range(k + 1):
                            s2 = self.s(h, k, l2)
                            if s2 == 0.0:
                                continue
                            for l3 in range(k + 1):
                                s3 = self.s(h, k, l3)
                                if s3 == 0.0:
                                    continue
                                ket = (l1, l2, l3, l4)
                                bra = (k - h + l1, h - k + l2, h - k + l3, k - h + l4)
                                if any(v < 0 for v in bra):
                                    continue
                                val = sign * s2 * s3 * st1 * st4
                                key = (ket, bra)
                                entries[key] = entries.get(key, 0.0) + val
        occs = sorted({occ for pair in entries for occ in pair})
        index = {o: i for i, o in enumerate(occs)}
        m = np.zeros((len(occs), len(occs)), dtype=complex)
        for (ket, bra), val in entries.items():
            m[index[ket], index[bra]] += val
        labels = tuple(occupation_label(o) for o in occs)
        return DensityMatrix(labels, m)
