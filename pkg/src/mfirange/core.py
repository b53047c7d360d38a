"""Core domain types and phase/frequency arithmetic for MFI ranging.

Everything else in the package runs through the types defined here.  A
:class:`FrequencyPlan` pins the measurement frequencies to an exact integer
grid (base frequency, grid resolution, integer spacings), which keeps the
GCD/prime structure of the spacings exact.  :class:`PhaseVector` holds one
wrapped phase per frequency and :class:`NoiseModel` describes how phase
noise is generated, with the SNR convention SNR = 1/(2*sigma_theta^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from numbers import Integral

import numpy as np

TWO_PI = 2.0 * math.pi

# Propagation speed: exact SI value, plus the rounded constant used in most
# textbook numeric examples ("paper-repro" mode in the CLI).
C_EXACT = 299_792_458.0
C_PAPER = 3.0e8

NOISE_KINDS = ("phase-gaussian", "complex-awgn", "none")


def wrap_phase(x):
    """Reduce an angle (or array of angles) to the interval (-pi, pi].

    The interval is half-open on the left: ``wrap_phase(-pi) == pi``.
    Accepts scalars or ndarrays; rejects non-finite input.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wrap_phase: input must be finite")
    # np.remainder is fmod-based and therefore exact up to one rounding of
    # the sign correction, which matters for multi-million-radian inputs.
    r = np.remainder(arr, TWO_PI)
    r = np.where(r > math.pi, r - TWO_PI, r)
    if arr.ndim == 0:
        return float(r)
    return r


def sigma_theta_from_snr_db(snr_db: float) -> float:
    """Phase-noise standard deviation for a given SNR in dB.

    Uses SNR = 1/(2*sigma_theta^2), i.e. the phase noise at high SNR is the
    quadrature component of a unit carrier plus complex noise of variance
    sigma^2 = 2*sigma_theta^2.
    """
    return math.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)


def snr_db_from_sigma_theta(sigma_theta: float) -> float:
    """Inverse of :func:`sigma_theta_from_snr_db`."""
    if sigma_theta <= 0.0:
        raise ValueError("sigma_theta must be positive")
    return -10.0 * math.log10(2.0 * sigma_theta**2)


@dataclass(frozen=True)
class FrequencyPlan:
    """A set of measurement frequencies on an exact integer grid.

    Frequencies are ``f1 + resolution * cumsum(spacings)``.  Spacings are
    positive integers in units of ``resolution`` so that their GCD (and any
    prime structure) is exact; floating-point frequencies are never GCD'd.
    The base frequency ``f1`` itself may sit off the spacing-GCD grid, which
    is what the fractional grid offset in the analysis module measures.

    The plan also carries the propagation speed ``c`` so that every derived
    quantity (wavelengths, range formulas) is unambiguous.
    """

    f1: float
    resolution: float
    spacings: tuple[int, ...]
    c: float = C_EXACT

    def __post_init__(self):
        if not (math.isfinite(self.f1) and self.f1 > 0):
            raise ValueError("f1 must be a positive finite frequency in Hz")
        if not (math.isfinite(self.resolution) and self.resolution > 0):
            raise ValueError("resolution must be a positive finite grid unit in Hz")
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError("c must be a positive propagation speed in m/s")
        ks = tuple(int(k) for k in self.spacings)
        if len(ks) < 1:
            raise ValueError("plan needs at least one spacing (N >= 2)")
        for k, orig in zip(ks, self.spacings):
            if not isinstance(orig, Integral) or k < 1:
                raise ValueError("spacings must be integers >= 1 (grid units)")
        object.__setattr__(self, "spacings", ks)
        freqs = self.f1 + self.resolution * np.concatenate(
            ([0.0], np.cumsum(np.asarray(ks, dtype=float)))
        )
        freqs.setflags(write=False)
        object.__setattr__(self, "_frequencies", freqs)

    @property
    def n(self) -> int:
        """Number of measurement frequencies N."""
        return len(self.spacings) + 1

    @property
    def frequencies(self) -> np.ndarray:
        """Ascending frequencies in Hz (read-only array of length N)."""
        return self._frequencies

    @property
    def wavelengths(self) -> np.ndarray:
        """Wavelengths c/f_i in meters, descending."""
        return self.c / self._frequencies

    @property
    def bandwidth(self) -> float:
        """f_N - f1 in Hz, exact in grid units."""
        return self.resolution * sum(self.spacings)

    @property
    def spacings_hz(self) -> np.ndarray:
        """Adjacent-frequency spacings in Hz, in plan order."""
        return self.resolution * np.asarray(self.spacings, dtype=float)

    @property
    def lambda_min(self) -> float:
        """Shortest wavelength c/f_N in meters."""
        return self.c / float(self._frequencies[-1])


def frequencies_of(plan: FrequencyPlan) -> np.ndarray:
    """Measurement frequencies f_i = f1 + resolution * sum(spacings[:i])."""
    return plan.frequencies.copy()


def spacing_gcd(plan: FrequencyPlan) -> int:
    """GCD of the integer spacings, in grid units.

    The effective spacing GCD in Hz is ``spacing_gcd(plan) * plan.resolution``.
    """
    return reduce(math.gcd, plan.spacings)


@dataclass(frozen=True)
class PhaseVector:
    """Wrapped phase observations, one per plan frequency, each in (-pi, pi]."""

    phases: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.phases, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("phases must be a 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("phases must be finite")
        if np.any(arr <= -math.pi) or np.any(arr > math.pi):
            raise ValueError("phases must lie in (-pi, pi]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "phases", arr)

    @property
    def plan_len(self) -> int:
        return int(self.phases.size)

    def as_array(self) -> np.ndarray:
        return self.phases


@dataclass(frozen=True)
class RangeValue:
    """A signed range (path-length combination) in meters."""

    q: float

    def __post_init__(self):
        if not math.isfinite(self.q):
            raise ValueError("range must be finite")


@dataclass(frozen=True)
class NoiseModel:
    """Phase-noise specification for synthetic measurements.

    ``kind`` is one of ``phase-gaussian`` (i.i.d. Gaussian phase error of
    std ``sigma_theta``), ``complex-awgn`` (phase extracted from a unit
    carrier plus complex Gaussian noise of variance 2*sigma_theta^2), or
    ``none``.  Exactly one of ``sigma_theta`` / ``snr_db`` is given for the
    noisy kinds.  ``bias`` is an optional fixed per-frequency phase offset
    in radians, a stand-in for non-Gaussian field effects in replay
    experiments.
    """

    kind: str
    sigma_theta: float | None = None
    snr_db: float | None = None
    bias: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
        given = (self.sigma_theta is not None) + (self.snr_db is not None)
        if self.kind == "none":
            if given:
                raise ValueError("noise kind 'none' takes no sigma_theta/snr_db")
        elif given != 1:
            raise ValueError("give exactly one of sigma_theta or snr_db")
        if self.sigma_theta is not None and self.sigma_theta <= 0:
            raise ValueError("sigma_theta must be positive")
        if self.bias is not None:
            bias = tuple(float(b) for b in self.bias)
            if not all(math.isfinite(b) for b in bias):
                raise ValueError("bias entries must be finite")
            object.__setattr__(self, "bias", bias)

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(kind="none")

    @classmethod
    def phase_gaussian(cls, *, sigma_theta=None, snr_db=None, bias=None) -> "NoiseModel":
        return cls(kind="phase-gaussian", sigma_theta=sigma_theta, snr_db=snr_db, bias=bias)

    @classmethod
    def complex_awgn(cls, *, sigma_theta=None, snr_db=None, bias=None) -> "NoiseModel":
        return cls(kind="complex-awgn", sigma_theta=sigma_theta, snr_db=snr_db, bias=bias)

    @property
    def sigma(self) -> float:
        """Effective phase-noise std in radians (0 for kind 'none')."""
        if self.kind == "none":
            return 0.0
        if self.sigma_theta is not None:
            return float(self.sigma_theta)
        return sigma_theta_from_snr_db(float(self.snr_db))


def synth_phases(plan: FrequencyPlan, q0: float, noise: NoiseModel, rng=None) -> PhaseVector:
    """Synthesize one wrapped phase vector for a true range ``q0``.

    phi(i) = wrap(2*pi*q0*f_i/c + theta_e(i) + bias_i) with theta_e drawn
    per ``noise``: i.i.d. N(0, sigma_theta^2) for ``phase-gaussian``, the
    phase of exp(j*phi0) + n with complex n of variance 2*sigma_theta^2 for
    ``complex-awgn``, and 0 for ``none``.  ``rng`` is a numpy Generator and
    is required for the noisy kinds.
    """
    if not math.isfinite(q0):
        raise ValueError("q0 must be finite")
    ideal = TWO_PI * q0 * plan.frequencies / plan.c
    if noise.bias is not None:
        if len(noise.bias) != plan.n:
            raise ValueError("bias length must equal the plan frequency count")
        ideal = ideal + np.asarray(noise.bias)
    if noise.kind == "none":
        return PhaseVector(wrap_phase(ideal))
    if rng is None:
        raise ValueError("rng is required for noisy synthesis")
    sigma = noise.sigma
    if noise.kind == "phase-gaussian":
        phases = ideal + sigma * rng.standard_normal(plan.n)
    else:  # complex-awgn: per-component std is sigma_theta
        z = np.exp(1j * wrap_phase(ideal))
        z = z + sigma * (rng.standard_normal(plan.n) + 1j * rng.standard_normal(plan.n))
        phases = np.angle(z)
    return PhaseVector(wrap_phase(phases))
