"""Frequency-pattern designers.

Five ways of placing N measurement frequencies in a bandwidth B: uniform
spacing, a geometric wavelength ladder, the two-ends-constrained optimum,
the prime-spacing construction with its min-error/max-error arrangements,
and a random baseline.  All designers emit a :class:`FrequencyPlan` whose
spacings live on the integer resolution grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import C_EXACT, FrequencyPlan


class DesignInfeasible(ValueError):
    """Design parameters cannot be met; the message names the constraint."""


class PrimePoolExhausted(RuntimeError):
    """The prime pool could not be grown far enough for the request."""


# Sieve sizes grow geometrically from here until the pool is big enough.
_SIEVE_START = 1 << 10
_SIEVE_LIMIT = 1 << 28


def sieve_primes(limit: int) -> np.ndarray:
    """All primes < limit by Eratosthenes sieve (ascending int64 array)."""
    if limit < 3:
        return np.empty(0, dtype=np.int64)
    mask = np.ones(limit, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(limit - 1) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.nonzero(mask)[0].astype(np.int64)


def first_primes(count: int) -> list[int]:
    """The first ``count`` primes, growing the sieve as needed."""
    if count < 1:
        return []
    limit = _SIEVE_START
    while True:
        primes = sieve_primes(limit)
        if len(primes) >= count:
            return [int(p) for p in primes[:count]]
        if limit >= _SIEVE_LIMIT:
            raise PrimePoolExhausted(
                f"prime pool capped at sieve limit {_SIEVE_LIMIT}; "
                f"needed {count} primes"
            )
        limit *= 4


@dataclass(frozen=True)
class DesignParams:
    """Inputs of the prime-window selection: the (B, N, resolution, i) tuple
    plus an optional UMR requirement in meters."""

    bandwidth: float
    n: int
    resolution: float
    prime_index: int = 1  # 1-based start into the ascending prime sequence
    umr_requirement: float | None = None

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.n < 2:
            raise ValueError("need at least two frequencies")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if self.prime_index < 1:
            raise ValueError("prime_index is 1-based and must be >= 1")
        if self.umr_requirement is not None and not self.umr_requirement > 0:
            raise ValueError("umr_requirement must be positive when given")


@dataclass(frozen=True)
class PrimeWindow:
    """Result of the prime-window selection."""

    primes: tuple[int, ...]
    common_factor: int  # K: every spacing is K * prime * resolution
    prime_index: int  # final (possibly advanced) 1-based window start


def _common_factor(bandwidth: float, resolution: float, window_sum: int) -> int:
    """Largest K with K * resolution * window_sum <= bandwidth."""
    k = int(bandwidth // (resolution * window_sum))
    # Guard against float division landing one off the exact threshold.
    while (k + 1) * resolution * window_sum <= bandwidth:
        k += 1
    while k >= 1 and k * resolution * window_sum > bandwidth:
        k -= 1
    return k


def prime_window_select(params: DesignParams, c: float = C_EXACT) -> PrimeWindow:
    """Pick N-1 consecutive primes and the common factor K filling bandwidth B.

    Starting at the 1-based prime index ``i``, take the N-1 consecutive
    primes and the largest K with ``K * resolution * sum(primes) <= B```.
    When a UMR requirement is set, advance ``i`` (which shrinks K and
    stretches the unambiguous range c/(K*resolution)) until the range
    strictly exceeds the requirement.
    """
    i = params.prime_index
    width = params.n - 1
    while True:
        primes = first_primes(i - 1 + width)[i - 1 :]
        window_sum = sum(primes)
        k = _common_factor(params.bandwidth, params.resolution, window_sum)
        if k < 1:
            raise DesignInfeasible(
                f"bandwidth {params.bandwidth} Hz cannot fit the prime window "
                f"starting at index {i} (sum {window_sum}) at resolution "
                f"{params.resolution} Hz"
            )
        if params.umr_requirement is None:
            return PrimeWindow(tuple(primes), k, i)
        if c / (k * params.resolution) > params.umr_requirement:
            return PrimeWindow(tuple(primes), k, i)
        i += 1


def as_multiset(values: Sequence[int]) -> tuple[int, ...]:
    """Validate an ascending multiset of positive integer spacings."""
    ms = tuple(int(v) for v in values)
    if len(ms) < 1:
        raise ValueError("multiset must be non-empty")
    if any(v < 1 for v in ms):
        raise ValueError("spacings must be >= 1")
    if any(a > b for a, b in zip(ms, ms[1:])):
        raise ValueError("multiset must be sorted ascending")
    return ms


def permute_min_error(sorted_spacings: Sequence[int], family: str = "canonical"):
    """Arrange an ascending spacing multiset for minimum ranging error.

    The canonical arrangement interleaves odd-position entries ascending
    and even-position entries descending, [a1, a3, ..., a4, a2], which
    maximizes the spacing quadratic form over all permutations.  The
    ``alternate`` family [a2, a4, ..., a3, a1] attains the same value.
    """
    ms = as_multiset(sorted_spacings)
    if family == "canonical":
        return list(ms[0::2]) + list(reversed(ms[1::2]))
    if family == "alternate":
        return list(ms[1::2]) + list(reversed(ms[0::2]))
    raise ValueError("family must be 'canonical' or 'alternate'")


def permute_max_error(sorted_spacings: Sequence[int]):
    """Dual arrangement [..., a5, a3, a1, a2, a4, ...] minimizing the
    spacing quadratic form (the worst ordering for ranging error)."""
    ms = as_multiset(sorted_spacings)
    return list(reversed(ms[0::2])) + list(ms[1::2])


def _grid_count(bandwidth: float, resolution: float) -> int:
    """M = floor(B / resolution), tolerant of float division residue."""
    m = int(bandwidth / resolution + 1e-9)
    return m


def design_rips(
    f1: float, bandwidth: float, n: int, resolution: float | None = None, c: float = C_EXACT
) -> FrequencyPlan:
    """Uniformly spaced frequencies f_i = f1 + (i-1) * B/(N-1).

    With no explicit grid, the uniform step itself becomes the grid unit.
    An explicit ``resolution`` must divide the step exactly.
    """
    if n < 2:
        raise DesignInfeasible("uniform design needs N >= 2")
    step = bandwidth / (n - 1)
    if resolution is None:
        return FrequencyPlan(f1=f1, resolution=step, spacings=(1,) * (n - 1), c=c)
    k = step / resolution
    k_int = round(k)
    if k_int < 1 or abs(k - k_int) > 1e-9 * max(1.0, abs(k)):
        raise DesignInfeasible(
            f"uniform step B/(N-1) = {step} Hz is not an integer multiple of "
            f"resolution {resolution} Hz"
        )
    return FrequencyPlan(f1=f1, resolution=resolution, spacings=(k_int,) * (n - 1), c=c)


def towers_ideal_frequencies(f_max: float, bandwidth: float, n: int) -> np.ndarray:
    """Off-grid frequencies of the geometric wavelength ladder.

    f_i = f_max - f_max * (B/f_max)^i for i = 1..N-1 plus f_max itself, so
    the synthetic-wavelength ratio (f_max - f_{i-1})/(f_max - f_i) is the
    constant f_max/B.
    """
    if not f_max > bandwidth > 0:
        raise DesignInfeasible("geometric ladder needs f_max > B > 0")
    if n < 2:
        raise DesignInfeasible("geometric ladder needs N >= 2")
    i = np.arange(1, n)
    freqs = f_max - f_max * (bandwidth / f_max) ** i
    return np.sort(np.append(freqs, f_max))


def design_towers(
    f_max: float, bandwidth: float, n: int, resolution: float = 1.0, c: float = C_EXACT
) -> FrequencyPlan:
    """Geometric wavelength ladder snapped to the resolution grid.

    The ideal ladder frequencies are irrational on the grid in general;
    they are rounded to the nearest grid multiple (compare against
    :func:`towers_ideal_frequencies` for the snap error).  Snapping that
    collides two frequencies is rejected.
    """
    ideal = towers_ideal_frequencies(f_max, bandwidth, n)
    grid = np.rint(ideal / resolution).astype(np.int64)
    if len(np.unique(grid)) != n:
        raise DesignInfeasible(
            f"snapping the geometric ladder to a {resolution} Hz grid collides "
            "two frequencies; use a finer resolution"
        )
    spacings = tuple(int(d) for d in np.diff(grid))
    return FrequencyPlan(f1=float(grid[0]) * resolution, resolution=resolution, spacings=spacings, c=c)


def design_constrained_optimal(
    f1: float, bandwidth: float, n: int, resolution: float, c: float = C_EXACT
) -> FrequencyPlan:
    """Frequencies packed as near as possible to both band ends.

    The spacing multiset is {1 x (N-2), M+2-N} on the grid (M = floor(B /
    resolution)), arranged min-error: unit spacings at both ends with the
    single large gap in the middle.  Optimal only when the range is known
    a priori to lie within the +-c/2B mainlobe.
    """
    m = _grid_count(bandwidth, resolution)
    if m < n - 1:
        raise DesignInfeasible(
            f"grid count M = {m} is smaller than N-1 = {n - 1}; "
            "not enough grid room for the requested frequency count"
        )
    multiset = sorted([1] * (n - 2) + [m + 2 - n])
    spacings = tuple(permute_min_error(multiset))
    return FrequencyPlan(f1=f1, resolution=resolution, spacings=spacings, c=c)


def _design_prime(params: DesignParams, f1: float, c: float, worst: bool) -> FrequencyPlan:
    window = prime_window_select(params, c=c)
    arrange = permute_max_error if worst else permute_min_error
    order = arrange(list(window.primes))
    spacings = tuple(window.common_factor * p for p in order)
    return FrequencyPlan(f1=f1, resolution=params.resolution, spacings=spacings, c=c)


def design_prime_min_error(params: DesignParams, f1: float, c: float = C_EXACT) -> FrequencyPlan:
    """Prime spacing construction, min-error arrangement.

    Spacings are K * (arranged consecutive primes) in grid units, so the
    spacing GCD is exactly K and the unambiguous range is about
    c/(K * resolution).
    """
    return _design_prime(params, f1, c, worst=False)


def design_prime_max_error(params: DesignParams, f1: float, c: float = C_EXACT) -> FrequencyPlan:
    """Same prime spacing multiset as min-error, worst arrangement."""
    return _design_prime(params, f1, c, worst=True)


def design_random(
    f1: float, bandwidth: float, n: int, resolution: float, rng, c: float = C_EXACT
) -> FrequencyPlan:
    """Random baseline: N frequencies drawn from the usable band.

    Both band edges are kept and the N-2 interior frequencies are drawn
    uniformly without replacement from the interior grid points, so the
    spacings are positive integers summing exactly to M = floor(B/res).
    """
    m = _grid_count(bandwidth, resolution)
    if m < n - 1:
        raise DesignInfeasible(
            f"grid count M = {m} is smaller than N-1 = {n - 1}; "
            "not enough grid room for the requested frequency count"
        )
    interior = rng.choice(np.arange(1, m), size=n - 2, replace=False) if n > 2 else np.empty(0, int)
    points = np.sort(np.concatenate(([0], interior, [m]))).astype(np.int64)
    spacings = tuple(int(d) for d in np.diff(points))
    return FrequencyPlan(f1=f1, resolution=resolution, spacings=spacings, c=c)
