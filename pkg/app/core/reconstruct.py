"""Explicit inversion of the cavity moments into Laurent coefficients of the exterior map."""

import logging
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import factorial, pi, prod
from typing import Literal, Optional, Sequence

import numpy as np

from app.core.curves import LaurentMap
from app.core.errors import (
    CavityError,
    ConfigurationError,
    InvalidMomentsError,
    OrderOutOfRangeError,
)
from app.core.gpst import MomentSequences, extract_moments, recovered_gpst

logger = logging.getLogger(__name__)

MAX_ENUMERATION_ORDER = 16
DEFAULT_STABILITY_THRESHOLD = 0.5

Variant = Literal["literal", "corrected"]


@dataclass(frozen=True)
class MultiIndexSet:
    """alpha in N^{m+1} with alpha_0 + 2 alpha_1 + ... + (m+1) alpha_m = m+1, alpha_0 != m+1"""

    m: int
    indices: tuple

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def _partitions(total: int, largest_part: int):
    """Multiplicity vectors (length ``largest_part``) of partitions of ``total``"""
    if largest_part == 0:
        if total == 0:
            yield ()
        return
    for count in range(total // largest_part + 1):
        for rest in _partitions(total - count * largest_part, largest_part - 1):
            yield rest + (count,)


@lru_cache(maxsize=None)
def _enumerate(m: int) -> tuple:
    # alpha_k counts the parts of size k + 1
    members = [alpha for alpha in _partitions(m + 1, m + 1) if alpha[0] != m + 1]
    return tuple(sorted(members, key=lambda alpha: alpha[::-1]))


def enumerate_indices(m: int) -> MultiIndexSet:
    if not 1 <= m <= MAX_ENUMERATION_ORDER:
        raise OrderOutOfRangeError(f"Order must lie in 1..{MAX_ENUMERATION_ORDER}, got {m}")
    return MultiIndexSet(m=m, indices=_enumerate(m))


def coefficient_literal(alpha: Sequence[int], m: int) -> float:
    length = sum(alpha)
    tail = sum(alpha[1:])
    sign = (-1) ** (length + 1)
    denominator = 2 ** alpha[0] * m * prod(k ** alpha[k] for k in range(1, m + 1))
    return sign * (2.0 * pi) ** (m / 2 - tail) / denominator


def multiplicity(alpha: Sequence[int], m: int) -> int:
    """Number of ordered tuples behind the multi-index: m! / ((m - |alpha|)! prod alpha_k!)"""
    return factorial(m) // (factorial(m - sum(alpha)) * prod(factorial(a) for a in alpha))


def coefficient_corrected(alpha: Sequence[int], m: int) -> float:
    return coefficient_literal(alpha, m) * multiplicity(alpha, m)


COEFFICIENTS = {"literal": coefficient_literal, "corrected": coefficient_corrected}


@dataclass(frozen=True)
class ReconstructionResult:
    """Recovered exterior map plus the context it was recovered in"""

    map: LaurentMap
    order: int
    noise: float = 0.0
    center: complex = 0j
    scale: float = 1.0
    variant: Variant = "corrected"
    errors: Optional[np.ndarray] = field(default=None, compare=False)

    def coefficients(self) -> np.ndarray:
        return self.map.coefficients()


def invert_moments(moments: MomentSequences, variant: Variant = "corrected") -> ReconstructionResult:
    if variant not in COEFFICIENTS:
        raise ConfigurationError(f"Unknown coefficient variant: {variant}")
    if moments.order < 2:
        raise InvalidMomentsError(f"Need at least mu_1 and mu_2, got order {moments.order}")
    mu_1 = moments.mu[0]
    if np.iscomplexobj(mu_1) and mu_1.imag != 0.0:
        raise InvalidMomentsError(f"mu_1 must be real, got {mu_1}")
    mu_1 = float(np.real(mu_1))
    if mu_1 <= 0.0:
        raise InvalidMomentsError(f"mu_1 must be positive, got {mu_1}")

    coefficient = COEFFICIENTS[variant]
    ratio = moments.mu[1] / mu_1
    nu = moments.nu
    negative = []
    for m in range(1, moments.order + 1):
        total = 0j
        for alpha in enumerate_indices(m):
            term = coefficient(alpha, m) * ratio ** alpha[0]
            for k in range(1, m + 1):
                if alpha[k]:
                    term *= nu[k - 1] ** alpha[k]
            total += term
        negative.append(mu_1 ** (-m / 2) * total)

    laurent = LaurentMap(np.sqrt(mu_1 / (2.0 * pi)), moments.mu[1] / (2.0 * mu_1), tuple(negative))
    return ReconstructionResult(map=laurent, order=moments.order, variant=variant)


def shift_and_rescale(result: ReconstructionResult, center: complex, scale: float) -> ReconstructionResult:
    """Undo the basis shift by ``center`` then the dilation by ``scale`` (both in scaled coordinates)"""
    if scale <= 0:
        raise ConfigurationError(f"Scale must be positive, got {scale}")
    laurent = result.map
    shifted = LaurentMap(
        laurent.a1 / scale,
        (laurent.a0 + center) / scale,
        tuple(c / scale for c in laurent.negative),
    )
    return replace(result, map=shifted, center=complex(center) / scale, scale=scale)


def apply_noise(measurement, noise: float, seed: int):
    """R^N_ij = (1 + delta N_ij) R_ij with N_ij uniform on [-1, 1]"""
    if noise < 0:
        raise ConfigurationError(f"Noise level must be non-negative, got {noise}")
    if noise == 0:
        return measurement
    rng = np.random.default_rng(seed)
    factors = 1.0 + noise * rng.uniform(-1.0, 1.0, size=measurement.entries.shape)
    return measurement.with_entries(factors * measurement.entries)


def truncate(laurent: LaurentMap, order: int) -> LaurentMap:
    return laurent.truncated(order)


def relative_errors(laurent: LaurentMap, truth: LaurentMap) -> np.ndarray:
    """|a_k - a_k^true| / |a_k^true| for k = 1, 0, -1, ..., -M (NaN where the truth vanishes)"""
    ks = range(1, -laurent.order - 1, -1)
    errors = np.full(laurent.order + 2, np.nan)
    for i, k in enumerate(ks):
        exact = truth.coefficient(k)
        if exact != 0:
            errors[i] = abs(laurent.coefficient(k) - exact) / abs(exact)
    return errors


def _complex_median(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.median(samples.real, axis=axis) + 1j * np.median(samples.imag, axis=axis)


def dispersion(results: Sequence[ReconstructionResult]) -> np.ndarray:
    """Across-seed median |a - median| over |median| for a_{-1}, ..., a_{-M}"""
    samples = np.array([r.map.negative for r in results], dtype=complex)
    center = _complex_median(samples)
    spread = np.median(np.abs(samples - center[None, :]), axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        relative = np.where(spread == 0.0, 0.0, spread / np.abs(center))
    return relative


def truncate_by_stability(
    results: Sequence[ReconstructionResult], threshold: float = DEFAULT_STABILITY_THRESHOLD
) -> int:
    """Largest M' with dispersion of a_{-m} <= threshold for every m <= M'"""
    if len(results) < 2:
        raise ConfigurationError("Stability truncation needs at least two results")
    retained = 0
    for value in dispersion(results):
        if not value <= threshold:
            break
        retained += 1
    return retained


def reconstruct(
    measurement,
    variant: Variant = "corrected",
    imag_tolerance: Optional[float] = 1e-6,
    noise: float = 0.0,
) -> ReconstructionResult:
    """Measurement -> recovered GPST -> moments -> coefficients in the caller's coordinates"""
    inner = recovered_gpst(measurement.outer_gpst, measurement)
    moments = extract_moments(inner, imag_tolerance=imag_tolerance)
    result = invert_moments(moments, variant)
    result = shift_and_rescale(result, measurement.scaled_center, measurement.scale)
    return replace(result, noise=noise)


@dataclass(frozen=True)
class NoiseStudy:
    noise: float
    seeds: tuple
    results: tuple
    retained_order: int
    median_map: LaurentMap
    median_errors: Optional[np.ndarray] = None
    failures: dict = field(default_factory=dict)


def _median_map(results: Sequence[ReconstructionResult]) -> LaurentMap:
    stacked = np.array([r.coefficients() for r in results])
    return LaurentMap.from_coefficients(_complex_median(stacked))


def run_noise_study(
    measurement,
    noise: float,
    seeds: Sequence[int],
    truth: Optional[LaurentMap] = None,
    variant: Variant = "corrected",
    threshold: float = DEFAULT_STABILITY_THRESHOLD,
) -> NoiseStudy:
    """One reconstruction per seed; seeds whose data break mu_1 > 0 are recorded as failures"""
    results, used, failures = [], [], {}
    for seed in seeds:
        noisy = apply_noise(measurement, noise, seed)
        try:
            result = reconstruct(noisy, variant=variant, imag_tolerance=None, noise=noise)
        except CavityError as e:
            logger.warning(f"⚠ Seed {seed} failed at noise {noise}: {e}")
            failures[seed] = str(e)
            continue
        if truth is not None:
            result = replace(result, errors=relative_errors(result.map, truth))
        results.append(result)
        used.append(seed)
        logger.debug(f"Seed {seed}: a1={result.map.a1:.6g}, a0={result.map.a0:.6g}")

    if not results:
        raise InvalidMomentsError(f"Every seed failed at noise level {noise}")
    retained = truncate_by_stability(results, threshold) if len(results) >= 2 else measurement.order
    median_errors = None
    if truth is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            median_errors = np.nanmedian(np.array([r.errors for r in results]), axis=0)
    logger.info(f"Noise {noise:.3f}: {len(results)}/{len(seeds)} seeds usable, retained order {retained}")
    return NoiseStudy(
        noise=noise,
        seeds=tuple(used),
        results=tuple(results),
        retained_order=retained,
        median_map=_median_map(results),
        median_errors=median_errors,
        failures=failures,
    )
