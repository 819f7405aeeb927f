"""Ground truth for a cavity given by a Laurent map, computed without any boundary solver."""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from app.core.curves import LaurentMap, power_coeffs
from app.core.errors import OracleFailureError
from app.core.gpst import GpstMatrix, MomentSequences

logger = logging.getLogger(__name__)

NEWTON_MAX_ITERATIONS = 50
NEWTON_TOLERANCE = 1e-13


@dataclass(frozen=True)
class OracleMoments:
    """mu[m-1, m'-1] = mu^{m,m'} and nu[m-1, m'-1] = nu^{m,m'}"""

    mu: np.ndarray
    nu: np.ndarray

    @property
    def order(self) -> int:
        return self.mu.shape[0]

    def sequences(self) -> MomentSequences:
        """mu_m = mu^{m,1}, nu_m = nu^{m,1}"""
        mu = self.mu[:, 0].copy()
        mu[0] = mu[0].real
        return MomentSequences(mu=mu, nu=self.nu[:, 0].copy())


def _quadrature_nodes(laurent: LaurentMap, order: int) -> int:
    # highest frequency in the integrands is order * (M + 1) + order
    return max(4 * (order + 1), 2 * (order * (laurent.order + 2) + 1))


def moments_from_map(laurent: LaurentMap, order: int) -> OracleMoments:
    """Contour integrals over the unit circle, trapezoidal rule.

    mu^{m,m'} = int conj(z (phi_+^{m'})'(z)) phi^m(z) dt and
    nu^{m,m'} = int z (phi_+^{m'})'(z) phi^m(z) dt with z = e^{it}.
    """
    n = _quadrature_nodes(laurent, order)
    t = 2.0 * np.pi * np.arange(n) / n
    z = np.exp(1j * t)
    powers = [power_coeffs(laurent, m) for m in range(1, order + 1)]

    values = np.empty((order, n), dtype=complex)
    derivative_terms = np.empty((order, n), dtype=complex)
    for i, power in enumerate(powers):
        ks = np.arange(power.exponent, power.lowest - 1, -1)
        values[i] = (power.coeffs[None, :] * z[:, None] ** ks[None, :]).sum(axis=1)
        positive = ks >= 1
        weighted = ks[positive] * power.coeffs[positive]
        derivative_terms[i] = (weighted[None, :] * z[:, None] ** ks[positive][None, :]).sum(axis=1)

    h = 2.0 * np.pi / n
    mu = h * values @ np.conj(derivative_terms).T
    nu = h * values @ derivative_terms.T
    return OracleMoments(mu=mu, nu=nu)


def moments_closed_form(laurent: LaurentMap, order: int) -> OracleMoments:
    """mu^{m,m'} = 2 pi sum_k k conj(a_k^{m'}) a_k^m and nu^{m,m'} = 2 pi sum_k k a_k^{m'} a_{-k}^m"""
    powers = [power_coeffs(laurent, m) for m in range(1, order + 1)]
    mu = np.zeros((order, order), dtype=complex)
    nu = np.zeros((order, order), dtype=complex)
    for i, pm in enumerate(powers):
        for j, pmp in enumerate(powers):
            for k in range(1, pmp.exponent + 1):
                mu[i, j] += k * np.conj(pmp.coefficient(k)) * pm.coefficient(k)
                nu[i, j] += k * pmp.coefficient(k) * pm.coefficient(-k)
    return OracleMoments(mu=2.0 * np.pi * mu, nu=2.0 * np.pi * nu)


def gpst_from_map(laurent: LaurentMap, order: int, center: complex = 0j) -> GpstMatrix:
    """GPST of the cavity in the basis (z - center)^m"""
    shifted = LaurentMap(laurent.a1, laurent.a0 - center, laurent.negative)
    moments = moments_from_map(shifted, order)
    entries = 2.0 * np.block(
        [[moments.nu, moments.mu], [np.conj(moments.mu), np.conj(moments.nu)]]
    )
    return GpstMatrix(order, entries, kind="oracle")


def sampled_laurent_coefficients(
    func: Callable[[np.ndarray], np.ndarray],
    radius: float,
    kmax: int,
    kmin: int,
    nodes: int = 256,
) -> np.ndarray:
    """Coefficients c_kmax, ..., c_kmin of func(z) = sum c_k z^k sampled on |z| = radius"""
    z = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    spectrum = np.fft.fft(func(z)) / nodes
    ks = np.arange(kmax, kmin - 1, -1)
    return spectrum[ks % nodes] / radius**ks


def _newton_inverse(laurent: LaurentMap, z: np.ndarray) -> np.ndarray:
    w = z / laurent.a1
    for iteration in range(NEWTON_MAX_ITERATIONS):
        step = (laurent(w) - z) / laurent.derivative(w)
        w = w - step
        if np.all(np.abs(step) <= NEWTON_TOLERANCE * np.abs(w)):
            logger.debug(f"Newton inversion converged after {iteration + 1} iterations")
            return w
    raise OracleFailureError(
        f"Newton inversion did not converge in {NEWTON_MAX_ITERATIONS} iterations "
        f"(max step {np.abs(step).max():.3e})"
    )


def laurent_inversion_oracle(laurent: LaurentMap, order: int, nodes: int = 256) -> LaurentMap:
    """Coefficients of phi^{-1} by Newton solves on a large circle and an FFT"""
    radius = 3.0 * (abs(laurent.a1) + abs(laurent.a0) + sum(abs(c) for c in laurent.negative))
    coefficients = sampled_laurent_coefficients(
        lambda z: _newton_inverse(laurent, z), radius, 1, -order, nodes=max(nodes, 4 * (order + 2))
    )
    return LaurentMap.from_coefficients(coefficients)
