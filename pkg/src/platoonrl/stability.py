"""Frequency-domain tooling: plant transfer function, Nyquist sampling with
an indented contour, circle-criterion verdicts, and empirical sector bounds
for a scalar policy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TransferFunction:
    """Rational transfer function as descending-power coefficient tuples."""

    num: tuple
    den: tuple

    def __post_init__(self):
        if len(self.den) == 0 or self.den[0] == 0:
            raise ValueError("denominator leading coefficient must be nonzero")

    def __call__(self, s: complex) -> complex:
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def poles(self) -> np.ndarray:
        return np.roots(self.den)


@dataclass(frozen=True)
class SectorBounds:
    """Slope interval enclosing a static nonlinearity through the origin.
    A degenerate (equal-bounds) sector describes a purely linear gain."""

    k_low: float
    k_high: float

    def __post_init__(self):
        if not self.k_low <= self.k_high:
            raise ValueError("sector requires k_low <= k_high")
        if not (np.isfinite(self.k_low) and np.isfinite(self.k_high)):
            raise ValueError("sector bounds must be finite")


@dataclass(frozen=True)
class CircleRegion:
    """Forbidden disk in the complex plane derived from a sector."""

    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @staticmethod
    def from_sector(sector: SectorBounds) -> "CircleRegion":
        if sector.k_low <= 0:
            raise ValueError("circle construction needs 0 < k_low")
        radius = 0.5 * (1.0 / sector.k_low - 1.0 / sector.k_high)
        center = -0.5 * (1.0 / sector.k_low + 1.0 / sector.k_high)
        return CircleRegion(center=complex(center, 0.0), radius=radius)


def plant_tf(powertrain_constant: float) -> TransferFunction:
    """Loop transfer function of the mean-error channel: unit output row over
    the third-order lag chain, carrying a double integrator."""
    if powertrain_constant <= 0:
        raise ValueError("powertrain_constant must be positive")
    return TransferFunction(num=(1.0, 1.0, 1.0),
                            den=(powertrain_constant, 1.0, 0.0, 0.0))


def augment_integrator(tf: TransferFunction) -> TransferFunction:
    """Multiply the denominator by s (one extra pole at the origin)."""
    return TransferFunction(num=tf.num, den=tuple(tf.den) + (0.0,))


def nyquist_samples(tf: TransferFunction, omega_grid) -> tuple:
    """Evaluate the tf along the positive imaginary axis.

    Returns (omegas, values); grid points landing on a pole are dropped.
    """
    omegas = np.asarray(omega_grid, dtype=float)
    if np.any(omegas <= 0) or np.any(np.diff(omegas) <= 0):
        raise ValueError("omega grid must be positive and increasing")
    s = 1j * omegas
    den = np.polyval(tf.den, s)
    scale = max(np.max(np.abs(den)), 1.0)
    ok = np.abs(den) > 1e-12 * scale
    values = np.polyval(tf.num, s[ok]) / den[ok]
    return omegas[ok], values


def default_omega_grid(n: int = 2000, lo: float = 1e-3, hi: float = 1e3):
    return np.logspace(np.log10(lo), np.log10(hi), n)


def count_origin_poles(tf: TransferFunction, tol: float = 1e-9) -> int:
    return int(np.sum(np.abs(tf.poles()) < tol))


def count_rhp_poles(tf: TransferFunction, tol: float = 1e-9) -> int:
    """Open right-half-plane poles; origin poles excluded (they are routed
    around by the indented contour)."""
    poles = tf.poles()
    return int(np.sum(poles.real > tol))


def _indented_contour(tf: TransferFunction, omega_grid) -> np.ndarray:
    """Image of the closed Nyquist contour: up the negative imaginary axis,
    a small right-half-plane detour around the origin, up the positive
    imaginary axis, and the large closing arc."""
    omegas, upper = nyquist_samples(tf, omega_grid)
    r_in, r_out = omegas[0], omegas[-1]
    theta_in = np.linspace(-np.pi / 2, np.pi / 2, 721)
    indent = np.array([tf(r_in * np.exp(1j * th)) for th in theta_in])
    theta_out = np.linspace(np.pi / 2, -np.pi / 2, 361)
    big_arc = np.array([tf(r_out * np.exp(1j * th)) for th in theta_out])
    lower = np.conj(upper[::-1])  # s = -j*omega branch, traversed toward 0
    return np.concatenate([lower, indent, upper, big_arc])


def _winding_number(curve: np.ndarray, z0: complex) -> int:
    rel = curve - z0
    angles = np.angle(rel)
    steps = np.diff(angles)
    steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
    # close the loop
    closing = np.angle(rel[0]) - np.angle(rel[-1])
    closing = (closing + np.pi) % (2.0 * np.pi) - np.pi
    total = steps.sum() + closing
    return int(np.round(total / (2.0 * np.pi)))


@dataclass(frozen=True)
class CircleVerdict:
    certified: bool
    margin: float
    encirclements: int
    required_encirclements: int
    region: CircleRegion


def circle_criterion_check(tf: TransferFunction, sector: SectorBounds,
                           omega_grid=None) -> CircleVerdict:
    """Grid-based circle-criterion test for a sector with 0 < k_low < k_high.

    Certified when the sampled Nyquist curve keeps a positive distance to
    the sector disk and the indented contour winds around it exactly as many
    times (counterclockwise) as the plant has open right-half-plane poles.
    The margin is the smallest sampled distance to the disk; being sampled,
    the verdict is advisory rather than a proof.
    """
    if sector.k_low <= 0:
        raise ValueError("circle criterion here requires 0 < k_low")
    if omega_grid is None:
        omega_grid = default_omega_grid()
    region = CircleRegion.from_sector(sector)
    _, values = nyquist_samples(tf, omega_grid)
    dist = np.abs(values - region.center) - region.radius
    margin = float(dist.min())
    curve = _indented_contour(tf, omega_grid)
    winding = _winding_number(curve, region.center)
    required = count_rhp_poles(tf)
    certified = bool(margin > 0.0 and winding == required)
    return CircleVerdict(certified=certified, margin=margin,
                         encirclements=winding,
                         required_encirclements=required, region=region)


def estimate_sector(policy, input_range: float, dead_zone: float,
                    samples: int = 2001) -> SectorBounds:
    """Empirical sector of a scalar policy: extreme values of policy(e)/e on
    a symmetric grid over [-input_range, input_range], skipping the dead
    zone around zero where the ratio is ill-conditioned."""
    if not input_range > dead_zone > 0:
        raise ValueError("need input_range > dead_zone > 0")
    half = np.linspace(dead_zone, input_range, max(2, samples // 2))
    grid = np.concatenate([-half[::-1], half])
    ratios = np.empty_like(grid)
    for i, e in enumerate(grid):
        out = float(policy(e))
        if not np.isfinite(out):
            raise ValueError(f"policy returned a non-finite value at e={e}")
        ratios[i] = out / e
    return SectorBounds(k_low=float(ratios.min()), k_high=float(ratios.max()))


def routh_stable(coeffs) -> bool:
    """Root-location oracle: all polynomial roots strictly in the open left
    half plane."""
    roots = np.roots(np.asarray(coeffs, dtype=float))
    return bool(np.all(roots.real < 0))


def closed_loop_poly(tf: TransferFunction, gain: float) -> np.ndarray:
    """Characteristic polynomial of the unity feedback loop with gain k:
    den + k*num."""
    den = np.asarray(tf.den, dtype=float)
    num = np.zeros_like(den)
    num[len(den) - len(tf.num):] = tf.num
    return den + gain * num
