"""The Euclidean obstruction basis Psi_l, projection onto it, and the
three-regime Fourier splitting.

Psi_l = (1 + sigma)/2 of  sqrt|w| e^{i w t} e^{-|w| r} r^{-1/2} (e^{-i theta}, sgn l) (x) 1,
with w = 2 pi l / |Z|, normalized in L^2 of the truncated tube. Its u-slot
has t-frequency +l and its v-slot -l, so distinct l are orthogonal.
"""

from __future__ import annotations

import csv
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .clifford import quaternionic_j, real_structure, values_of
from .errors import ResolutionError, UnsupportedModeError
from .geometry import GAMMA_DEFAULT, TubeGrid, integrate


@dataclass(frozen=True)
class ObstructionSpectrum:
    """Complex coefficients indexed by the nonzero modes in ``ells``."""

    ells: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        ells = np.asarray(self.ells, dtype=int)
        c = np.asarray(self.coefficients, dtype=complex)
        if ells.shape != c.shape:
            raise ValueError("ells and coefficients must have equal shapes")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite obstruction coefficients")
        object.__setattr__(self, "ells", ells)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, ell_max: int) -> "ObstructionSpectrum":
        ells = mode_range(ell_max)
        return cls(ells, np.zeros(ells.size, complex))

    @property
    def ell_max(self) -> int:
        return int(np.max(np.abs(self.ells))) if self.ells.size else 0

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def __getitem__(self, ell: int) -> complex:
        idx = np.flatnonzero(self.ells == ell)
        return complex(self.coefficients[idx[0]]) if idx.size else 0j

    def __add__(self, other: "ObstructionSpectrum") -> "ObstructionSpectrum":
        if not np.array_equal(self.ells, other.ells):
            raise ValueError("spectra live on different mode sets")
        return ObstructionSpectrum(self.ells, self.coefficients + other.coefficients)

    def __sub__(self, other: "ObstructionSpectrum") -> "ObstructionSpectrum":
        return self + other.scale(-1)

    def scale(self, c) -> "ObstructionSpectrum":
        return ObstructionSpectrum(self.ells, c * self.coefficients)

    def masked(self, mask: np.ndarray) -> "ObstructionSpectrum":
        return ObstructionSpectrum(self.ells, np.where(mask, self.coefficients, 0))

    def to_rows(self) -> list[tuple[int, float, float]]:
        return [(int(l), float(c.real), float(c.imag)) for l, c in zip(self.ells, self.coefficients)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["ell", "re", "im"])
            w.writerows(self.to_rows())


def mode_range(ell_max: int) -> np.ndarray:
    return np.r_[np.arange(-ell_max, 0), np.arange(1, ell_max + 1)]


def _default_ell_max(grid: TubeGrid) -> int:
    return grid.n_t // 2 - 1


def _check_mode(ell: int, grid: TubeGrid) -> None:
    if ell == 0:
        raise UnsupportedModeError("l = 0 is not an L^2 obstruction mode on the model tube")
    if abs(ell) > _default_ell_max(grid):
        raise ResolutionError(f"mode l = {ell} is not resolved by n_t = {grid.n_t}")


_profile_cache: "weakref.WeakKeyDictionary[TubeGrid, dict]" = weakref.WeakKeyDictionary()


def radial_profile(ell: int, grid: TubeGrid) -> np.ndarray:
    """Real radial factor P(r) with Psi_l u-slot = P (e^{-i theta}, s) e^{i w t}.

    Includes the factor 1/2 from (1 + sigma)/2 and the numerical L^2
    normalization on the grid. Cached per grid.
    """
    _check_mode(ell, grid)
    cache = _profile_cache.setdefault(grid, {})
    if ell not in cache:
        w = abs(2 * np.pi * ell / grid.circumference)
        r = grid.r
        P = 0.5 * np.sqrt(w) * np.exp(-w * r) / np.sqrt(r)
        # |Psi|^2 = 4 P^2 at every (t, theta); normalize the quadrature to 1
        mass = 4 * np.sum(P**2 * grid.radial_weights) * grid.circumference * 2 * np.pi
        cache[ell] = P / np.sqrt(mass)
    return cache[ell]


def cokernel_element(ell: int, grid: TubeGrid) -> np.ndarray:
    """The normalized obstruction element Psi_l sampled on the grid."""
    P = radial_profile(ell, grid)
    t, th, _ = grid.mesh
    w = 2 * np.pi * ell / grid.circumference
    f = P * np.exp(1j * w * t)
    base = np.zeros((2, 2, *grid.shape), complex)
    base[0, 0] = 2 * f * np.exp(-1j * th)
    base[1, 0] = 2 * np.sign(ell) * f
    return (base + real_structure(base, th)) / 2


def obstruction_project(field, grid: TubeGrid, ell_max: int | None = None) -> ObstructionSpectrum:
    """Complex obstruction coefficients of a field for 0 < |l| <= ell_max.

    S^Re is identified with C^2 through its first slot, and in that
    trivialization the coefficient is the Hermitian pairing with Psi_l:

        c_l = 2 <(f^Re)_1, (Psi_l)_1>,    f^Re = (f + sigma f)/2.

    For f in S^Re the full-fiber pairing <f, Psi_l> equals Re c_l; c_l also
    keeps the partner direction (1 + sigma)(i psi_l)/2, so c is complex
    linear for the complex structure of S^Re and project(Psi_k) = delta_k.
    Evaluated by FFT in (t, theta), which reduces each pairing to a radial
    quadrature.
    """
    v = values_of(field)
    L = _default_ell_max(grid) if ell_max is None else int(ell_max)
    if L > _default_ell_max(grid):
        raise ResolutionError(f"ell_max = {L} exceeds what n_t = {grid.n_t} resolves")
    ells = mode_range(L)
    th = grid.mesh[1]
    first = (v[:, 0] - np.exp(-1j * th) * quaternionic_j(v[:, 1])) / 2
    F = np.fft.fft2(first, axes=(-3, -2)) * (grid.circumference * 2 * np.pi / (grid.n_t * grid.n_theta))
    nt = grid.n_t
    km1 = grid.n_theta - 1  # theta-mode -1
    coeffs = np.empty(ells.size, complex)
    for i, ell in enumerate(ells):
        P = radial_profile(int(ell), grid) * grid.radial_weights
        p = ell % nt
        coeffs[i] = 2 * np.dot(F[0, p, km1] + np.sign(ell) * F[1, p, 0], P)
    return ObstructionSpectrum(ells, coeffs)


def tail_fraction(field, R: float, grid: TubeGrid) -> float:
    """Fraction of int |field|^2 dV carried by r >= R.

    Integrates G(r) = r int |field|^2 dt dtheta with the trapezoid rule,
    interpolating G linearly at r = R; the total uses the grid quadrature.
    """
    v = values_of(field)
    dens = np.sum(np.abs(v) ** 2, axis=(0, 1))
    total = float(integrate(dens, grid).real)
    cell = (grid.circumference / grid.n_t) * (2 * np.pi / grid.n_theta)
    r = grid.r
    G = np.sum(dens, axis=(0, 1)) * cell * r
    if R <= r[0]:
        return 1.0
    k = np.searchsorted(r, R)
    GR = np.interp(R, r, G)
    tail = trapezoid(np.r_[GR, G[k:]], np.r_[R, r[k:]])
    return float(tail / total)


@dataclass(frozen=True)
class RegimeSplit:
    low: ObstructionSpectrum
    med: ObstructionSpectrum
    high: ObstructionSpectrum
    L_low: float
    L_med: float

    def total(self) -> ObstructionSpectrum:
        return self.low + self.med + self.high


def regime_thresholds(epsilon: float, gamma: float = GAMMA_DEFAULT) -> tuple[float, float]:
    return epsilon ** (-(0.5 + gamma)), epsilon ** (-2 / 3)


def regime_split(spectrum: ObstructionSpectrum, epsilon: float,
                 gamma: float = GAMMA_DEFAULT) -> RegimeSplit:
    """Split at |l| <= L_low < |l| <= L_med < |l|."""
    L_low, L_med = regime_thresholds(epsilon, gamma)
    if not L_low < L_med:
        raise ResolutionError(f"empty medium regime: L_low = {L_low:.3g} >= L_med = {L_med:.3g}")
    if L_med > spectrum.ell_max:
        raise ResolutionError(
            f"L_med = {L_med:.3g} exceeds the resolved mode range ell_max = {spectrum.ell_max}")
    a = np.abs(spectrum.ells)
    low = a <= L_low
    med = (a > L_low) & (a <= L_med)
    return RegimeSplit(spectrum.masked(low), spectrum.masked(med), spectrum.masked(~(low | med)),
                       L_low, L_med)
