"""Grids, quadrature, derivatives, weights and cut-offs on the model tube.

The tube is S^1_t x D^2 with coordinates (t, theta, r). Fields are numpy
arrays whose last three axes are (t, theta, r); spinor fields carry two
leading component axes (see :mod:`z2glue.clifford`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

from .errors import ConfigError, ResolutionError

MAX_NODES = 1 << 24
GAMMA_DEFAULT = 1e-2
GAMMA_MINUS_DEFAULT = 1e-2
NU_PLUS_DEFAULT = 0.25 - 1e-2
NU_MINUS_DEFAULT = 0.5 - 1e-2


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True, eq=False)
class TubeGrid:
    """Discretization of S^1_t x D^2 with spectral t/theta and radial nodes.

    ``radial_nodes`` is stored as a tuple so grids are immutable; the numpy
    views below are computed once. Grids compare by identity, which is
    what the per-grid caches rely on.
    """

    n_t: int
    n_theta: int
    n_r: int
    r_out: float
    circumference: float
    radial_nodes: tuple

    def __post_init__(self):
        for name in ("n_t", "n_theta"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 4 or not _is_pow2(int(n)):
                raise ConfigError(name, f"must be a power of two >= 4, got {n!r}")
        if self.n_r < 3:
            raise ConfigError("n_r", f"need at least 3 radial nodes, got {self.n_r}")
        if self.n_t * self.n_theta * self.n_r > MAX_NODES:
            raise ConfigError("n_r", "grid exceeds the configured node limit")
        if not self.r_out > 0:
            raise ConfigError("r_out", "must be positive")
        if not self.circumference > 0:
            raise ConfigError("circumference", "must be positive")
        r = np.asarray(self.radial_nodes, dtype=float)
        if r.shape != (self.n_r,) or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ConfigError("radial_nodes", "must be n_r strictly increasing positive reals")
        if r[-1] > self.r_out * (1 + 1e-12):
            raise ConfigError("radial_nodes", "nodes exceed r_out")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_t, self.n_theta, self.n_r)

    @cached_property
    def r(self) -> np.ndarray:
        return np.asarray(self.radial_nodes, dtype=float)

    @cached_property
    def t(self) -> np.ndarray:
        return np.arange(self.n_t) * (self.circumference / self.n_t)

    @cached_property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * (2 * np.pi / self.n_theta)

    @cached_property
    def mode_t(self) -> np.ndarray:
        """Integer t-mode index p of each FFT slot (numpy order)."""
        return np.fft.fftfreq(self.n_t, 1.0 / self.n_t).astype(int)

    @cached_property
    def mode_theta(self) -> np.ndarray:
        return np.fft.fftfreq(self.n_theta, 1.0 / self.n_theta).astype(int)

    @cached_property
    def omega(self) -> np.ndarray:
        """Angular t-frequency 2 pi p / |Z| for each FFT slot."""
        return 2 * np.pi * self.mode_t / self.circumference

    @cached_property
    def dt_symbol(self) -> np.ndarray:
        """Spectral symbol of d/dt with the Nyquist slot zeroed."""
        w = 1j * self.omega
        w[self.n_t // 2] = 0.0
        return w

    @cached_property
    def dtheta_symbol(self) -> np.ndarray:
        k = 1j * self.mode_theta.astype(float)
        k[self.n_theta // 2] = 0.0
        return k

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable (t, theta, r) coordinate arrays."""
        return (self.t[:, None, None], self.theta[None, :, None], self.r[None, None, :])

    @cached_property
    def radial_weights(self) -> np.ndarray:
        """Weights w_k with sum_k w_k g(r_k) ~ int_0^{r_out} g(r) r dr.

        Trapezoid rule on G = g r over [0, r_out]. On [0, r_1] the axis value
        G(0) is extrapolated linearly when that keeps every weight positive
        (uniform-like spacing); on strongly graded grids r_1 is tiny and
        G(0) = 0 is used instead.
        """
        r = self.r
        W = np.zeros_like(r)
        h = np.diff(r)
        W[:-1] += h / 2
        W[1:] += h / 2
        a = r[0] / h[0]
        if a <= 1.0:
            W[0] += r[0] / 2 * (2 + a)
            W[1] -= r[0] / 2 * a
        else:
            W[0] += r[0] / 2
        return W * r

    @cached_property
    def volume_weights(self) -> np.ndarray:
        """Quadrature weights for int f dV, dV = r dr dtheta dt."""
        cell = (self.circumference / self.n_t) * (2 * np.pi / self.n_theta)
        return cell * np.broadcast_to(self.radial_weights, self.shape)

    @cached_property
    def radial_stencil(self) -> tuple[np.ndarray, np.ndarray]:
        """Second-order three-point first-derivative stencil.

        Returns (offsets, coeffs) with shape (n_r, 3): centred at interior
        nodes and one-sided at both ends.
        """
        r = self.r
        n = self.n_r
        idx = np.empty((n, 3), dtype=int)
        c = np.empty((n, 3))
        for k in range(n):
            j = min(max(k - 1, 0), n - 3)
            nodes = r[j:j + 3]
            idx[k] = np.arange(j, j + 3)
            c[k] = _lagrange_derivative_weights(nodes, r[k])
        return idx, c

    @cached_property
    def radial_diff_matrix(self) -> np.ndarray:
        """Dense matrix of :attr:`radial_stencil` (for small per-mode solves)."""
        idx, c = self.radial_stencil
        M = np.zeros((self.n_r, self.n_r))
        np.add.at(M, (np.repeat(np.arange(self.n_r), 3), idx.ravel()), c.ravel())
        return M

    def to_config(self) -> dict:
        return {
            "n_t": self.n_t,
            "n_theta": self.n_theta,
            "n_r": self.n_r,
            "r_out": self.r_out,
            "circumference": self.circumference,
        }


def _lagrange_derivative_weights(nodes: np.ndarray, x: float) -> np.ndarray:
    x0, x1, x2 = nodes
    return np.array([
        ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2)),
        ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2)),
        ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1)),
    ])


def build_grid(
    n_t: int,
    n_theta: int,
    n_r: int,
    r_out: float = 1.0,
    circumference: float = 2 * np.pi,
    radial_scheme: Literal["uniform", "graded"] = "uniform",
    q: float | None = None,
) -> TubeGrid:
    """Build a tube grid.

    ``uniform`` places r_k = k r_out / n_r for k = 1..n_r. ``graded`` places
    r_out q^k for k = 0..n_r-1; when ``q`` is omitted it is chosen so the
    smallest node is 1e-4 r_out.
    """
    if not isinstance(n_r, (int, np.integer)) or n_r < 3:
        raise ConfigError("n_r", f"need an integer >= 3, got {n_r!r}")
    if not (isinstance(r_out, (int, float)) and r_out > 0):
        raise ConfigError("r_out", f"must be a positive number, got {r_out!r}")
    if radial_scheme == "uniform":
        nodes = r_out * np.arange(1, n_r + 1) / n_r
    elif radial_scheme == "graded":
        if q is None:
            q = 1e-4 ** (1.0 / (n_r - 1))
        if not 0 < q < 1:
            raise ConfigError("q", f"grading ratio must lie in (0, 1), got {q!r}")
        nodes = np.sort(r_out * q ** np.arange(n_r))
    else:
        raise ConfigError("radial_scheme", f"unknown scheme {radial_scheme!r}")
    return TubeGrid(int(n_t), int(n_theta), int(n_r), float(r_out),
                    float(circumference), tuple(float(x) for x in nodes))


# -- derivatives -----------------------------------------------------------

def d_r(f: np.ndarray, grid: TubeGrid) -> np.ndarray:
    """Plain second-order finite-difference derivative along the last axis."""
    idx, c = grid.radial_stencil
    return np.einsum("...kj,kj->...k", f[..., idx], c)


def d_r_edge(f: np.ndarray, grid: TubeGrid) -> np.ndarray:
    """Radial derivative conjugated by r^(1/2).

    Computes r^(-1/2) FD(r^(1/2) f) - f/(2r). It is exact on r^(-1/2) times a
    quadratic, which keeps the indicial profiles r^(+-1/2) of the edge
    operator accurate right up to the first node.
    """
    s = np.sqrt(grid.r)
    return d_r(f * s, grid) / s - f / (2 * grid.r)


def edge_diff_matrix(grid: TubeGrid) -> np.ndarray:
    s = np.sqrt(grid.r)
    return grid.radial_diff_matrix * s[None, :] / s[:, None] - np.diag(1 / (2 * grid.r))


def spectral_derivative(f: np.ndarray, grid: TubeGrid, axis: Literal["t", "theta"]) -> np.ndarray:
    if axis == "t":
        ax, sym = -3, grid.dt_symbol[:, None, None]
    else:
        ax, sym = -2, grid.dtheta_symbol[:, None]
    fh = np.fft.fft(f, axis=ax)
    out = np.fft.ifft(fh * sym, axis=ax)
    return out if np.iscomplexobj(f) else out.real


def integrate(f: np.ndarray, grid: TubeGrid) -> complex | float:
    """Quadrature of int f dV over the trailing (t, theta, r) axes."""
    return np.sum(f * grid.volume_weights, axis=(-3, -2, -1))


# -- weights and cut-offs --------------------------------------------------

def weight_r_eps(grid: TubeGrid, epsilon: float, kappa: float = 1.0) -> np.ndarray:
    """R_eps = sqrt(kappa^2 eps^(4/3) + r^2), broadcast to the grid shape."""
    if not 0 < epsilon <= 1:
        raise ConfigError("epsilon", f"must lie in (0, 1], got {epsilon!r}")
    if not kappa > 0:
        raise ConfigError("kappa", f"must be positive, got {kappa!r}")
    R = np.sqrt(kappa**2 * epsilon ** (4 / 3) + grid.r**2)
    return np.broadcast_to(R, grid.shape).copy()


CutoffKind = Literal["chi_plus", "chi_minus", "zeta_plus", "zeta_minus",
                     "indicator_plus", "indicator_minus"]


@dataclass(frozen=True)
class CutoffProfile:
    kind: CutoffKind
    epsilon: float
    gamma: float = GAMMA_MINUS_DEFAULT

    def __post_init__(self):
        if self.kind not in CutoffKind.__args__:
            raise ConfigError("kind", f"unknown cutoff {self.kind!r}")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon", f"must lie in (0, 1), got {self.epsilon!r}")

    @property
    def lam_plus(self) -> float:
        return self.epsilon ** 0.5

    @property
    def lam_minus(self) -> float:
        return self.epsilon ** (2 / 3 - self.gamma)

    def band(self) -> tuple[float, float] | None:
        """Transition band [a, b] of the profile (None for indicators)."""
        lp, lm = self.lam_plus, self.lam_minus
        return {
            "chi_plus": (lp / 4, lp / 2),
            "chi_minus": (lm / 4, lm / 2),
            "zeta_plus": (lm / 2, lp / 4),
            "zeta_minus": (lm / 2, lp / 4),
        }.get(self.kind)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind.startswith("indicator"):
            inside = (r <= self.lam_minus).astype(float)
            return inside if self.kind == "indicator_plus" else 1.0 - inside
        a, b = self.band()
        if not a < b:
            raise ConfigError("epsilon", f"{self.kind} band [{a:.3g}, {b:.3g}] is empty at this epsilon")
        ramp = log_ramp(r, a, b)
        return ramp if self.kind in ("chi_plus", "zeta_plus") else 1.0 - ramp


def log_ramp(r: np.ndarray, a: float, b: float) -> np.ndarray:
    """1 for r <= a, 0 for r >= b, affine in log r in between."""
    with np.errstate(divide="ignore"):
        s = np.log(np.asarray(r, dtype=float) / b) / np.log(a / b)
    return np.clip(s, 0.0, 1.0)


def cutoff(grid: TubeGrid, profile: CutoffProfile, min_band_nodes: int = 2) -> np.ndarray:
    band = profile.band()
    if band is not None:
        a, b = band
        inside = int(np.count_nonzero((grid.r >= a) & (grid.r <= b)))
        if inside < min_band_nodes:
            raise ResolutionError(
                f"{profile.kind} band [{a:.4g}, {b:.4g}] contains {inside} radial nodes "
                f"(need {min_band_nodes})")
    return np.broadcast_to(profile(grid.r), grid.shape).copy()
