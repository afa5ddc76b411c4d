"""Mode-dependent deformations of the core circle and the deformation operator.

A loop eta(t) displaces the singular circle inside the normal plane; its
p-th Fourier mode acts only within r <= 2 R0 / |p| through the family
chi_p(r) = chi(|p| r) chi_{r0}(r). The induced metric variation feeds the
Bourguignon-Gauduchon formula, whose obstruction component is the
deformation operator T.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .clifford import GAMMA, values_of
from .edge import cartesian_gradient, covariant_derivatives, model_harmonic_spinor
from .errors import ObstructedDeformationError
from .geometry import GAMMA_DEFAULT, TubeGrid, integrate
from .obstruction import ObstructionSpectrum, obstruction_project, regime_thresholds


# -- loops -----------------------------------------------------------------

@dataclass(frozen=True)
class LoopFunction:
    """Complex loop on the core circle, stored by Fourier coefficients.

    ``coefficients[p + p_max]`` multiplies e^{i w_p t}, w_p = 2 pi p / |Z|.
    """

    coefficients: np.ndarray
    circumference: float = 2 * np.pi

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or c.size % 2 != 1:
            raise ValueError("coefficients must be a 1-D array of odd length")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite loop coefficients")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_modes(cls, modes: dict, p_max: int | None = None,
                   circumference: float = 2 * np.pi) -> "LoopFunction":
        P = max([abs(int(p)) for p in modes] + [0]) if p_max is None else p_max
        c = np.zeros(2 * P + 1, complex)
        for p, v in modes.items():
            c[int(p) + P] += v
        return cls(c, circumference)

    @classmethod
    def from_samples(cls, values: np.ndarray, circumference: float = 2 * np.pi) -> "LoopFunction":
        n = len(values)
        fh = np.fft.fft(values) / n
        P = (n - 1) // 2
        p = np.arange(-P, P + 1)
        return cls(fh[p % n], circumference)

    @property
    def p_max(self) -> int:
        return (self.coefficients.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.p_max, self.p_max + 1)

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.modes / self.circumference

    def __getitem__(self, p: int) -> complex:
        return complex(self.coefficients[p + self.p_max]) if abs(p) <= self.p_max else 0j

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.exp(1j * np.multiply.outer(t, self.omega)) @ self.coefficients

    def _new(self, c) -> "LoopFunction":
        return LoopFunction(c, self.circumference)

    def padded(self, p_max: int) -> "LoopFunction":
        if p_max < self.p_max:
            raise ValueError("cannot pad to a smaller p_max")
        k = p_max - self.p_max
        return self._new(np.pad(self.coefficients, (k, k)))

    def __add__(self, other: "LoopFunction") -> "LoopFunction":
        P = max(self.p_max, other.p_max)
        return self._new(self.padded(P).coefficients + other.padded(P).coefficients)

    def __sub__(self, other: "LoopFunction") -> "LoopFunction":
        return self + other.scale(-1)

    def scale(self, c) -> "LoopFunction":
        return self._new(c * self.coefficients)

    def multiplier(self, m: np.ndarray) -> "LoopFunction":
        return self._new(m * self.coefficients)

    def derivative(self, k: int = 1) -> "LoopFunction":
        return self.multiplier((1j * self.omega) ** k)

    def conj(self) -> "LoopFunction":
        """The pointwise complex conjugate loop."""
        return self._new(np.conj(self.coefficients[::-1]))

    def __mul__(self, other: "LoopFunction") -> "LoopFunction":
        return self._new(np.convolve(self.coefficients, other.coefficients))

    def mean(self) -> complex:
        return self[0]

    def norm(self) -> float:
        """L^2 norm over the circle."""
        return float(np.sqrt(self.circumference * np.sum(np.abs(self.coefficients) ** 2)))

    def sobolev_norm(self, s: float) -> float:
        m = (1 + self.omega**2) ** (s / 2)
        return float(np.sqrt(self.circumference * np.sum(np.abs(m * self.coefficients) ** 2)))

    def allclose(self, other: "LoopFunction", rtol=1e-12, atol=1e-14) -> bool:
        P = max(self.p_max, other.p_max)
        return np.allclose(self.padded(P).coefficients, other.padded(P).coefficients, rtol, atol)

    def to_rows(self) -> list[tuple[int, float, float]]:
        return [(int(p), float(c.real), float(c.imag)) for p, c in zip(self.modes, self.coefficients)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "re", "im"])
            w.writerows(self.to_rows())


def hilbert_transform(loop: LoopFunction) -> LoopFunction:
    """Fourier multiplier -i sgn(p); kills constants."""
    return loop.multiplier(-1j * np.sign(loop.modes))


def bessel_multiplier(loop: LoopFunction, power: float = -0.75) -> LoopFunction:
    """(Delta + 1)^power with Delta = -d^2/dt^2."""
    return loop.multiplier((1 + loop.omega**2) ** power)


def deformation_operator_closed(eta: LoopFunction, c: LoopFunction, d: LoopFunction,
                                circumference: float | None = None) -> LoopFunction:
    """-(3|Z|/2) (Delta+1)^{-3/4} T_Phi(eta''), T_Phi(s) = H(c s) - conj(s) d.

    The compact remainder is omitted (leading-order model).
    """
    Z = eta.circumference if circumference is None else circumference
    s = eta.derivative(2)
    T = hilbert_transform(c * s) - s.conj() * d
    return bessel_multiplier(T).scale(-1.5 * Z)


# -- mode-dependent cut-off family -----------------------------------------

def smoothstep_down(y: np.ndarray, deriv: int = 0) -> np.ndarray:
    """C^3 step: 1 for y <= 0, 0 for y >= 1 (septic polynomial in between)."""
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
    inside = (y > 0) & (y < 1)
    if deriv == 0:
        s = 1 - (35 * y**4 - 84 * y**5 + 70 * y**6 - 20 * y**7)
        return np.where(y >= 1, 0.0, s)
    if deriv == 1:
        s = -140 * y**3 * (1 - y) ** 3
    elif deriv == 2:
        s = -420 * y**2 * (1 - y) ** 2 * (1 - 2 * y)
    else:
        raise ValueError("only derivatives up to order 2 are provided")
    return np.where(inside, s, 0.0)


@dataclass(frozen=True)
class ModeCutoffFamily:
    """chi_p(r) = chi(|p| r) chi_{r0}(r).

    chi equals 1 on [0, R0] and 0 beyond 2 R0 with |chi'| <= C/R0, and
    chi_{r0} equals 1 on [0, r0/2] and 0 beyond r0. The p here is the
    angular frequency 2 pi p / |Z| (equal to the mode index when |Z| = 2 pi).
    """

    R0: float = 1.0
    r0: float = 1.0

    def base(self, x, deriv: int = 0) -> np.ndarray:
        return smoothstep_down((np.asarray(x) - self.R0) / self.R0, deriv) / self.R0**deriv

    def outer(self, r, deriv: int = 0) -> np.ndarray:
        a = self.r0 / 2
        return smoothstep_down((np.asarray(r) - a) / a, deriv) / a**deriv

    def profile(self, w: float, r: np.ndarray, deriv: int = 0) -> np.ndarray:
        """d^deriv/dr^deriv of chi_w(r)."""
        w = abs(w)
        out = np.zeros_like(np.asarray(r, dtype=float))
        from math import comb
        for k in range(deriv + 1):
            out = out + comb(deriv, k) * w**k * self.base(w * r, k) * self.outer(r, deriv - k)
        return out


def underline_apply(family: ModeCutoffFamily, eta: LoopFunction, grid: TubeGrid,
                    deriv: int = 0) -> np.ndarray:
    """sum_p chi_p^{(deriv)}(r) eta_p e^{i w_p t} on the grid (complex)."""
    t, _, r = grid.mesh
    out = np.zeros((grid.n_t, 1, grid.n_r), complex)
    for p, w, c in zip(eta.modes, eta.omega, eta.coefficients):
        if c == 0:
            continue
        out = out + c * family.profile(w, r, deriv) * np.exp(1j * w * t)
    return np.broadcast_to(out, grid.shape).copy()


# -- metric variations -----------------------------------------------------

@dataclass(frozen=True)
class MetricPerturbation:
    """Symmetric real tensor field gdot[a, b] in the frame (dt, dx, dy)."""

    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.shape[:2] != (3, 3):
            raise ValueError("metric perturbation needs leading shape (3, 3)")
        if not np.array_equal(g, np.swapaxes(g, 0, 1)):
            raise ValueError("metric perturbation must be symmetric")
        object.__setattr__(self, "g", g)

    @classmethod
    def conformal(cls, f: np.ndarray) -> "MetricPerturbation":
        g = np.zeros((3, 3, *np.shape(f)))
        for a in range(3):
            g[a, a] = 2 * f
        return cls(g)

    def trace(self) -> np.ndarray:
        return self.g[0, 0] + self.g[1, 1] + self.g[2, 2]


def displacement_gradient(eta: LoopFunction, grid: TubeGrid,
                          family: ModeCutoffFamily) -> np.ndarray:
    """Complex derivatives (d_t, d_x, d_y) of X = chi[eta] (X = X1 + i X2)."""
    _, th, _ = grid.mesh
    Xt = underline_apply(family, eta.derivative(1), grid)
    Xr = underline_apply(family, eta, grid, deriv=1)
    return np.stack([Xt, np.cos(th) * Xr, np.sin(th) * Xr])


def pullback_metric_derivative(eta: LoopFunction, grid: TubeGrid,
                               family: ModeCutoffFamily = ModeCutoffFamily()) -> MetricPerturbation:
    """gdot = d/ds (F_{s eta})^* g0 for (t, z) -> (t, z + chi[eta]).

    This is the Lie derivative of the flat metric along the displacement
    (0, Re X, Im X): gdot_ab = d_a X_b + d_b X_a.
    """
    dX = displacement_gradient(eta, grid, family)
    J = np.zeros((3, 3, *grid.shape))  # J[a, b] = d_a X_b with X_t = 0
    J[:, 1] = dX.real
    J[:, 2] = dX.imag
    return MetricPerturbation(J + np.swapaxes(J, 0, 1))


def spinor_cartesian_derivatives(phi: np.ndarray, grid: TubeGrid, h: float = 0.5) -> np.ndarray:
    """(nabla_t, nabla_x, nabla_y) phi for the connection d + i h d theta."""
    _, th, _ = grid.mesh
    dt, dr, dth = covariant_derivatives(phi, grid, h)
    c, s = np.cos(th), np.sin(th)
    return np.stack([dt, c * dr - s * dth, s * dr + c * dth])


# Bourguignon-Gauduchon normalization: B(gdot) phi =
#   -1/2 sum gdot_ij e^i . nabla_j phi + a dTr(gdot) . phi + b div(gdot) . phi
BG_TRACE_COEFF = 0.25
BG_DIV_COEFF = -0.25


def bg_variation(gdot: MetricPerturbation, phi, grid: TubeGrid,
                 trace_coeff: float = BG_TRACE_COEFF,
                 div_coeff: float = BG_DIV_COEFF) -> np.ndarray:
    """First variation of the Dirac operator under a metric change.

    div(gdot)_b = sum_a d_a gdot_ab. The default coefficients (1/4, -1/4)
    reproduce the conformal covariance of the Dirac operator.
    """
    phi = values_of(phi)
    g = gdot.g
    nab = spinor_cartesian_derivatives(phi, grid)  # [j, spin, slot, ...]
    cnab = np.einsum("iab,jbs...->ijas...", GAMMA, nab)  # gamma_i nabla_j phi
    out = -0.5 * np.einsum("ij...,ijas...->as...", g, cnab)
    grads = np.stack([np.stack([cartesian_gradient(g[a, b], grid) for b in range(3)])
                      for a in range(3)])  # grads[a, b, c] = d_c gdot_ab
    dtr = grads[0, 0] + grads[1, 1] + grads[2, 2]
    div = np.stack([sum(grads[a, b, a] for a in range(3)) for b in range(3)])
    form = trace_coeff * dtr + div_coeff * div
    return out + np.einsum("j...,jab,bs...->as...", form, GAMMA, phi)


def conformal_dirac(phi, f: np.ndarray, s: float, grid: TubeGrid) -> np.ndarray:
    """Dirac operator of g_s = (1 + 2 s f) g0 in the fixed trivialization.

    With g_s = e^{2u} g0 the frames scale by e^{-u}, and in the identified
    spinor bundle D_s phi = e^{-u} (D phi + gamma(du) phi).
    """
    phi = values_of(phi)
    u = 0.5 * np.log1p(2 * s * np.asarray(f))
    du = cartesian_gradient(np.broadcast_to(u, grid.shape), grid)
    nab = spinor_cartesian_derivatives(phi, grid)
    d0 = np.einsum("jab,jbs...->as...", GAMMA, nab)
    return np.exp(-u) * (d0 + np.einsum("j...,jab,bs...->as...", du, GAMMA, phi))


def conformal_fd_error(phi, f: np.ndarray, s: float, grid: TubeGrid, **coeffs) -> float:
    """Relative gap between the central difference of D_s and bg_variation."""
    fd = (conformal_dirac(phi, f, s, grid) - conformal_dirac(phi, f, -s, grid)) / (2 * s)
    B = bg_variation(MetricPerturbation.conformal(np.broadcast_to(f, grid.shape)), phi, grid, **coeffs)
    return float(np.linalg.norm(fd - B) / np.linalg.norm(B))


# -- deformation operator --------------------------------------------------

def deformation_operator_assembled(eta: LoopFunction, phi_model, grid: TubeGrid,
                                   family: ModeCutoffFamily = ModeCutoffFamily(),
                                   ell_max: int | None = None) -> ObstructionSpectrum:
    """Obstruction component of the BG variation along the deformation eta."""
    gdot = pullback_metric_derivative(eta, grid, family)
    return obstruction_project(bg_variation(gdot, phi_model, grid), grid, ell_max)


def default_phi_model(grid: TubeGrid) -> np.ndarray:
    """Flat-model harmonic spinor with leading coefficients c = 1, d = 0."""
    return model_harmonic_spinor(grid, 1.0, 0.0)


@dataclass
class DeformationMatrix:
    """Real-linear matrix of the assembled operator on regime modes."""

    modes: np.ndarray
    ells: np.ndarray
    matrix: np.ndarray
    condition: float
    circumference: float
    ell_max: int


def assemble_deformation_matrix(phi_model, grid: TubeGrid, epsilon: float,
                                gamma: float = GAMMA_DEFAULT,
                                family: ModeCutoffFamily = ModeCutoffFamily()) -> DeformationMatrix:
    """Columns are T applied to e^{ipt} and i e^{ipt} for 0 < |p| <= L_med."""
    _, L_med = regime_thresholds(epsilon, gamma)
    L = int(np.floor(L_med))
    if L > grid.n_t // 2 - 1:
        from .errors import ResolutionError
        raise ResolutionError(f"L_med = {L_med:.3g} is not resolved by n_t = {grid.n_t}")
    modes = np.r_[np.arange(-L, 0), np.arange(1, L + 1)]
    cols = []
    for p in modes:
        for unit in (1.0, 1j):
            eta = LoopFunction.from_modes({int(p): unit}, L, grid.circumference)
            sp = deformation_operator_assembled(eta, phi_model, grid, family, L)
            cols.append(np.r_[sp.coefficients.real, sp.coefficients.imag])
    M = np.array(cols).T
    ells = sp.ells
    return DeformationMatrix(modes, ells, M, float(np.linalg.cond(M)), grid.circumference, L)


@dataclass
class DeformationSolution:
    eta: LoopFunction
    residual: float
    condition: float


def solve_deformation(target: ObstructionSpectrum, matrix: DeformationMatrix,
                      max_condition: float = 1e12) -> DeformationSolution:
    """Find eta with T(eta) = target on the low and medium regimes."""
    if not np.isfinite(matrix.condition) or matrix.condition > max_condition:
        raise ObstructedDeformationError(
            f"restricted deformation matrix is singular (condition {matrix.condition:.3g})")
    y = np.array([target[int(l)] for l in matrix.ells])
    rhs = np.r_[y.real, y.imag]
    x, *_ = np.linalg.lstsq(matrix.matrix, rhs, rcond=None)
    coeffs = x[0::2] + 1j * x[1::2]
    eta = LoopFunction.from_modes(dict(zip(matrix.modes.tolist(), coeffs)), matrix.ell_max,
                                  matrix.circumference)
    tn = np.linalg.norm(rhs)
    res = float(np.linalg.norm(matrix.matrix @ x - rhs) / tn) if tn else 0.0
    return DeformationSolution(eta, res, matrix.condition)


# -- measured bounds -------------------------------------------------------

def weight_two_terms(p: int, grid: TubeGrid, family: ModeCutoffFamily = ModeCutoffFamily(),
                     phi=None) -> dict[str, float]:
    """L^2 norms of the weight-2 terms for the single mode eta = e^{ipt}.

    Weight counts t-derivatives on eta plus r-derivatives on chi plus
    covariant derivatives on phi.
    """
    phi = default_phi_model(grid) if phi is None else values_of(phi)
    eta = LoopFunction.from_modes({p: 1.0}, circumference=grid.circumference)
    pw = np.sum(np.abs(phi) ** 2, axis=(0, 1))
    nab = spinor_cartesian_derivatives(phi, grid)
    gw = np.sum(np.abs(nab) ** 2, axis=(0, 1, 2))
    terms = {
        "eta2_chi": (underline_apply(family, eta.derivative(2), grid), pw),
        "eta1_dchi": (underline_apply(family, eta.derivative(1), grid, 1), pw),
        "eta0_ddchi": (underline_apply(family, eta, grid, 2), pw),
        "eta1_chi_dphi": (underline_apply(family, eta.derivative(1), grid), gw),
        "eta0_dchi_dphi": (underline_apply(family, eta, grid, 1), gw),
    }
    return {k: float(np.sqrt(integrate(np.abs(f) ** 2 * w, grid).real)) for k, (f, w) in terms.items()}


def fit_exponent(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
