"""The singular Dirac operator on the model tube, weighted norms, the
linearized Seiberg-Witten operator and a constrained least-squares solver.

In the tube trivialization the operator is

    D = [[i d_t, -2 d], [2 dbar, -i d_t]] + (h/r) [[0, -e^{-i theta}], [-e^{i theta}, 0]]

with 2 dbar = e^{i theta}(d_r + (i/r) d_theta), 2 d = e^{-i theta}(d_r - (i/r) d_theta)
and h = 1/2, coming from the connection d + (i/2) d theta. It acts the same
way on both quaternion slots and commutes with the real structure.

Fourier modes decouple: for t-frequency omega and theta-mode k the pair
(alpha_k, beta_{k+1}) obeys a 2x2 radial system, which is how both the
forward map and the solver are implemented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg as sla

from .clifford import FormFiber, clifford_mul, moment_map, values_of
from .errors import ConfigError, SingularParameterError, SolverError
from .geometry import (TubeGrid, d_r, d_r_edge,
                       integrate, spectral_derivative, weight_r_eps)


@dataclass(frozen=True)
class DiracModelParams:
    """``holonomy_coefficient`` is h in the h/r vertex term (1/2 for the
    connection d + (i/2) d theta)."""

    holonomy_coefficient: float = 0.5
    include_dt: bool = True

    def __post_init__(self):
        if not self.holonomy_coefficient > 0:
            raise ConfigError("holonomy_coefficient", "must be positive")


@dataclass(frozen=True)
class WeightedNormSpec:
    nu: float = 0.0
    kind: Literal["edge_h1", "l2"] = "l2"
    weight_function: Literal["r", "r_eps"] = "r"
    epsilon: float = 1e-2
    kappa: float = 1.0

    def __post_init__(self):
        if self.kind not in ("edge_h1", "l2"):
            raise ConfigError("kind", f"unknown norm kind {self.kind!r}")
        if self.weight_function not in ("r", "r_eps"):
            raise ConfigError("weight_function", f"unknown weight {self.weight_function!r}")
        if not (-0.5 < self.nu <= 0.5 or self.nu == -1):
            raise ConfigError("nu", f"must lie in (-1/2, 1/2] or equal -1, got {self.nu!r}")

    def density(self, grid: TubeGrid) -> np.ndarray:
        """Radial weight rho^(-2 nu) (as a function of r only)."""
        if self.weight_function == "r":
            rho = grid.r
        else:
            rho = weight_r_eps(grid, self.epsilon, self.kappa)[0, 0]
        return rho ** (-2 * self.nu)


def _spectral_labels(grid: TubeGrid) -> tuple[np.ndarray, np.ndarray]:
    """Real t-frequencies and theta-labels with Nyquist slots zeroed."""
    return grid.dt_symbol.imag, grid.dtheta_symbol.imag


def dirac_apply(field, grid: TubeGrid, params: DiracModelParams = DiracModelParams()) -> np.ndarray:
    """Apply D to a spinor field of shape (2, 2, n_t, n_theta, n_r)."""
    v = values_of(field)
    if v.shape != (2, 2, *grid.shape):
        raise ValueError(f"field shape {v.shape} does not match grid {(2, 2, *grid.shape)}")
    h = params.holonomy_coefficient
    w, kap = _spectral_labels(grid)
    if not params.include_dt:
        w = np.zeros_like(w)
    w = w[:, None, None]
    kap = kap[:, None]
    kap1 = np.roll(kap, -1, axis=0)
    r = grid.r
    F = np.fft.fft2(v, axes=(-3, -2))
    a = F[0]
    B = np.roll(F[1], -1, axis=-2)
    out_a = -w * a - d_r_edge(B, grid) - (kap1 + h) * B / r
    out_b = d_r_edge(a, grid) - (kap + h) * a / r + w * B
    out = np.stack([out_a, np.roll(out_b, 1, axis=-2)])
    return np.fft.ifft2(out, axes=(-3, -2))


def inner(f, g, grid: TubeGrid, density=None) -> complex:
    """Complex L^2 pairing <f, g> = int sum conj(g) f dV (linear in f)."""
    prod = np.sum(values_of(f) * np.conj(values_of(g)), axis=(0, 1))
    if density is not None:
        prod = prod * density
    return complex(integrate(prod, grid))


def covariant_derivatives(field, grid: TubeGrid, h: float = 0.5):
    """(nabla_t, nabla_r, r^{-1} nabla_theta) for the connection d + i h d theta."""
    v = values_of(field)
    dt = spectral_derivative(v, grid, "t")
    dr = d_r_edge(v, grid)
    dth = (spectral_derivative(v, grid, "theta") + 1j * h * v) / grid.r
    return dt, dr, dth


def weighted_norm(field, spec: WeightedNormSpec, grid: TubeGrid) -> float:
    """Weighted L^2 norm r^nu L^2 (``l2``) or r^{1+nu} H^1_e (``edge_h1``)."""
    v = values_of(field)
    rho = spec.density(grid)
    if spec.kind == "l2":
        dens = np.sum(np.abs(v) ** 2, axis=tuple(range(v.ndim - 3)))
    else:
        parts = covariant_derivatives(v, grid)
        dens = sum(np.sum(np.abs(p) ** 2, axis=(0, 1)) for p in parts)
        dens = dens + np.sum(np.abs(v) ** 2, axis=(0, 1)) / grid.r ** 2
    return float(np.sqrt(max(integrate(dens * rho, grid).real, 0.0)))


# -- linearized Seiberg-Witten operator ------------------------------------

@dataclass(frozen=True)
class FormField:
    """Extended form field: a0 of grid shape and a1 of shape (3, *grid)."""

    a0: np.ndarray
    a1: np.ndarray

    @classmethod
    def zeros(cls, grid: TubeGrid) -> "FormField":
        return cls(np.zeros(grid.shape, complex), np.zeros((3, *grid.shape), complex))

    def as_fiber(self) -> FormFiber:
        return FormFiber(self.a0, self.a1)


@dataclass(frozen=True)
class LinearizedSWParams:
    epsilon: float
    background_spinor: np.ndarray
    background_connection: FormField | None = None
    dirac: DiracModelParams = DiracModelParams()

    def __post_init__(self):
        if self.epsilon == 0:
            raise SingularParameterError("epsilon = 0: the renormalized operator is singular")
        if not self.epsilon > 0:
            raise ConfigError("epsilon", "must be positive")


def cartesian_gradient(f: np.ndarray, grid: TubeGrid) -> np.ndarray:
    """(d_t, d_x, d_y) of a scalar field via the polar chain rule."""
    _, th, r = grid.mesh
    fr = d_r(f, grid)
    fth = spectral_derivative(f, grid, "theta") / r
    c, s = np.cos(th), np.sin(th)
    return np.stack([spectral_derivative(f, grid, "t"), c * fr - s * fth, s * fr + c * fth])


def form_operator(a: FormField, grid: TubeGrid) -> FormField:
    """(a0, a1) -> (-d* a1, -d a0 + *d a1) on the flat tube."""
    ga1 = np.stack([cartesian_gradient(a.a1[j], grid) for j in range(3)])  # [comp, deriv]
    div = ga1[0, 0] + ga1[1, 1] + ga1[2, 2]
    curl = np.stack([
        ga1[2, 1] - ga1[1, 2],
        ga1[0, 2] - ga1[2, 0],
        ga1[1, 0] - ga1[0, 1],
    ])
    return FormField(div, -cartesian_gradient(a.a0, grid) + curl)


def moment_derivative(phi: np.ndarray, Phi: np.ndarray) -> FormFiber:
    """Derivative of the moment map at Phi in direction phi.

    The 0-form part is the gauge-fixing term i<i Phi, phi>; the 1-form part
    is d/ds mu_1(Phi + s phi) = 2 mu_1(phi, Phi). This is the formal adjoint
    of a -> gamma(a) Phi.
    """
    m_fwd = moment_map(phi, Phi)
    m_rev = moment_map(Phi, phi)
    return FormFiber(m_rev.a0, 2 * m_fwd.a1)


def linearized_sw_apply(phi, a: FormField, grid: TubeGrid, params: LinearizedSWParams):
    """The block operator [[D_A, gamma(.)Phi/eps], [dmu_Phi(.)/eps, d-block]]."""
    phi = values_of(phi)
    Phi = values_of(params.background_spinor)
    eps = params.epsilon
    top = dirac_apply(phi, grid, params.dirac)
    if params.background_connection is not None:
        top = top + clifford_mul(params.background_connection.as_fiber(), phi)
    top = top + clifford_mul(a.as_fiber(), Phi) / eps
    mu = moment_derivative(phi, Phi)
    da = form_operator(a, grid)
    return top, FormField(mu.a0 / eps + da.a0, mu.a1 / eps + da.a1)


def form_inner(a: FormField, b: FormField, grid: TubeGrid) -> float:
    dens = np.conj(b.a0) * a.a0 + np.sum(np.conj(b.a1) * a.a1, axis=0)
    return float(integrate(dens, grid).real)


# -- solver ----------------------------------------------------------------

@dataclass
class DiracSolution:
    u: np.ndarray
    residual: np.ndarray  # D u - rhs with the forward (node) discretization
    residual_norm: float  # minimized weighted residual of the solver's scheme
    rhs_norm: float
    solution_norms: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    @property
    def relative_residual(self) -> float:
        return self.residual_norm / self.rhs_norm if self.rhs_norm else 0.0


class _BoxScheme:
    """Midpoint (box) discretization of the radial block systems.

    Works with the conjugated unknowns A = r^{1/2} alpha, B = r^{1/2} beta,
    in which the block equations read

        -w A - B' - (k_b + h - 1/2) B / r = r^{1/2} f_alpha
         A' - (k_a + h + 1/2) A / r + w B = r^{1/2} f_beta

    Equations sit at cell midpoints, so there are no odd-even modes. The
    outer value is fixed to zero. With ``axis_regular`` a node at r = 0
    carrying A = B = 0 is prepended: that is the r^{1+nu} H^1_e domain
    condition, which excludes the r^{-1/2} profiles.
    """

    def __init__(self, grid: TubeGrid, spec: WeightedNormSpec, h: float):
        r = grid.r
        self.axis = spec.nu > -0.5
        R = np.r_[0.0, r] if self.axis else r.copy()
        nR = R.size
        self.R = R
        self.mid = (R[:-1] + R[1:]) / 2
        dR = np.diff(R)
        nm = self.mid.size
        Av = np.zeros((nm, nR))
        Df = np.zeros((nm, nR))
        i = np.arange(nm)
        Av[i, i] = Av[i, i + 1] = 0.5
        Df[i, i] = -1 / dR
        Df[i, i + 1] = 1 / dR
        self.Av_full = Av
        lo = 1 if self.axis else 0
        self.unknown = np.arange(lo, nR - 1)  # outer node fixed to zero
        self.Av = Av[:, self.unknown]
        self.Df = Df[:, self.unknown]
        self.h = h
        self.node_of_unknown = self.unknown - lo  # index into grid.r
        cell = (grid.circumference / grid.n_t) * (2 * np.pi / grid.n_theta)
        if spec.weight_function == "r":
            rho = self.mid
        else:
            rho = np.sqrt(spec.kappa**2 * spec.epsilon ** (4 / 3) + self.mid**2)
        self.row_w = np.tile(dR * rho ** (-2 * spec.nu), 2) * cell
        ru = r[self.node_of_unknown]
        self.mass = np.tile(grid.radial_weights[self.node_of_unknown] / ru, 2) * cell
        self.sqrt_r = np.sqrt(r)
        self._cache = {}

    def matrix(self, w: float, k_a: float, k_b: float) -> np.ndarray:
        key = (w, k_a, k_b)
        if key not in self._cache:
            m, h, Av, Df = self.mid, self.h, self.Av, self.Df
            top = np.hstack([-w * Av, -Df - ((k_b + h - 0.5) / m)[:, None] * Av])
            bot = np.hstack([Df - ((k_a + h + 0.5) / m)[:, None] * Av, w * Av])
            self._cache[key] = np.vstack([top, bot])
        return self._cache[key]

    def rhs(self, f_a: np.ndarray, f_b: np.ndarray) -> np.ndarray:
        """Midpoint values of r^{1/2} f for both rows; f has trailing radial axis."""
        out = []
        for fc in (f_a, f_b):
            g = fc * self.sqrt_r
            if self.axis:
                r = self.R[1:]
                g0 = g[..., :1] - r[0] * (g[..., 1:2] - g[..., :1]) / (r[1] - r[0])
                g = np.concatenate([g0, g], axis=-1)
            out.append(g @ self.Av_full.T)
        return np.concatenate(out, axis=-1)

    def to_nodes(self, x: np.ndarray, n_r: int) -> tuple[np.ndarray, np.ndarray]:
        nu = self.unknown.size
        A = np.zeros((*x.shape[:-1], n_r), complex)
        B = np.zeros_like(A)
        A[..., self.node_of_unknown] = x[..., :nu]
        B[..., self.node_of_unknown] = x[..., nu:]
        return A / self.sqrt_r, B / self.sqrt_r

    def from_nodes(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        s = self.sqrt_r[self.node_of_unknown]
        return np.concatenate([a[..., self.node_of_unknown] * s,
                               b[..., self.node_of_unknown] * s], axis=-1)


def solve_dirac(
    rhs,
    spec: WeightedNormSpec,
    grid: TubeGrid,
    orthogonality=None,
    params: DiracModelParams = DiracModelParams(),
    tau: float = 1e-10,
    refine_steps: int = 3,
    tol: float = 1e-8,
) -> DiracSolution:
    """Weighted least squares min ||D u - rhs||_{r^nu L^2} with u(r_out) = 0.

    The domain follows the weight: for nu > -1/2 the solution is kept in
    r^{1+nu} H^1_e by an axis condition, while nu = -1 uses the enlarged
    domain. Each Fourier block is a small dense problem (see
    :class:`_BoxScheme`); a relative Tikhonov term ``tau`` in the L^2 metric
    conditions the normal equations, which are solved by Cholesky with
    iterative refinement.

    ``orthogonality`` (a spinor field c) imposes <u, c> = 0 by projecting the
    unconstrained minimizer in the metric of the normal equations.
    """
    f = values_of(rhs)
    if f.shape != (2, 2, *grid.shape):
        raise ValueError("rhs shape does not match grid")
    n = grid.n_r
    box = _BoxScheme(grid, spec, params.holonomy_coefficient)
    w, kap = _spectral_labels(grid)
    if not params.include_dt:
        w = np.zeros_like(w)

    # unitary-scaled Fourier coefficients so that block sums reproduce integrals
    scale = np.sqrt(grid.n_t * grid.n_theta)
    F = np.fft.fft2(f, axes=(-3, -2)) / scale
    Fa, FB = F[0], np.roll(F[1], -1, axis=-2)  # block (p, k) pairs alpha_k with beta_{k+1}
    if orthogonality is not None:
        C = np.fft.fft2(values_of(orthogonality), axes=(-3, -2)) / scale
        Ca, CB = C[0], np.roll(C[1], -1, axis=-2)

    Ua = np.zeros_like(Fa)
    UB = np.zeros_like(FB)
    history: list[float] = []
    solved = {}
    res_sq = 0.0
    rhs_sq = 0.0
    for ip in range(grid.n_t):
        for ik in range(grid.n_theta):
            g = box.rhs(Fa[:, ip, ik], FB[:, ip, ik])  # (2 slot, rows)
            rhs_sq += float(np.sum(box.row_w * np.abs(g) ** 2))
            q = None
            if orthogonality is not None:
                q = box.from_nodes(Ca[:, ip, ik], CB[:, ip, ik]) * box.mass
                if not np.any(q):
                    q = None
            if not np.any(g) and q is None:
                continue
            A = box.matrix(w[ip], kap[ik], kap[(ik + 1) % grid.n_theta])
            AW = A.conj().T * box.row_w
            G = AW @ A
            G[np.diag_indices_from(G)] += tau * np.trace(G).real / box.mass.sum() * box.mass
            b = AW @ g.T
            try:
                cho = sla.cho_factor(G)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"normal matrix not positive definite in block ({ip}, {ik})",
                                  history) from exc
            x = sla.cho_solve(cho, b)
            bn = max(float(np.linalg.norm(b)), 1e-300)
            for _ in range(refine_steps):
                rel = float(np.linalg.norm(b - G @ x)) / bn
                history.append(rel)
                if rel < 1e-14:
                    break
                x = x + sla.cho_solve(cho, b - G @ x)
            rel = float(np.linalg.norm(b - G @ x)) / bn
            if not np.all(np.isfinite(x)) or rel > tol:
                history.append(rel)
                raise SolverError(f"least-squares solve did not converge in block ({ip}, {ik}): "
                                  f"relative normal residual {rel:.2e}", history)
            solved[ip, ik] = (A, g, x.T, cho, q)

    if orthogonality is not None:
        num = 0j
        den = 0j
        for A, g, x, cho, q in solved.values():
            if q is None:
                continue
            y = sla.cho_solve(cho, q.T).T
            num += np.sum(np.conj(q) * x)
            den += np.sum(np.conj(q) * y)
        lam = num / den if abs(den) > 0 else 0.0
        for key, (A, g, x, cho, q) in solved.items():
            if q is not None:
                x = x - lam * sla.cho_solve(cho, q.T).T
                solved[key] = (A, g, x, cho, q)

    for (ip, ik), (A, g, x, cho, q) in solved.items():
        Ua[:, ip, ik], UB[:, ip, ik] = box.to_nodes(x, n)
        res = x @ A.T - g
        res_sq += float(np.sum(box.row_w * np.abs(res) ** 2)) - float(
            np.sum(box.row_w * np.abs(g) ** 2))

    U = np.stack([Ua, np.roll(UB, 1, axis=-2)])
    u = np.fft.ifft2(U * scale, axes=(-3, -2))
    residual_norm = float(np.sqrt(max(rhs_sq + res_sq, 0.0)))
    l2 = WeightedNormSpec(spec.nu, "l2", spec.weight_function, spec.epsilon, spec.kappa)
    h1 = WeightedNormSpec(spec.nu, "edge_h1", spec.weight_function, spec.epsilon, spec.kappa)
    Du = dirac_apply(u, grid, params)
    return DiracSolution(
        u=u,
        residual=Du - f,
        residual_norm=residual_norm,
        rhs_norm=float(np.sqrt(rhs_sq)),
        solution_norms={
            "l2": weighted_norm(u, l2, grid),
            "edge_h1": weighted_norm(u, h1, grid),
            "image_l2": weighted_norm(Du, l2, grid),
        },
        history=history,
    )


# -- exact model profiles --------------------------------------------------

def model_harmonic_spinor(grid: TubeGrid, c: complex = 1.0, d: complex = 0.0) -> np.ndarray:
    """Exact flat-model harmonic spinor (1 + sigma)/2 of r^{1/2}(c, d e^{-i theta}).

    ``c`` and ``d`` are constants; the profile is annihilated by D exactly.
    """
    from .clifford import real_structure

    _, th, r = grid.mesh
    base = np.zeros((2, 2, *grid.shape), complex)
    base[0, 0] = c * np.sqrt(r)
    base[1, 0] = d * np.exp(-1j * th) * np.sqrt(r)
    return (base + real_structure(base, th)) / 2
