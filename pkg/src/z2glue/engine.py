"""Alternating-method machinery: parametrix patching, the classical two-step
cycle, the semi-Fredholm three-step cycle, and two reference instances.

Everything here is finite-dimensional linear algebra on flat numpy vectors.
A configuration is ``z = (xi, phi, psi)``: a deformation parameter ``xi``
(empty for classical problems) and the two local corrections, glued into
``u = chi+ phi + chi- psi``. The residual of ``A z = g`` is

    e = L u + dF xi + Q(u) - g,

and each step applies one local parametrix ``P`` through ``z <- z - P e``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConfigError, DivergenceError, ObstructedDeformationError

Vector = np.ndarray
ROUNDOFF = 1e-11
Operator = Callable[[Vector], Vector]


@dataclass
class GluingProblem:
    """Operator data for an alternating solve.

    ``chi_*`` multiply configurations and ``zeta_*`` multiply residuals.
    ``solve_plus``/``solve_minus`` are local inverses returning full-length
    configuration vectors (zero outside their region). The semi-Fredholm
    pieces are all optional: ``obstruction_projector`` (Pi_0 on residuals),
    ``apply_dF`` (xi -> residual) and ``deformation_solver`` which returns xi
    with Pi_0 dF xi = y for y in the range of Pi_0.
    """

    apply_L: Operator
    chi_plus: Vector
    chi_minus: Vector
    zeta_plus: Vector
    zeta_minus: Vector
    solve_plus: Operator
    solve_minus: Operator
    apply_Q: Optional[Operator] = None
    obstruction_projector: Optional[Operator] = None
    deformation_solver: Optional[Operator] = None
    apply_dF: Optional[Operator] = None
    xi_size: int = 0
    band_plus: Optional[Vector] = None
    band_minus: Optional[Vector] = None
    regime_split: Optional[Callable[[Vector], dict]] = None

    def __post_init__(self):
        for name in ("chi_plus", "chi_minus", "zeta_plus", "zeta_minus"):
            v = np.asarray(getattr(self, name), dtype=float)
            if np.any(v < -1e-14) or np.any(v > 1 + 1e-14):
                raise ConfigError(name, "cutoff values must lie in [0, 1]")
            setattr(self, name, v)
        if self.chi_plus.shape != self.chi_minus.shape:
            raise ConfigError("chi_minus", "chi+ and chi- must have equal shapes")
        if self.zeta_plus.shape != self.zeta_minus.shape:
            raise ConfigError("zeta_minus", "zeta+ and zeta- must have equal shapes")
        if not np.allclose(self.zeta_plus + self.zeta_minus, 1.0, atol=1e-12):
            raise ConfigError("zeta_plus", "zeta+ + zeta- must equal 1")
        if self.obstruction_projector is not None:
            v = np.random.default_rng(0).normal(size=self.n_residual)
            p = self.obstruction_projector(v)
            if np.linalg.norm(self.obstruction_projector(p) - p) > 1e-10 * np.linalg.norm(v):
                raise ConfigError("obstruction_projector", "Pi_0 is not idempotent")
        if (self.deformation_solver is None) != (self.apply_dF is None):
            raise ConfigError("deformation_solver", "needs apply_dF and vice versa")

    @property
    def n_config(self) -> int:
        return self.chi_plus.size

    @property
    def n_residual(self) -> int:
        return self.zeta_plus.size

    @property
    def semifredholm(self) -> bool:
        return self.obstruction_projector is not None and self.deformation_solver is not None

    def glue(self, phi: Vector, psi: Vector) -> Vector:
        return self.chi_plus * phi + self.chi_minus * psi

    def apply_A(self, xi: Vector, u: Vector) -> Vector:
        out = self.apply_L(u)
        if self.apply_dF is not None and xi.size:
            out = out + self.apply_dF(xi)
        return out

    def nonlinear(self, u: Vector) -> Vector:
        return self.apply_Q(u) if self.apply_Q is not None else 0.0

    def pi0(self, y: Vector) -> Vector:
        return self.obstruction_projector(y) if self.obstruction_projector is not None else 0 * y


# -- parametrices ------------------------------------------------------------

@dataclass(frozen=True)
class LocalParametrix:
    """One factor P of the cycle, mapping a residual to a correction of z."""

    name: str
    slot: str  # "xi", "phi" or "psi"
    apply: Operator


def cycle_parametrices(problem: GluingProblem, deformation: bool = True) -> list[LocalParametrix]:
    """The factors in cycle order: [P_xi,] P-, P+.

    P_xi = T^{-1} Pi_0 zeta-,  P- = L-^{-1} (1 - Pi_0) zeta-,  P+ = L+^{-1} zeta+,
    the cut-offs chi+- being applied when the corrections are glued.
    """
    sf = problem.obstruction_projector is not None
    steps = []
    if sf and deformation:
        if problem.deformation_solver is None:
            raise ObstructedDeformationError("problem has no deformation solver")
        steps.append(LocalParametrix(
            "deform", "xi", lambda e: problem.deformation_solver(problem.pi0(problem.zeta_minus * e))))

    def minus(e):
        y = problem.zeta_minus * e
        return problem.solve_minus(y - problem.pi0(y) if sf else y)

    steps.append(LocalParametrix("minus", "psi", minus))
    steps.append(LocalParametrix("plus", "phi", lambda e: problem.solve_plus(problem.zeta_plus * e)))
    return steps


def parametrix_patch(problem: GluingProblem) -> Operator:
    """P_1 = chi+ P+ zeta+ + chi- P- zeta-, as a residual -> configuration map."""
    def P1(g):
        return (problem.chi_plus * problem.solve_plus(problem.zeta_plus * g)
                + problem.chi_minus * problem.solve_minus(problem.zeta_minus * g))
    return P1


@dataclass(frozen=True)
class PatchDiagnostic:
    defect_norm: float
    outside_band: float
    input_norm: float

    @property
    def relative_outside(self) -> float:
        return self.outside_band / self.input_norm if self.input_norm else 0.0


def patch_defect(problem: GluingProblem, g: Vector) -> PatchDiagnostic:
    """Measure L P_1 g - g and its mass outside the cut-off derivative bands."""
    P1 = parametrix_patch(problem)
    d = problem.apply_L(P1(g)) - g
    band = _band_union(problem)
    out = float(np.linalg.norm(d[~band])) if band is not None else float(np.linalg.norm(d))
    return PatchDiagnostic(float(np.linalg.norm(d)), out, float(np.linalg.norm(g)))


def _band_union(problem: GluingProblem) -> Optional[np.ndarray]:
    masks = [m for m in (problem.band_plus, problem.band_minus) if m is not None]
    if not masks:
        return None
    return np.logical_or.reduce([np.asarray(m, bool) for m in masks])


def nested_parametrix(problem: GluingProblem, N: int) -> Operator:
    """P_N g: N applications of u <- u - P_1 (L u - g) starting from 0."""
    P1 = parametrix_patch(problem)

    def PN(g):
        u = np.zeros(problem.n_config, dtype=np.result_type(g, float))
        for _ in range(N):
            u = u - P1(problem.apply_L(u) - g)
        return u
    return PN


def operator_matrix(apply: Operator, n: int) -> np.ndarray:
    return np.column_stack([apply(col) for col in np.eye(n)])


def nested_defect_norms(problem: GluingProblem, N_max: int) -> np.ndarray:
    """Spectral norms of L P_N - Id for N = 1..N_max.

    Since L P_N - Id = -(Id - L P_1)^N, one dense matrix suffices; the
    problems here are small enough that the exact 2-norm is cheap.
    """
    P1 = parametrix_patch(problem)
    n = problem.n_residual
    E = np.eye(n) - operator_matrix(lambda g: problem.apply_L(P1(g)), n)
    out, M = [], np.eye(n)
    for _ in range(N_max):
        M = E @ M
        out.append(np.linalg.norm(M, 2))
    return np.array(out)


# -- iteration -----------------------------------------------------------------

@dataclass
class StepRecord:
    cycle: int
    step: str
    residual_norm: float
    ob_component: float
    range_component: float
    delta_estimate: float
    outside_band: float = float("nan")


@dataclass
class IterationState:
    """Snapshot at the start of cycle N."""

    cycle: int
    xi: Vector
    phi: Vector
    psi: Vector
    residual: Vector
    residual_norm: float
    ob_component: float
    range_component: float
    drift: float
    delta_plus: float = float("nan")
    delta_minus: float = float("nan")
    regimes: dict = field(default_factory=dict)

    @property
    def mu(self) -> Vector:
        """Alias for the obstruction part of the correction, i.e. xi."""
        return self.xi


@dataclass
class IterationHistory:
    states: list[IterationState]
    steps: list[StepRecord]
    u: Vector
    xi: Vector

    @property
    def residual_norms(self) -> np.ndarray:
        return np.array([s.residual_norm for s in self.states])

    @property
    def ob_norms(self) -> np.ndarray:
        return np.array([s.ob_component for s in self.states])

    @property
    def range_norms(self) -> np.ndarray:
        return np.array([s.range_component for s in self.states])

    @property
    def max_drift(self) -> float:
        return max((s.drift for s in self.states), default=0.0)

    def steps_named(self, name: str) -> list[StepRecord]:
        return [s for s in self.steps if s.step == name]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["cycle", "step", "residual_norm", "ob_component", "range_component",
                        "delta_estimate"])
            for s in self.steps:
                w.writerow([s.cycle, s.step, repr(s.residual_norm), repr(s.ob_component),
                            repr(s.range_component), repr(s.delta_estimate)])


def _ratio(a: float, b: float) -> float:
    return a / b if b > 0 else 0.0


def _iterate(problem: GluingProblem, g: Vector, N: int, steps: list[LocalParametrix],
             tol: float, track_support: bool) -> IterationHistory:
    g = np.asarray(g, dtype=float)
    if g.shape != (problem.n_residual,):
        raise ConfigError("g", f"expected a vector of length {problem.n_residual}")
    nz = problem.n_config
    z = {"xi": np.zeros(problem.xi_size), "phi": np.zeros(nz), "psi": np.zeros(nz)}

    def u_of(z):
        return problem.glue(z["phi"], z["psi"])

    def fresh(z):
        u = u_of(z)
        return problem.apply_A(z["xi"], u) + problem.nonlinear(u) - g

    def split(e):
        ob = problem.pi0(e)
        return float(np.linalg.norm(ob)), float(np.linalg.norm(e - ob))

    def snapshot(n, e, drift, dp=float("nan"), dm=float("nan")):
        ob, rg = split(e)
        return IterationState(n, z["xi"].copy(), z["phi"].copy(), z["psi"].copy(), e.copy(),
                              float(np.linalg.norm(e)), ob, rg, drift, dp, dm,
                              problem.regime_split(e) if problem.regime_split else {})

    e = fresh(z)
    states = [snapshot(0, e, 0.0)]
    records: list[StepRecord] = []
    scale = max(float(np.linalg.norm(g)), 1e-300)
    growth = 0
    peak = float(np.linalg.norm(e))
    for n in range(1, N + 1):
        start = float(np.linalg.norm(e))
        deltas = {}
        for P in steps:
            before = float(np.linalg.norm(e))
            dz = -P.apply(e)
            u_old = u_of(z)
            z[P.slot] = z[P.slot] + dz
            # tracked update; the from-scratch residual is compared once per cycle
            if P.slot == "xi":
                de = problem.apply_dF(dz)
            else:
                cut = problem.chi_plus if P.slot == "phi" else problem.chi_minus
                de = problem.apply_L(cut * dz)
            if problem.apply_Q is not None:
                de = de + problem.nonlinear(u_of(z)) - problem.nonlinear(u_old)
            e = e + de
            after = float(np.linalg.norm(e))
            deltas[P.name] = _ratio(after, before)
            ob, rg = split(e)
            outside = float("nan")
            if track_support:
                band = problem.band_minus if P.name == "minus" else problem.band_plus
                if band is not None:
                    outside = _ratio(float(np.linalg.norm(e[~np.asarray(band, bool)])), after)
            records.append(StepRecord(n, P.name, after, ob, rg, deltas[P.name], outside))
        exact = fresh(z)
        drift = float(np.linalg.norm(exact - e)) / scale
        e = exact
        end = float(np.linalg.norm(e))
        states.append(snapshot(n, e, drift, deltas.get("plus", np.nan), deltas.get("minus", np.nan)))
        records.append(StepRecord(n, "cycle", end, states[-1].ob_component,
                                  states[-1].range_component, _ratio(end, start)))
        peak = max(peak, end)
        # growth at the round-off floor is not divergence
        growth = growth + 1 if end > start * (1 + 1e-9) and end > ROUNDOFF * peak else 0
        hist = IterationHistory(states, records, u_of(z), z["xi"].copy())
        if growth >= 3:
            raise DivergenceError(f"residual grew for 3 consecutive cycles (cycle {n})",
                                  hist.residual_norms)
        if end <= tol * scale:
            break
    return IterationHistory(states, records, u_of(z), z["xi"].copy())


def alternate_classic(problem: GluingProblem, g: Vector, N: int, tol: float = 0.0) -> IterationHistory:
    """N two-step cycles: solve on the minus region, then on the plus region."""
    if problem.obstruction_projector is not None:
        raise ConfigError("obstruction_projector", "classical mode needs a problem without Pi_0")
    return _iterate(problem, g, N, cycle_parametrices(problem), tol, track_support=True)


def alternate_semifredholm(problem: GluingProblem, g: Vector, N: int, tol: float = 0.0,
                           deformation: bool = True) -> IterationHistory:
    """N three-step cycles: deform, solve on the minus region, solve on the plus region.

    With ``deformation=False`` step (0) is skipped, which exposes the
    obstruction component that the minus-solve cannot reach.
    """
    if problem.obstruction_projector is None:
        raise ConfigError("obstruction_projector", "semi-Fredholm mode needs Pi_0")
    return _iterate(problem, g, N, cycle_parametrices(problem, deformation), tol,
                    track_support=False)


@dataclass(frozen=True)
class RateFit:
    delta: float
    r_squared: float
    warning: bool
    cycles: int


def contraction_rate(history, skip: int = 0, floor: float = ROUNDOFF) -> RateFit:
    """Least-squares fit of log ||e_N|| against N; delta = exp(slope).

    ``history`` is an :class:`IterationHistory` or a sequence of norms. The
    first ``skip`` cycles are left out (the first classical cycle only
    establishes the support condition), and points below ``floor`` times
    the largest norm are dropped as round-off. The warning flag is set when
    the kept norms are not strictly decreasing.
    """
    norms = history.residual_norms if isinstance(history, IterationHistory) else np.asarray(history, float)
    norms = norms[skip:]
    if norms.size < 4:
        raise ValueError("contraction_rate needs at least 4 cycles")
    if norms.max() == 0:
        return RateFit(0.0, 1.0, False, int(norms.size))
    keep = norms > floor * norms.max()
    y = np.log(norms[keep])
    x = np.arange(norms.size)[keep]
    if x.size < 2:
        return RateFit(0.0, 1.0, False, int(norms.size))
    slope, icpt = np.polyfit(x, y, 1)
    fit = slope * x + icpt
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - fit) ** 2)) / ss if ss > 0 else 1.0
    warn = bool(np.any(np.diff(norms[keep]) >= 0))
    if warn:
        warnings.warn("residual history is not strictly decreasing", RuntimeWarning, stacklevel=2)
    return RateFit(float(np.exp(slope)), r2, warn, int(norms.size))


def telescoping_defect(problem: GluingProblem, N: int, v: Vector, deformation: bool = True) -> float:
    """Relative gap in  Id - P_{kN} A = (Id - P_k A)^N  on the vector v.

    Here A z = dF xi + L(chi+ phi + chi- psi) on z = (xi, phi, psi), k is the
    number of factors per cycle, and P_j follows P_{j+1} = P_j + P(Id - A P_j)
    with P cycling through :func:`cycle_parametrices`.
    """
    steps = cycle_parametrices(problem, deformation)
    sizes = {"xi": problem.xi_size, "phi": problem.n_config, "psi": problem.n_config}
    order = ("xi", "phi", "psi")
    offs = np.cumsum([0] + [sizes[s] for s in order])

    def A(z):
        return problem.apply_A(z[offs[0]:offs[1]], problem.glue(z[offs[1]:offs[2]], z[offs[2]:offs[3]]))

    def embed(slot, x):
        z = np.zeros(offs[-1])
        i = order.index(slot)
        z[offs[i]:offs[i + 1]] = x
        return z

    def P_apply(count, y):
        z = np.zeros(offs[-1])
        for j in range(count):
            P = steps[j % len(steps)]
            z = z + embed(P.slot, P.apply(y - A(z)))
        return z

    k = len(steps)
    lhs = v - P_apply(k * N, A(v))
    rhs = v.copy()
    for _ in range(N):
        rhs = rhs - P_apply(k, A(rhs))
    return float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(v), 1e-300))


# -- reference instances ---------------------------------------------------------

def stencil_band(chi: Vector) -> np.ndarray:
    """Nodes whose 3-point stencil sees chi vary: the support of [L, chi]."""
    pad = np.r_[chi[0], chi, chi[-1]]
    win = np.stack([pad[:-2], pad[1:-1], pad[2:]])
    return np.ptp(win, axis=0) > 0


def _ramp(x, a, b):
    return np.clip((x - a) / (b - a), 0.0, 1.0)


@dataclass(frozen=True)
class Layout:
    """Interval layout: chi- ramps up on [m - w, m - w/2], chi+ ramps down on
    [m + w/2, m + w], and the indicator partition zeta switches at m."""

    n: int
    overlap: float
    midpoint: float = 0.5

    def __post_init__(self):
        if self.n < 8:
            raise ConfigError("n", "need at least 8 interior nodes")
        h = 1.0 / (self.n + 1)
        w, m = self.overlap, self.midpoint
        if not (4 * h < w / 2 and m - w > 2 * h and m + w < 1 - 2 * h):
            raise ConfigError("overlap", f"overlap {w} is not resolved by n = {self.n} or leaves [0, 1]")

    @property
    def x(self) -> np.ndarray:
        return np.arange(1, self.n + 1) / (self.n + 1)

    def cutoffs(self):
        x, w, m = self.x, self.overlap, self.midpoint
        chi_minus = _ramp(x, m - w, m - w / 2)
        chi_plus = 1.0 - _ramp(x, m + w / 2, m + w)
        zeta_plus = (x < m).astype(float)
        return chi_plus, chi_minus, zeta_plus, 1.0 - zeta_plus

    def regions(self):
        """Index masks of the plus (left) and minus (right) solve regions."""
        chi_plus, chi_minus, _, _ = self.cutoffs()
        grow = lambda c: np.convolve(c > 0, np.ones(3), "same") > 0
        return grow(chi_plus), grow(chi_minus)


def _tridiag_solver(n: int, mass: float, mask: np.ndarray) -> Operator:
    """Dirichlet inverse of -D^2 + m^2 on the contiguous index set ``mask``."""
    idx = np.flatnonzero(mask)
    if idx.size == 0 or np.any(np.diff(idx) != 1):
        raise ConfigError("overlap", "solve regions must be contiguous")
    h2 = (n + 1) ** 2
    k = idx.size
    ab = np.zeros((3, k))
    ab[0, 1:] = -h2
    ab[1, :] = 2 * h2 + mass**2
    ab[2, :-1] = -h2

    def solve(f):
        out = np.zeros(n)
        out[idx] = solve_banded((1, 1), ab, f[:n][idx])
        return out
    return solve


def _tridiag_apply(n: int, mass: float) -> Operator:
    h2 = (n + 1) ** 2

    def apply(u):
        out = (2 * h2 + mass**2) * u
        out[1:] -= h2 * u[:-1]
        out[:-1] -= h2 * u[1:]
        return out
    return apply


def schwarz_poisson(n: int = 255, overlap: float = 0.2) -> tuple[GluingProblem, np.ndarray]:
    """-u'' = 1 on [0, 1] with u(0) = u(1) = 0, split into two overlapping intervals.

    The 3-point scheme is exact on quadratics, so the discrete solution is
    x(1 - x)/2 at the nodes; use odd ``n`` to have a node at x = 1/2.
    """
    lay = Layout(n, overlap)
    chi_plus, chi_minus, zeta_plus, zeta_minus = lay.cutoffs()
    plus, minus = lay.regions()
    prob = GluingProblem(
        apply_L=_tridiag_apply(n, 0.0),
        chi_plus=chi_plus, chi_minus=chi_minus, zeta_plus=zeta_plus, zeta_minus=zeta_minus,
        solve_plus=_tridiag_solver(n, 0.0, plus), solve_minus=_tridiag_solver(n, 0.0, minus),
        band_plus=stencil_band(chi_plus), band_minus=stencil_band(chi_minus),
    )
    return prob, np.ones(n)


@dataclass(frozen=True)
class SyntheticSF:
    """Dense matrices of the synthetic semi-Fredholm instance, for oracles."""

    problem: GluingProblem
    L: np.ndarray
    dF: np.ndarray
    T: np.ndarray
    k: int
    k_prime: int


def synthetic_semifredholm(n: int = 127, k: int = 4, k_prime: int = 4, coupling: float = 0.1,
                           mass: float = 1.0, overlap: float = 0.2, seed: int = 0) -> SyntheticSF:
    """Block instance with unknowns (xi in R^k, u in R^n) and equations in R^{n + k'}.

    The grid rows carry -u'' + m^2 u; the last k' rows are obstruction
    channels on which L vanishes, so Pi_0 is the coordinate projection onto
    them. dF xi = (coupling * B xi, T xi) with T = Pi_0 dF of full rank k'
    and B supported in the minus region (the loss-of-regularity coupling).
    """
    if not 0 < k_prime <= k:
        raise ConfigError("k_prime", "need 0 < k' <= k")
    rng = np.random.default_rng(seed)
    lay = Layout(n, overlap)
    chi_plus, chi_minus, zeta_plus, zeta_minus = lay.cutoffs()
    plus, minus = lay.regions()
    # channels belong to the minus side of the residual partition
    zp = np.r_[zeta_plus, np.zeros(k_prime)]
    zm = 1.0 - zp

    Lg = _tridiag_apply(n, mass)
    Lmat = np.vstack([operator_matrix(Lg, n), np.zeros((k_prime, n))])
    Q1, _ = np.linalg.qr(rng.normal(size=(k_prime, k_prime)))
    Q2, _ = np.linalg.qr(rng.normal(size=(k, k)))
    T = Q1 @ np.c_[np.diag(np.linspace(1.0, 2.0, k_prime)), np.zeros((k_prime, k - k_prime))] @ Q2.T
    B = rng.normal(size=(n, k)) * (zeta_minus * chi_minus)[:, None]
    B /= np.linalg.norm(B, 2)
    dF = np.vstack([coupling * B, T])
    if np.linalg.matrix_rank(T) < k_prime:
        raise ObstructedDeformationError("T = Pi_0 dF is not surjective")
    T_pinv = np.linalg.pinv(T)

    def pi0(y):
        out = np.zeros_like(y)
        out[n:] = y[n:]
        return out

    solve_plus = _tridiag_solver(n, mass, plus)
    solve_minus = _tridiag_solver(n, mass, minus)
    prob = GluingProblem(
        apply_L=lambda u: Lmat @ u,
        chi_plus=chi_plus, chi_minus=chi_minus, zeta_plus=zp, zeta_minus=zm,
        solve_plus=solve_plus, solve_minus=solve_minus,
        obstruction_projector=pi0,
        deformation_solver=lambda y: T_pinv @ y[n:],
        apply_dF=lambda xi: dF @ xi,
        xi_size=k,
        band_plus=np.r_[stencil_band(chi_plus), np.zeros(k_prime, bool)],
        band_minus=np.r_[stencil_band(chi_minus), np.zeros(k_prime, bool)],
    )
    return SyntheticSF(prob, Lmat, dF, T, k, k_prime)


@dataclass(frozen=True)
class ExcisionReport:
    coker_plus: int
    coker_minus: int
    coker_neck: int
    coker_patched: int

    @property
    def consistent(self) -> bool:
        return self.coker_patched == self.coker_plus + self.coker_minus - self.coker_neck


def excision_ranks(sf: SyntheticSF, overlap: float = 0.2, tol: float = 1e-9) -> ExcisionReport:
    """Cokernel dimensions by rank computation on the synthetic instance.

    L+ and the neck operator are Dirichlet problems on the plus region and
    on the overlap; L- is the minus-region operator together with the
    channel rows. The patched operator is L restricted to the image of the
    parametrices, i.e. L P_1.
    """
    prob = sf.problem
    n, kp = prob.n_config, sf.k_prime
    lay = Layout(n, overlap)
    plus, minus = lay.regions()
    neck = plus & minus

    def coker(M):
        return M.shape[0] - np.linalg.matrix_rank(M, tol=tol * max(np.linalg.norm(M, 2), 1.0))

    G = sf.L[:n]
    Lp = G[np.ix_(plus, plus)]
    Lm = np.vstack([G[np.ix_(minus, minus)], np.zeros((kp, minus.sum()))])
    Ln = G[np.ix_(neck, neck)]
    P1 = parametrix_patch(prob)
    LP1 = operator_matrix(lambda y: sf.L @ P1(y), prob.n_residual)
    return ExcisionReport(coker(Lp), coker(Lm), coker(Ln), coker(LP1))
