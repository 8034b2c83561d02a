"""Ground states by Nehari-projected gradient descent with a Newton tail.

The solver minimizes the action over the Nehari manifold.  Far below zero
frequency the physical field is too narrow for the trap-scale basis, so
the solve runs in the weak-trap picture (an exactly equivalent problem on
an O(1) scale) and maps back; everything else runs in physical variables
on a box stretched so the axial tail fits.

The full-space Hessian at a ground state has exactly one negative
direction in the symmetric sector, so the Newton refinement solves its
(indefinite, self-adjoint) linear systems with MINRES; iterates stay in
the even-in-z, radial sector by construction, which freezes the axial
translation invariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh, lobpcg, minres

from .core import Field, ModelParams
from .errors import (CollapsedToZero, EigsNotConverged, NearSingular,
                     NotConverged, ZeroField)
from .functionals import report
from .grid import DEFAULT_K, DEFAULT_LZ, DEFAULT_MZ, Discretization, build
from .limits import free_soliton_field, reference_profile, soliton_1d, planar_ground_mode
from .scaling import branch_derivative_from_v, from_v, to_v

# Below this frequency the solve moves to the weak-trap picture.
FAR_SWITCH = -6.0


@dataclass(frozen=True)
class Resolution:
    K: int = DEFAULT_K
    Mz: int = DEFAULT_MZ
    Lz: float = DEFAULT_LZ
    oversample: int = 2


@dataclass(frozen=True)
class SolverOptions:
    tol_grad: float = 1e-9        # absolute L^2 norm of the action gradient
    tol_nehari: float = 1e-10     # relative to int |u|^p
    max_iter: int = 5000
    newton_switch: float = 1e-3
    max_newton: int = 50
    collapse_mass: float = 1e-12


@dataclass(frozen=True)
class StationaryProblem:
    """[kin_y*(-Delta_y) + trap*|y|^2 + kin_z*(-d_zz) + const] u = nonlin*|u|^{p-2}u."""

    grid: Discretization
    p: float
    kin_y: float = 1.0
    trap: float = 1.0
    kin_z: float = 1.0
    const: float = 0.0
    nonlin: float = 1.0

    def apply_lin(self, coeffs: np.ndarray) -> np.ndarray:
        return self.grid.apply_operator(coeffs, self.kin_y, self.trap, self.kin_z, self.const)

    def quadform_lin(self, coeffs: np.ndarray) -> float:
        return self.grid.quadform(coeffs, self.kin_y, self.trap, self.kin_z, self.const)

    def precond_diag(self) -> np.ndarray:
        g = self.grid
        d = (self.kin_y * g.osc_eigs[:, None] + self.kin_z * g.xi[None, :] ** 2 + self.const
             + g.tridiag_coef(self.kin_y, self.trap) * g._x1_diag[:, None])
        return np.maximum(d, 1e-6)

    def nonlinear_coeffs(self, values: np.ndarray) -> np.ndarray:
        vals = self.nonlin * np.abs(values) ** (self.p - 2.0) * values
        return self.grid.to_coeffs(vals.astype(complex)).real

    def gradient_coeffs(self, coeffs: np.ndarray, values: np.ndarray) -> np.ndarray:
        return self.apply_lin(coeffs) - self.nonlinear_coeffs(values)

    def action_value(self, coeffs: np.ndarray, values: np.ndarray) -> float:
        lp = float(self.grid.quad(np.abs(values) ** self.p))
        return 0.5 * self.quadform_lin(coeffs) - self.nonlin * lp / self.p


def problem_physical(params: ModelParams, grid: Discretization) -> StationaryProblem:
    return StationaryProblem(grid=grid, p=params.p, const=-params.lam)


def problem_weak_trap(p: float, mu: float, grid: Discretization) -> StationaryProblem:
    return StationaryProblem(grid=grid, p=p, trap=mu, const=1.0)


# -- even-in-z real sector ------------------------------------------------------

class SectorMap:
    """Isometry between even-in-z real fields and real vectors.

    For such fields the spectral coefficients are real and symmetric in the
    axial index, so the K*(Mz/2+1) independent entries (with sqrt(2)
    weights on the doubled ones) carry the full Euclidean structure.
    """

    def __init__(self, grid: Discretization):
        self.grid = grid
        self.half = grid.Mz // 2
        self.size = grid.K * (self.half + 1)
        self._w = np.full(self.half + 1, np.sqrt(2.0))
        self._w[0] = 1.0
        self._w[-1] = 1.0

    def to_vec(self, coeffs: np.ndarray) -> np.ndarray:
        return (coeffs[:, : self.half + 1].real * self._w).ravel()

    def from_vec(self, x: np.ndarray) -> np.ndarray:
        half = self.half
        red = x.reshape(self.grid.K, half + 1) / self._w
        out = np.empty((self.grid.K, self.grid.Mz))
        out[:, : half + 1] = red
        out[:, half + 1:] = red[:, half - 1:0:-1]
        return out


def symmetrize_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Project spectral coefficients onto the even-in-z real sector."""
    c = coeffs.real.copy()
    half = c.shape[1] // 2
    c[:, 1:] = 0.5 * (c[:, 1:] + c[:, :0:-1])
    return c


# -- core iteration --------------------------------------------------------------

@dataclass
class IterationResult:
    coeffs: np.ndarray
    values: np.ndarray
    action: float
    grad_norm: float
    nehari_residual: float
    lp: float
    iterations: int
    converged: bool
    action_history: list


def nehari_scale_t(problem: StationaryProblem, coeffs: np.ndarray,
                   values: np.ndarray) -> float:
    """Unique positive scale t with t*u on the Nehari set of the problem."""
    lp = float(problem.grid.quad(np.abs(values) ** problem.p))
    if lp <= 0.0:
        raise ZeroField("Nehari projection of a (numerically) zero field")
    quad = problem.quadform_lin(coeffs)
    if quad <= 0.0:
        raise ValueError("quadratic form not positive; frequency out of range")
    return (quad / (problem.nonlin * lp)) ** (1.0 / (problem.p - 2.0))


def _project(problem, coeffs):
    values = problem.grid.from_coeffs(coeffs.astype(complex)).real
    t = nehari_scale_t(problem, coeffs, values)
    return t * coeffs, t * values


def _sector_hessian(problem: StationaryProblem, values: np.ndarray,
                    sector: SectorMap) -> LinearOperator:
    g = problem.grid
    w = problem.nonlin * (problem.p - 1.0) * np.abs(values) ** (problem.p - 2.0)

    def mv(x):
        c = sector.from_vec(x)
        out = problem.apply_lin(c)
        nodal = g.from_coeffs(c.astype(complex)).real
        out = out - g.to_coeffs((w * nodal).astype(complex)).real
        return sector.to_vec(out)

    return LinearOperator((sector.size, sector.size), matvec=mv, dtype=float)


def _sector_precond(problem: StationaryProblem, sector: SectorMap) -> LinearOperator:
    dv = np.ascontiguousarray(problem.precond_diag()[:, : sector.half + 1]).ravel()

    def mv(x):
        if x.ndim == 2:
            return x / dv[:, None]
        return x / dv

    return LinearOperator((sector.size, sector.size), matvec=mv, matmat=mv, dtype=float)


def iterate_ground_state(problem: StationaryProblem, coeffs0: np.ndarray,
                         opts: SolverOptions = SolverOptions()) -> IterationResult:
    """Nehari-projected preconditioned descent, then Newton refinement."""
    g = problem.grid
    c = symmetrize_coeffs(coeffs0)
    if float(np.sum(c * c)) < opts.collapse_mass:
        raise CollapsedToZero("initial iterate has (numerically) zero mass")
    c, un = _project(problem, c)
    J = problem.action_value(c, un)
    actions = [J]
    pre = problem.precond_diag()
    alpha = 1.0
    prev_c = prev_grad = None
    it = 0
    newton_used = 0
    sector = None
    mode = "gradient"

    while it < opts.max_iter:
        it += 1
        grad = problem.gradient_coeffs(c, un)
        grad = symmetrize_coeffs(grad)
        gn = float(np.sqrt(np.sum(grad * grad)))
        lp = float(g.quad(np.abs(un) ** problem.p))
        quad = problem.quadform_lin(c)
        res = quad - problem.nonlin * lp
        if gn <= opts.tol_grad and abs(res) <= opts.tol_nehari * max(lp, 1e-300):
            return IterationResult(c, un, J, gn, res, lp, it, True, actions)
        mass = float(np.sum(c * c))
        if mass < opts.collapse_mass:
            raise CollapsedToZero(f"iterate mass collapsed at iteration {it}")

        # Newton only once the gradient is small relative to the state's own
        # scale, else the refinement can lock onto a nearby excited critical
        # point before the descent has relaxed the profile
        gscale = quad / np.sqrt(mass)
        if mode == "gradient" and gn < min(opts.newton_switch, 1e-4 * gscale):
            mode = "newton"
        if mode == "newton":
            if newton_used >= opts.max_newton:
                break
            newton_used += 1
            if sector is None:
                sector = SectorMap(g)
                mpre = _sector_precond(problem, sector)
            hess = _sector_hessian(problem, un, sector)
            rhs = sector.to_vec(grad)
            rtol = min(0.1, np.sqrt(gn))
            delta, info = minres(hess, rhs, M=mpre, rtol=rtol, maxiter=400)
            step = sector.from_vec(delta)
            ok = False
            for _ in range(8):
                try:
                    c_try, un_try = _project(problem, c - step)
                except ZeroField:
                    step = 0.5 * step
                    continue
                grad_try = symmetrize_coeffs(problem.gradient_coeffs(c_try, un_try))
                gn_try = float(np.sqrt(np.sum(grad_try * grad_try)))
                if gn_try < gn:
                    c, un = c_try, un_try
                    J = problem.action_value(c, un)
                    ok = True
                    break
                step = 0.5 * step
            if not ok:
                mode = "gradient"   # Newton stalled; resume descent
                alpha = 1.0
            continue

        # preconditioned Barzilai-Borwein step with backtracking
        direction = grad / pre
        if prev_c is not None:
            s = c - prev_c
            y = grad - prev_grad
            sy = float(np.sum(s * y))
            if sy > 0:
                alpha = float(np.sum(s * s)) / sy
            alpha = float(np.clip(alpha, 1e-4, 1e4))
        prev_c, prev_grad = c, grad
        accepted = False
        a = alpha
        for _ in range(50):
            c_try, un_try = _project(problem, c - a * direction)
            J_try = problem.action_value(c_try, un_try)
            if J_try <= J + 1e-12 * abs(J):
                accepted = True
                break
            a *= 0.5
        if not accepted:
            mode = "newton"   # descent exhausted at this scale
            continue
        c, un, J = c_try, un_try, J_try
        actions.append(J)

    grad = symmetrize_coeffs(problem.gradient_coeffs(c, un))
    gn = float(np.sqrt(np.sum(grad * grad)))
    lp = float(g.quad(np.abs(un) ** problem.p))
    res = problem.quadform_lin(c) - problem.nonlin * lp
    converged = gn <= opts.tol_grad and abs(res) <= opts.tol_nehari * max(lp, 1e-300)
    return IterationResult(c, un, J, gn, res, lp, it, converged, actions)


# -- public API -------------------------------------------------------------------

@dataclass
class GroundStateResult:
    u: Field
    params: ModelParams
    action: float
    mass: float
    gradient_norm: float
    nehari_residual: float
    iterations: int
    converged: bool
    picture: str = "u"
    native: Field | None = None
    native_problem: StationaryProblem | None = None
    native_gradient_norm: float = 0.0
    action_history: list = field(default_factory=list)

    def functional_report(self):
        return report(self.u, self.params)


def nehari_scale(u: Field, params: ModelParams) -> tuple[float, Field]:
    """Scale u onto the Nehari set of the physical problem at params."""
    prob = problem_physical(params, u.grid)
    t = nehari_scale_t(prob, u.coeffs, u.values)
    return t, t * u


def grid_for(params: ModelParams, resolution: Resolution = Resolution()) -> tuple[str, Discretization]:
    """Pick the solve picture and grid for a frequency.

    Physical solves stretch the axial box like tau^{-1/2} near LAMBDA0 so
    the elongated state keeps a fixed box in stretched coordinates; far
    solves (lambda <= FAR_SWITCH) use a weak-trap-picture grid of unit
    frequency, where the state is O(1) in every direction.
    """
    if params.lam <= FAR_SWITCH:
        return "v", build(resolution.K, resolution.Mz, resolution.Lz,
                          omega=1.0, oversample=resolution.oversample)
    tau = params.tau
    stretch = 1.0 if tau >= 1.0 else 1.0 / np.sqrt(tau)
    return "u", build(resolution.K, resolution.Mz, resolution.Lz * stretch,
                      omega=1.0, oversample=resolution.oversample)


def _starts(picture: str, params: ModelParams, grid: Discretization) -> dict[str, np.ndarray]:
    p = params.p
    out = {}
    gauss = np.exp(-(grid.r[:, None] ** 2 + grid.z[None, :] ** 2) / 2.0)
    if picture == "u":
        if params.tau < 1.0:
            out["near"] = reference_profile(params, "near", grid).coeffs.real
        else:
            sol = soliton_1d(p)   # factorized guess without the tau-rescale
            vals = np.outer(planar_ground_mode(grid), sol(grid.z))
            out["near"] = grid.to_coeffs(vals.astype(complex)).real
        if params.lam < 0:
            out["far"] = reference_profile(params, "far", grid).coeffs.real
    else:
        out["far"] = free_soliton_field(p, grid).coeffs.real
    out["gaussian"] = grid.to_coeffs(gauss.astype(complex)).real
    return out


def _gradient_factor(params: ModelParams) -> float:
    """||grad J_lambda(u)|| / ||grad J_weak(v)|| under the exact rescaling."""
    s = -params.lam
    return s ** (1.0 / (params.p - 2.0) + 0.25)


def solve_ground_state(params: ModelParams, init: Field | str | None = None,
                       resolution: Resolution = Resolution(),
                       opts: SolverOptions = SolverOptions(),
                       grid: Discretization | None = None) -> GroundStateResult:
    """Compute the positive, even-in-z ground state at the given frequency.

    With init=None a small multi-start sweep runs (asymptotic references
    plus an isotropic Gaussian) and the least-action converged candidate
    wins; pass a Field or one of "near"/"far"/"gaussian" to pin the start.
    """
    if grid is not None:
        picture = "u"
    else:
        picture, grid = grid_for(params, resolution)

    if picture == "v":
        mu = params.mu
        prob = problem_weak_trap(params.p, mu, grid)
        native_opts = replace(opts, tol_grad=opts.tol_grad / _gradient_factor(params))
    else:
        prob = problem_physical(params, grid)
        native_opts = opts

    if isinstance(init, Field):
        src = init if picture == "u" else to_v(init, params.lam, params.p)
        if not src.grid.compatible(grid):
            from .scaling import resample
            src = resample(src, grid, check_tail=False)
        starts = [symmetrize_coeffs(src.coeffs)]
        if float(np.sum(starts[0] ** 2)) < opts.collapse_mass:
            raise ZeroField("init field is zero after symmetrization")
    elif isinstance(init, str):
        cands = _starts(picture, params, grid)
        if init not in cands:
            raise ValueError(f"start {init!r} unavailable here (have {sorted(cands)})")
        starts = [cands[init]]
    else:
        starts = list(_starts(picture, params, grid).values())

    best = None
    for c0 in starts:
        try:
            res = iterate_ground_state(prob, c0, native_opts)
        except (CollapsedToZero, ZeroField):
            continue
        if res.converged and (best is None or res.action < best.action):
            best = res
    if best is None:
        raise NotConverged(opts.max_iter, np.nan, what="ground state")

    return _package_result(params, picture, prob, best)


def _package_result(params: ModelParams, picture: str, prob: StationaryProblem,
                    res: IterationResult) -> GroundStateResult:
    vmax = float(np.abs(res.values).max())
    vmin = float(res.values.min())
    # positivity up to discretization noise: exponential tails in a
    # Gaussian-weighted basis ring at the level of the radial spectral
    # tail, so the floor is measured rather than fixed
    tail = float(np.linalg.norm(res.coeffs[-4:, :]) / np.linalg.norm(res.coeffs))
    positive = vmin >= -max(1e-8, tail) * vmax
    native = Field(prob.grid, values=res.values, coeffs=res.coeffs.astype(complex),
                   real=True, even_z=True, positive=positive)
    if picture == "v":
        u = from_v(native, params.lam, params.p)
        s = -params.lam
        action_u = s ** (params.p / (params.p - 2.0) - 1.5) * res.action
        mass_u = s ** (2.0 / (params.p - 2.0) - 1.5) * float(np.sum(res.coeffs**2))
        gn_u = res.grad_norm * _gradient_factor(params)
    else:
        u = native
        action_u = res.action
        mass_u = float(np.sum(res.coeffs**2))
        gn_u = res.grad_norm
    if not positive:
        raise NotConverged(res.iterations, res.grad_norm,
                           what="ground state (converged to a sign-changing state)")
    return GroundStateResult(u=u, params=params, action=action_u, mass=mass_u,
                             gradient_norm=gn_u, nehari_residual=res.nehari_residual,
                             iterations=res.iterations, converged=res.converged,
                             picture=picture, native=native, native_problem=prob,
                             native_gradient_norm=res.grad_norm,
                             action_history=res.action_history)


# -- linearized operator ----------------------------------------------------------

@dataclass
class LinearizedOperator:
    """Second variation of the action at a state: linear part minus
    (p-1)|u|^{p-2}; self-adjoint on L^2, restricted here to the radial,
    even-in-z sector unless applied to a full field directly."""

    problem: StationaryProblem
    base_values: np.ndarray     # nodal values of the state (real)

    @classmethod
    def at(cls, result: GroundStateResult) -> "LinearizedOperator":
        return cls(problem=result.native_problem, base_values=result.native.values)

    @classmethod
    def free(cls, params: ModelParams, grid: Discretization) -> "LinearizedOperator":
        prob = problem_physical(params, grid)
        return cls(problem=prob, base_values=np.zeros((grid.nr, grid.Mz)))

    def apply_field(self, f: Field) -> Field:
        prob = self.problem
        w = prob.nonlin * (prob.p - 1.0) * np.abs(self.base_values) ** (prob.p - 2.0)
        out = prob.apply_lin(f.coeffs)
        out = out - prob.grid.to_coeffs((w * f.values).astype(complex))
        return Field(prob.grid, coeffs=out, real=f.real, even_z=f.even_z)

    def sector_operator(self) -> tuple[LinearOperator, SectorMap]:
        sector = SectorMap(self.problem.grid)
        return _sector_hessian(self.problem, self.base_values, sector), sector


def linearized_smallest_eigs(lin: LinearizedOperator, n: int = 3,
                             tol: float = 2e-7, maxiter: int = 800):
    """n smallest eigenpairs of the symmetric-sector restriction.

    Preconditioned block iteration (LOBPCG) seeded with the base state,
    which spans the single negative direction of a ground state; falls
    back to Lanczos if the block iteration fails.  Each returned pair is
    residual-checked to 1e-6 * ||phi||.
    """
    op, sector = lin.sector_operator()
    pre = _sector_precond(lin.problem, sector)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((sector.size, n))
    seed = sector.to_vec(lin.problem.grid.to_coeffs(
        lin.base_values.astype(complex)).real)
    if np.linalg.norm(seed) > 1e-10:
        X[:, 0] = seed
    try:
        vals, vecs = lobpcg(op, X, M=pre, largest=False, tol=tol,
                            maxiter=maxiter, verbosityLevel=0)
    except Exception:
        try:
            vals, vecs = eigsh(op, k=n, which="SA", tol=1e-9, maxiter=5000)
        except Exception as exc:
            raise EigsNotConverged(str(exc)) from exc
    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    out = []
    for i in range(n):
        c = sector.from_vec(vecs[:, i])
        f = Field(lin.problem.grid, coeffs=c.astype(complex), real=True, even_z=True)
        resid = lin.apply_field(f) - float(vals[i]) * f
        if resid.l2_norm() > 1e-6 * f.l2_norm():
            raise EigsNotConverged(f"eigenpair {i} residual {resid.l2_norm():.2e}")
        out.append((float(vals[i]), f))
    return out


def solve_chi(result: GroundStateResult, rtol: float = 1e-10,
              maxiter: int = 3000) -> tuple[Field, float]:
    """Solve the linearized equation L chi = u in the symmetric sector.

    Returns the frequency-derivative field (physical picture) and the mass
    slope d/dlambda int u^2 = 2 int u*chi.  For weak-trap-picture states
    the solve happens natively and the slope uses the exact equivalence
    prefactor |lambda|^{(4-p)/(p-2) - 3/2}.
    """
    prob = result.native_problem
    lin = LinearizedOperator(problem=prob, base_values=result.native.values)
    op, sector = lin.sector_operator()
    pre = _sector_precond(prob, sector)
    rhs = sector.to_vec(result.native.coeffs.real)
    x, info = minres(op, rhs, M=pre, rtol=rtol, maxiter=maxiter)
    chi_c = sector.from_vec(x)
    chi_native = Field(prob.grid, coeffs=chi_c.astype(complex), real=True, even_z=True)
    resid = (lin.apply_field(chi_native) - result.native).l2_norm()
    if resid > 1e-8 * result.native.l2_norm():
        raise NearSingular(f"linearized solve residual {resid:.2e} (info={info})")
    inner = float(np.sum(chi_c * result.native.coeffs.real))
    p = result.params.p
    if result.picture == "v":
        s = -result.params.lam
        slope = 2.0 * s ** ((4.0 - p) / (p - 2.0) - 1.5) * inner
        chi = branch_derivative_from_v(chi_native, result.params.lam, p)
    else:
        slope = 2.0 * inner
        chi = chi_native
    return chi, slope
