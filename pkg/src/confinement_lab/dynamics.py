"""Split-step time integration and empirical orbital-stability probes.

The Cauchy problem

    i psi_t + Delta psi - (x1^2 + x2^2) psi + |psi|^{p-2} psi = 0

is integrated by Strang splitting: a half-step of the nonlinear phase
rotation exp(+i dt/2 |psi|^{p-2}) (exact, since |psi| is pointwise
invariant), a full linear step (exact in the spectral basis, multiplier
exp(-i dt (osc_k + xi_m^2))), and another nonlinear half-step.  Both
sub-steps are L^2 isometries, so the mass drift is pure roundoff.

Orbital distance to a standing-wave orbit quotients out the global phase
(closed form) and axial translations (trig-polynomial scan over the box
followed by local refinement), in the trap-weighted H metric, reported
relative to the H norm of the reference state.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import ifft

from .core import Field, ModelParams
from .errors import ShapeMismatch, StepTooLarge
from .functionals import quadratic_parts, lp_integral

PERTURBATION_SHAPES = ("even_random", "ground_mode", "z_dilation")


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 2e-3
    T: float = 20.0
    perturbation: float = 0.0           # relative H-norm amplitude, in [0, 0.2]
    shape: str = "even_random"
    record_every: int = 10
    sector: str = "symmetric"           # "symmetric" | "full"
    seed: int = 1234
    check_first_steps: int = 10
    stop_when_distance: float | None = None   # early exit for escape runs

    def __post_init__(self):
        if self.dt <= 0 or self.T <= 0:
            raise ValueError("dt and T must be positive")
        if not 0.0 <= self.perturbation <= 0.2:
            raise ValueError("perturbation amplitude outside [0, 0.2]")
        if self.shape not in PERTURBATION_SHAPES:
            raise ValueError(f"unknown perturbation shape {self.shape!r}")
        if self.sector not in ("symmetric", "full"):
            raise ValueError("sector must be 'symmetric' or 'full'")


@dataclass
class EvolutionTrace:
    t: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    orbital_distance: np.ndarray
    seed: int
    sector: str
    dt: float

    def to_csv(self, path) -> None:
        arr = np.column_stack([self.t, self.mass, self.energy, self.orbital_distance])
        np.savetxt(path, arr, delimiter=",",
                   header="t,mass,energy,orbital_distance", comments="")


def energy_value(psi: Field, p: float) -> float:
    """Conserved energy: (1/2) int |grad psi|^2 + |y|^2 |psi|^2 - (1/p) int |psi|^p."""
    q = quadratic_parts(psi)
    return 0.5 * (q["kin_y"] + q["kin_z"] + q["trap"]) - lp_integral(psi, p) / p


def make_perturbation(u: Field, shape: str, amplitude: float, seed: int,
                      sector: str = "symmetric") -> Field:
    """Real perturbation field with the given relative H amplitude."""
    g = u.grid
    rng = np.random.default_rng(seed)
    if shape == "even_random":
        c = rng.standard_normal((g.K, g.Mz))
        # band-limit: keep the lower third of each direction
        c[g.K // 3:, :] = 0.0
        keep = np.abs(np.fft.fftfreq(g.Mz, 1.0 / g.Mz)) <= g.Mz // 6
        c[:, ~keep] = 0.0
        pert = Field(g, coeffs=c.astype(complex), real=True)
    elif shape == "ground_mode":
        c = np.zeros((g.K, g.Mz), dtype=complex)
        c[0, :] = u.coeffs[0, :]
        pert = Field(g, coeffs=c, real=True)
    elif shape == "z_dilation":
        dc = u.coeffs * (1j * g.xi[None, :])
        dz_vals = g.from_coeffs(dc).real
        pert = Field(g, values=-g.z[None, :] * dz_vals, real=True)
    else:
        raise ValueError(f"unknown perturbation shape {shape!r}")
    if sector == "symmetric":
        pert = pert.symmetrized()
    qp = quadratic_parts(pert)
    hn = np.sqrt(qp["kin_y"] + qp["kin_z"] + qp["trap"] + qp["l2"])
    if hn == 0.0:
        raise ValueError("degenerate perturbation")
    qu = quadratic_parts(u)
    hu = np.sqrt(qu["kin_y"] + qu["kin_z"] + qu["trap"] + qu["l2"])
    return (amplitude * hu / hn) * pert


def perturbed_state(u: Field, cfg: EvolutionConfig) -> Field:
    """Complex initial state u + perturbation, per the config."""
    psi_c = u.coeffs.astype(complex)
    if cfg.perturbation > 0.0:
        pert = make_perturbation(u, cfg.shape, cfg.perturbation, cfg.seed, cfg.sector)
        psi_c = psi_c + pert.coeffs
    return Field(u.grid, coeffs=psi_c, real=False, even_z=False)


def evolve(psi0: Field, params: ModelParams, cfg: EvolutionConfig,
           reference: Field | None = None,
           snapshot_dir=None) -> EvolutionTrace:
    """Integrate the flow and record mass, energy, and orbital distance.

    The reference (typically the ground state the run probes) is only used
    for the distance series; pass None to skip it.  With snapshot_dir set,
    the state is written in the Field snapshot format at every record point.
    Raises StepTooLarge if the relative energy drift over the first few
    steps exceeds 1e-3.
    """
    g = psi0.grid
    if g.omega != 1.0:
        raise ShapeMismatch("time integration requires a unit-frequency grid")
    if reference is not None and not g.compatible(reference.grid):
        raise ShapeMismatch("reference on a different grid")
    if g.nr != g.K:
        # move to the collocation (square-transform) grid: same basis, same
        # coefficients, but nodal <-> spectral is unitary there, which makes
        # both split sub-steps exact L^2 isometries
        from .grid import build
        gc = build(K=g.K, Mz=g.Mz, Lz=g.Lz, omega=g.omega, oversample=1)
        psi0 = Field(gc, coeffs=psi0.coeffs, real=False, even_z=psi0.even_z)
        if reference is not None:
            reference = Field(gc, coeffs=reference.coeffs, real=reference.real,
                              even_z=reference.even_z)
        g = gc
    p = params.p
    dt = cfg.dt
    n_steps = int(round(cfg.T / dt))
    lin_phase = np.exp(-1j * dt * (g.osc_eigs[:, None] + g.xi[None, :] ** 2))

    ref_data = _reference_data(reference) if reference is not None else None

    vals = psi0.values.astype(complex)
    e0 = energy_value(psi0, p)
    scale = max(abs(e0), 1.0)

    times, masses, energies, dists = [], [], [], []

    def record(step, vals):
        fld = Field(g, values=vals, real=False)
        times.append(step * dt)
        masses.append(float(g.quad(np.abs(vals) ** 2)))
        energies.append(energy_value(fld, p))
        dists.append(orbital_distance_data(fld, ref_data) if ref_data else float("nan"))
        if snapshot_dir is not None:
            from .core import save_field
            save_field(fld, Path(snapshot_dir) / f"psi_{step:08d}",
                       p=p, lam=params.lam, extra={"t": step * dt})

    record(0, vals)
    for step in range(1, n_steps + 1):
        vals = vals * np.exp(1j * (0.5 * dt) * np.abs(vals) ** (p - 2.0))
        coeffs = g.to_coeffs(vals) * lin_phase
        vals = g.from_coeffs(coeffs)
        vals = vals * np.exp(1j * (0.5 * dt) * np.abs(vals) ** (p - 2.0))
        if step % cfg.record_every == 0 or step == n_steps:
            record(step, vals)
            if cfg.stop_when_distance is not None and ref_data and \
                    dists[-1] > cfg.stop_when_distance:
                break
        if step == cfg.check_first_steps:
            drift = abs(energy_value(Field(g, values=vals, real=False), p) - e0) / scale
            if drift > 1e-3:
                raise StepTooLarge(f"energy drift {drift:.2e} over the first {step} steps")
    return EvolutionTrace(t=np.array(times), mass=np.array(masses),
                          energy=np.array(energies), orbital_distance=np.array(dists),
                          seed=cfg.seed, sector=cfg.sector, dt=dt)


# -- orbital distance -------------------------------------------------------------

def _reference_data(u: Field) -> dict:
    g = u.grid
    hw = g.h_weights()
    uc = u.coeffs
    qu = quadratic_parts(u)
    h_norm_sq = qu["kin_y"] + qu["kin_z"] + qu["trap"] + qu["l2"]
    return {"grid": g, "hw": hw, "uc": uc, "h_norm_sq": h_norm_sq}


def orbital_distance_data(psi: Field, ref: dict) -> float:
    """Distance to the orbit {e^{i theta} u(.,. - z0)} in the H metric.

    For each shift z0 the optimal phase is closed form, leaving
        d(z0)^2 = ||psi||_H^2 + ||u||_H^2 - 2 |B(z0)|,
    where B(z0) = sum_m b_m e^{i xi_m z0} is a trigonometric polynomial
    with b_m = sum_k hw km * psi_km * conj(u_km).  B is evaluated at every
    grid shift at once through one FFT, then the best node is refined by
    parabolic interpolation in z0.  Returned relative to ||u||_H.
    """
    g = ref["grid"]
    hw, uc = ref["hw"], ref["uc"]
    pc = psi.coeffs
    qp = quadratic_parts(psi)
    psi_h = qp["kin_y"] + qp["kin_z"] + qp["trap"] + qp["l2"]
    b = np.sum(hw * pc * np.conj(uc), axis=0)
    # B(z_j + Lz) pattern: evaluate sum_m b_m e^{i xi_m z} on the nodes
    big = ifft(g.phase * b) * g.Mz
    mags = np.abs(big)
    j0 = int(np.argmax(mags))

    def bmag(z0):
        return np.abs(np.sum(b * np.exp(1j * g.xi * z0)))

    # parabolic refinement around the best node, then a golden polish
    z_best, m_best = _refine_max(bmag, g.z[j0], g.dz)
    d2 = psi_h + ref["h_norm_sq"] - 2.0 * m_best
    return float(np.sqrt(max(d2, 0.0)) / np.sqrt(ref["h_norm_sq"]))


def _refine_max(f, x0, h):
    """Maximize a smooth periodic function near x0 by shrinking triples."""
    a, b, c = x0 - h, x0, x0 + h
    fa, fb, fc = f(a), f(b), f(c)
    best_x, best_f = b, fb
    for _ in range(60):
        denom = (fa - 2.0 * fb + fc)
        if denom == 0.0:
            break
        shift = 0.5 * (fa - fc) / denom * h
        shift = float(np.clip(shift, -h, h))
        x0 = b + shift
        h *= 0.5
        a, b, c = x0 - h, x0, x0 + h
        fa, fb, fc = f(a), f(b), f(c)
        if fb > best_f:
            best_x, best_f = b, fb
        if h < 1e-13:
            break
    return best_x, best_f


def orbital_distance(psi: Field, u: Field, params: ModelParams | None = None) -> float:
    """Relative H-distance from psi to the phase/translation orbit of u."""
    if not psi.grid.compatible(u.grid):
        raise ShapeMismatch("fields on different grids")
    return orbital_distance_data(psi, _reference_data(u))
