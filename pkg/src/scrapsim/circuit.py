"""Flux-biased junction potential, bound states, and matrix elements.

The junction phase behaves as a particle of mass C_J (Phi0/2pi)^2 in the
tilted-cosine potential

    U0(d) = E_J [ (d - phi_b0)^2 / (2 lambda) - cos d ],

with lambda = 2 pi I0 L / Phi0 and phi_b0 = 2 pi I_phi0 M / Phi0.  Drive
currents add linear terms: a dc (Stark) current couples through M/L, the ac
(pump) current couples directly.  The metastable left well is treated as a
closed system by placing hard walls just outside it and diagonalizing the
finite-difference Hamiltonian on that window.
"""

from __future__ import annotations

import dataclasses
import io

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .constants import CURRENT_DRIVE_RATE, FLUX_QUANTUM, HBAR, radns_to_ghz
from .errors import ConvergenceFailure, InsufficientLevels, NoWellFound

# Default discretization: hard wall this many harmonic lengths left of the
# minimum / beyond the barrier top, and this many grid points.
LEFT_WALL_WIDTHS = 5.0
BARRIER_MARGIN_WIDTHS = 0.25
DEFAULT_GRID_POINTS = 4096
EIGENVALUE_REFINEMENT_RTOL = 1e-4


@dataclasses.dataclass(frozen=True)
class CircuitParams:
    """Junction and bias parameters defining the potential.

    Units: currents in uA, capacitance in pF, inductance in pH.  The
    inductance ratio is L/M (loop over mutual).
    """

    critical_current_ua: float
    junction_capacitance_pf: float
    loop_inductance_ph: float
    inductance_ratio: float
    dc_bias_ua: float

    def __post_init__(self):
        for name in ("critical_current_ua", "junction_capacitance_pf",
                     "loop_inductance_ph", "inductance_ratio", "dc_bias_ua"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.inductance_ratio <= 1:
            raise ValueError("inductance_ratio (L/M) must exceed 1")

    @property
    def mutual_inductance_ph(self) -> float:
        return self.loop_inductance_ph / self.inductance_ratio

    @property
    def josephson_energy(self) -> float:
        """E_J = I0 Phi0 / 2pi in rad/ns."""
        i0 = self.critical_current_ua * 1e-6
        return i0 * FLUX_QUANTUM / (2.0 * np.pi) / HBAR * 1e-9

    @property
    def tilt(self) -> float:
        """lambda = 2pi I0 L / Phi0 (dimensionless)."""
        return (2.0 * np.pi * self.critical_current_ua * 1e-6
                * self.loop_inductance_ph * 1e-12 / FLUX_QUANTUM)

    @property
    def phase_bias(self) -> float:
        """phi_b0 = 2pi I_phi0 M / Phi0 (radians)."""
        return (2.0 * np.pi * self.dc_bias_ua * 1e-6
                * self.mutual_inductance_ph * 1e-12 / FLUX_QUANTUM)

    @property
    def kinetic_coeff(self) -> float:
        """K in H = -K d^2/dd^2 + U, i.e. hbar/(2m) in rad/ns."""
        m = (self.junction_capacitance_pf * 1e-12
             * (FLUX_QUANTUM / (2.0 * np.pi)) ** 2)
        return HBAR / (2.0 * m) * 1e-9

    @property
    def stark_rate_per_na(self) -> float:
        """(Phi0 M / 2pi L) / hbar in rad/ns per nA of dc current."""
        return CURRENT_DRIVE_RATE / self.inductance_ratio

    @property
    def pump_rate_per_na(self) -> float:
        """(Phi0 / 2pi) / hbar in rad/ns per nA of ac current."""
        return CURRENT_DRIVE_RATE

    def with_capacitance_scale(self, scale: float) -> "CircuitParams":
        """Copy with the junction capacitance multiplied by `scale`."""
        return dataclasses.replace(
            self, junction_capacitance_pf=self.junction_capacitance_pf * scale)


#: Device parameters used throughout the built-in example configs.
REFERENCE_PARAMS = CircuitParams(
    critical_current_ua=8.351,
    junction_capacitance_pf=1.2,
    loop_inductance_ph=168.0,
    inductance_ratio=81.0,
    dc_bias_ua=923.7,
)


@dataclasses.dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid over the junction phase."""

    delta_min: float
    delta_max: float
    n_points: int

    def __post_init__(self):
        if not self.delta_min < self.delta_max:
            raise ValueError("delta_min must be below delta_max")
        if self.n_points < 3:
            raise ValueError("n_points must be at least 3")

    @property
    def spacing(self) -> float:
        return (self.delta_max - self.delta_min) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.delta_min, self.delta_max, self.n_points)

    def refined(self) -> "PhaseGrid":
        """Same span at half the spacing."""
        return PhaseGrid(self.delta_min, self.delta_max, 2 * self.n_points - 1)


@dataclasses.dataclass(frozen=True)
class PotentialProfile:
    """Potential samples plus the located well minimum and barrier top."""

    grid: PhaseGrid
    u_values: np.ndarray
    well_minimum: float | None = None
    barrier_top: float | None = None


def potential_energy(params: CircuitParams, delta, i_dc_na=0.0, i_ac_na=0.0):
    """Potential in rad/ns at phase `delta` under static drive currents (nA)."""
    delta = np.asarray(delta, dtype=float)
    ej = params.josephson_energy
    u = ej * ((delta - params.phase_bias) ** 2 / (2.0 * params.tilt)
              - np.cos(delta))
    u = u - params.stark_rate_per_na * i_dc_na * delta
    u = u - params.pump_rate_per_na * i_ac_na * delta
    return u if u.ndim else float(u)


def potential_profile(params: CircuitParams, grid: PhaseGrid,
                      i_dc_na: float = 0.0) -> PotentialProfile:
    """Sample the static potential over `grid`."""
    u = potential_energy(params, grid.points(), i_dc_na=i_dc_na)
    return PotentialProfile(grid=grid, u_values=u)


def locate_left_well(profile: PotentialProfile) -> tuple[float, float]:
    """Phase of the leftmost local minimum and the barrier top right of it.

    Returns grid-resolution estimates refined by a parabolic fit through the
    bracketing samples.  Raises NoWellFound when the profile is monotone or
    no minimum is followed by a maximum.
    """
    u = profile.u_values
    x = profile.grid.points()
    interior = np.arange(1, len(u) - 1)
    is_min = (u[interior] < u[interior - 1]) & (u[interior] <= u[interior + 1])
    is_max = (u[interior] > u[interior - 1]) & (u[interior] >= u[interior + 1])
    minima = interior[is_min]
    maxima = interior[is_max]
    for i_min in minima:
        later = maxima[maxima > i_min]
        if later.size:
            i_max = later[0]
            return (_parabolic_vertex(x, u, i_min),
                    _parabolic_vertex(x, u, i_max))
    raise NoWellFound("no local minimum followed by a barrier on the grid")


def _parabolic_vertex(x: np.ndarray, u: np.ndarray, i: int) -> float:
    """Vertex of the parabola through points i-1, i, i+1."""
    denom = u[i - 1] - 2.0 * u[i] + u[i + 1]
    if denom == 0.0:
        return float(x[i])
    h = x[1] - x[0]
    return float(x[i] + 0.5 * h * (u[i - 1] - u[i + 1]) / denom)


@dataclasses.dataclass(frozen=True)
class LevelStructure:
    """Bound-state energies, wavefunctions, and matrix elements.

    Energies are in rad/ns (hbar = 1).  Wavefunctions are real samples on the
    grid, L2-normalized with the grid weight.  `dipole` holds <i|delta|j>,
    `momentum` holds the signed derivative elements <i|d/ddelta|j>.
    """

    grid: PhaseGrid
    energies: np.ndarray
    wavefunctions: np.ndarray          # shape (n_points, n_levels)
    dipole: np.ndarray                 # (n_levels, n_levels)
    momentum: np.ndarray               # (n_levels, n_levels), signed
    well_minimum: float
    barrier_top: float
    barrier_energy: float

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    @property
    def momentum_magnitudes(self) -> np.ndarray:
        return np.abs(self.momentum)

    def transition_frequency(self, upper: int, lower: int) -> float:
        return float(self.energies[upper] - self.energies[lower])

    @property
    def transition_frequencies(self) -> np.ndarray:
        """Matrix omega_ij = E_i - E_j."""
        e = self.energies
        return e[:, None] - e[None, :]

    @property
    def anharmonicity_gap(self) -> float:
        """nu = omega_10 - omega_21, positive for the anharmonic well."""
        return (self.transition_frequency(1, 0)
                - self.transition_frequency(2, 1))


def solve_grid_hamiltonian(kinetic_coeff: float, u_values: np.ndarray,
                           spacing: float, n_levels: int,
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Lowest eigenpairs of -K d^2/dx^2 + U with hard walls at the grid ends.

    Second-order central differences on a uniform grid; returns energies
    ascending and wavefunctions normalized so that sum(psi^2) * spacing = 1.
    """
    n = len(u_values)
    diag = 2.0 * kinetic_coeff / spacing**2 + u_values
    off = np.full(n - 1, -kinetic_coeff / spacing**2)
    energies, vecs = eigh_tridiagonal(
        diag, off, select="i", select_range=(0, n_levels - 1))
    return energies, vecs / np.sqrt(spacing)


def _fix_signs(wavefunctions: np.ndarray) -> np.ndarray:
    """Make each state positive at its outermost antinode toward delta_min."""
    psi = wavefunctions.copy()
    for k in range(psi.shape[1]):
        mag = np.abs(psi[:, k])
        j = int(np.argmax(mag > 0.05 * mag.max()))
        while j + 1 < psi.shape[0] and mag[j + 1] > mag[j]:
            j += 1
        if psi[j, k] < 0:
            psi[:, k] *= -1.0
    return psi


def dipole_matrix(wavefunctions: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """delta_ij = integral psi_i(d) d psi_j(d) dd by grid quadrature."""
    x = grid.points()
    weighted = wavefunctions * x[:, None]
    return (wavefunctions.T @ weighted) * grid.spacing


def momentum_matrix(wavefunctions: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Signed p'_ij = integral psi_i dpsi_j/dd dd via centered differences."""
    dpsi = np.gradient(wavefunctions, grid.spacing, axis=0)
    return (wavefunctions.T @ dpsi) * grid.spacing


def default_grid(params: CircuitParams, i_dc_na: float = 0.0,
                 n_points: int = DEFAULT_GRID_POINTS) -> PhaseGrid:
    """Grid spanning the left well plus margins sized by the harmonic length."""
    well, barrier = _well_and_barrier(params, i_dc_na)
    curvature = params.josephson_energy * (1.0 / params.tilt + np.cos(well))
    plasma = np.sqrt(2.0 * params.kinetic_coeff * curvature)
    harmonic_length = np.sqrt(2.0 * params.kinetic_coeff / plasma)
    return PhaseGrid(well - LEFT_WALL_WIDTHS * harmonic_length,
                     barrier + BARRIER_MARGIN_WIDTHS * harmonic_length,
                     n_points)


def _well_and_barrier(params: CircuitParams,
                      i_dc_na: float = 0.0) -> tuple[float, float]:
    """Locate the left-well stationary points of the tilted potential."""
    phib = params.phase_bias
    scan = PhaseGrid(phib - 2.0 * np.pi, phib + 2.0 * np.pi, 20001)
    profile = potential_profile(params, scan, i_dc_na=i_dc_na)
    well, barrier = locate_left_well(profile)

    def slope(d):
        return (params.josephson_energy
                * ((d - phib) / params.tilt + np.sin(d))
                - params.stark_rate_per_na * i_dc_na)

    h = scan.spacing
    well = brentq(slope, well - 2 * h, well + 2 * h)
    barrier = brentq(slope, barrier - 2 * h, barrier + 2 * h)
    return well, barrier


def solve_bound_states(params: CircuitParams, grid: PhaseGrid | None = None,
                       n_levels: int = 4, i_dc_na: float = 0.0,
                       check_convergence: bool = True) -> LevelStructure:
    """Bound states of the left well under an optional static Stark current.

    Counts a state as bound while its energy lies below the barrier top; asks
    for a couple of extra eigenpairs so the count is meaningful.  Verifies
    grid convergence by re-solving at half the spacing unless disabled.
    """
    if grid is None:
        grid = default_grid(params, i_dc_na=i_dc_na)
    well, barrier = _well_and_barrier(params, i_dc_na)
    barrier_energy = potential_energy(params, barrier, i_dc_na=i_dc_na)

    n_solve = min(n_levels + 2, grid.n_points - 2)
    u = potential_energy(params, grid.points(), i_dc_na=i_dc_na)
    energies, psi = solve_grid_hamiltonian(
        params.kinetic_coeff, u, grid.spacing, n_solve)

    n_bound = int(np.sum(energies < barrier_energy))
    if n_bound < n_levels:
        raise InsufficientLevels(
            f"only {n_bound} states below the barrier, {n_levels} requested")

    if check_convergence:
        fine = grid.refined()
        u_fine = potential_energy(params, fine.points(), i_dc_na=i_dc_na)
        energies_fine, _ = solve_grid_hamiltonian(
            params.kinetic_coeff, u_fine, fine.spacing, n_levels)
        scale = np.maximum(np.abs(energies[:n_levels]), 1.0)
        drift = np.abs(energies[:n_levels] - energies_fine) / scale
        if np.any(drift > EIGENVALUE_REFINEMENT_RTOL):
            raise ConvergenceFailure(
                f"eigenvalues moved by {drift.max():.2e} under grid refinement")

    psi = _fix_signs(psi[:, :n_levels])
    energies = energies[:n_levels]
    return LevelStructure(
        grid=grid,
        energies=energies,
        wavefunctions=psi,
        dipole=dipole_matrix(psi, grid),
        momentum=momentum_matrix(psi, grid),
        well_minimum=well,
        barrier_top=barrier,
        barrier_energy=float(barrier_energy),
    )


def levels_report(levels: LevelStructure) -> str:
    """Human-readable summary: energies in GHz, matrix elements to 4 figures."""
    out = io.StringIO()
    n = levels.n_levels
    out.write("Left-well bound states\n")
    out.write(f"  well minimum at delta = {levels.well_minimum:.4f}, "
              f"barrier top at delta = {levels.barrier_top:.4f}\n")
    out.write("  level   (E - E0)/2pi (GHz)\n")
    for i, e in enumerate(levels.energies):
        out.write(f"  {i:>5d}   {radns_to_ghz(e - levels.energies[0]):12.6f}\n")
    depth = radns_to_ghz(levels.barrier_energy - levels.energies[0])
    out.write(f"  barrier top sits {depth:.4f} GHz above the ground state\n")
    for i in range(n - 1):
        f = radns_to_ghz(levels.transition_frequency(i + 1, i))
        out.write(f"  omega_{i + 1}{i}/2pi = {f:.4f} GHz\n")
    out.write("\n  dipole elements <i|delta|j>:\n")
    _write_matrix(out, levels.dipole)
    out.write("\n  derivative elements <i|d/ddelta|j> (signed):\n")
    _write_matrix(out, levels.momentum)
    out.write("\n  |<i|d/ddelta|j>| magnitudes:\n")
    _write_matrix(out, levels.momentum_magnitudes)
    out.write("\n  Signed diagonal derivative elements vanish for real"
              " bound states on a hard-wall\n  window; only off-diagonal"
              " magnitudes are physically meaningful couplings.\n")
    return out.getvalue()


def _write_matrix(out, m: np.ndarray) -> None:
    for row in m:
        out.write("    " + "  ".join(f"{v:10.4g}" for v in row) + "\n")


def levels_table(levels: LevelStructure) -> list[dict]:
    """Machine-readable rows (one per ordered level pair)."""
    rows = []
    for i in range(levels.n_levels):
        for j in range(levels.n_levels):
            rows.append({
                "i": i,
                "j": j,
                "omega_ij_rad_per_ns": float(levels.transition_frequencies[i, j]),
                "dipole": float(levels.dipole[i, j]),
                "momentum_signed": float(levels.momentum[i, j]),
                "momentum_abs": float(abs(levels.momentum[i, j])),
            })
    return rows
