"""Two capacitively coupled qubits: invariant subspaces and the swap passage.

With identical junctions the coupled circuit conserves the total excitation
number under the rotating-wave coupling, so the nine-level product space
splits into blocks {00}, {01,10}, {02,11,20}, {12,21}, {22}.  The chirp
current on qubit 2 sweeps the {01,10} detuning through zero; crossing the
resulting avoided crossing slowly exchanges the single-excitation
populations, which is the passage underlying the iSWAP gate.

Couplings are built from the signed derivative matrix elements through
p_ij = -i hbar p'_ij, so a coupling between |ij> and |kl> carries the factor
-(2pi/Phi0)^2 hbar^2 p'_.. p'_.. / C_m_eff.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .circuit import CircuitParams, LevelStructure, solve_bound_states
from .constants import FLUX_QUANTUM, HBAR
from .dynamics import TimeDependentHamiltonian, TrajectoryResult, basis_state, evolve
from .errors import MissingMatrixElement, NoCoupling, WindowTooShort
from .pulses import PulseShape, linear_ramp

DEFAULT_DT = 0.01
#: Chirp rate of the reference passage, nA/ns.
DEFAULT_CHIRP_RATE = 2.0
#: Half-window of the reference passage (ns).  The end detuning must dominate
#: the coupling, and the residual boundary mixing interferes between the two
#: adiabatic paths, so the default is placed at an interference maximum found
#: by scanning half-windows near 150 ns against the reference level data.
DEFAULT_HALF_WINDOW = 165.0
#: Minimum boundary detuning-to-coupling ratio accepted without error.
MIN_EDGE_RATIO = 4.0

SUBSPACE_LABELS = {
    1: ("00",),
    2: ("01", "10"),
    3: ("02", "11", "20"),
}


def renormalized_capacitances(c_j_pf: float, c_m_pf: float
                              ) -> tuple[float, float, float]:
    """(zeta, renormalized junction capacitance, effective coupling capacitance).

    zeta = C_m / (C_J + C_m); the junction capacitance renormalizes to
    C_J (1 + zeta) and the coupling enters through C_J (1 + zeta) / zeta.
    Raises NoCoupling when C_m is zero.
    """
    if c_j_pf <= 0:
        raise ValueError("junction capacitance must be positive")
    if c_m_pf < 0:
        raise ValueError("coupling capacitance cannot be negative")
    if c_m_pf == 0:
        raise NoCoupling("zero coupling capacitance")
    zeta = c_m_pf / (c_j_pf + c_m_pf)
    cbar_j = c_j_pf * (1.0 + zeta)
    cbar_m = c_j_pf * (1.0 + zeta) / zeta
    return zeta, cbar_j, cbar_m


def coupling_capacitance_from_zeta(c_j_pf: float, zeta: float) -> float:
    """Invert zeta = C_m / (C_J + C_m)."""
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    return zeta * c_j_pf / (1.0 - zeta)


@dataclasses.dataclass(frozen=True)
class CoupledCircuitParams:
    """Two identical flux-biased junctions with a coupling capacitance."""

    qubit: CircuitParams
    coupling_capacitance_pf: float

    def __post_init__(self):
        renormalized_capacitances(self.qubit.junction_capacitance_pf,
                                  self.coupling_capacitance_pf)

    @classmethod
    def from_zeta(cls, qubit: CircuitParams, zeta: float) -> "CoupledCircuitParams":
        c_m = coupling_capacitance_from_zeta(qubit.junction_capacitance_pf, zeta)
        return cls(qubit=qubit, coupling_capacitance_pf=c_m)

    @property
    def zeta(self) -> float:
        return renormalized_capacitances(self.qubit.junction_capacitance_pf,
                                         self.coupling_capacitance_pf)[0]

    @property
    def renormalized_junction_capacitance_pf(self) -> float:
        return renormalized_capacitances(self.qubit.junction_capacitance_pf,
                                         self.coupling_capacitance_pf)[1]

    @property
    def effective_coupling_capacitance_pf(self) -> float:
        return renormalized_capacitances(self.qubit.junction_capacitance_pf,
                                         self.coupling_capacitance_pf)[2]

    @property
    def coupling_rate_base(self) -> float:
        """(2pi/Phi0)^2 hbar / C_m_eff in rad/ns per p'-product."""
        cbar_m = self.effective_coupling_capacitance_pf * 1e-12
        return (2.0 * math.pi / FLUX_QUANTUM) ** 2 * HBAR / cbar_m * 1e-9

    def single_qubit_params(self) -> CircuitParams:
        """Per-qubit circuit with the renormalized junction capacitance."""
        return self.qubit.with_capacitance_scale(1.0 + self.zeta)


def solve_coupled_levels(params: CoupledCircuitParams,
                         n_levels: int = 4) -> LevelStructure:
    """Bound states of one junction inside the coupled circuit."""
    return solve_bound_states(params.single_qubit_params(), n_levels=n_levels)


def _signed_coupling(params: CoupledCircuitParams, levels: LevelStructure,
                     i1: int, j1: int, i2: int, j2: int) -> float:
    """Coupling (2pi/Phi0)^2 p_i1j1 p_i2j2 / C_m_eff with p = -i hbar p'."""
    p = levels.momentum
    n = levels.n_levels
    for a, b in ((i1, j1), (i2, j2)):
        if a >= n or b >= n:
            raise MissingMatrixElement(f"derivative element ({a},{b}) not solved")
    return -params.coupling_rate_base * float(p[i1, j1] * p[i2, j2])


@dataclasses.dataclass(frozen=True)
class SubspaceModel:
    """One invariant block of the coupled dynamics."""

    tag: int
    labels: tuple[str, ...]
    hamiltonian: TimeDependentHamiltonian
    couplings: dict
    splitting_gap: float


def swap_coupling(params: CoupledCircuitParams, levels: LevelStructure) -> float:
    """Signed coupling between |01> and |10> in rad/ns.

    Pairs the elements as p_01 (qubit 1) with p_10 (qubit 2), the form the
    interaction expansion produces; the resulting sign is positive for real
    bound states and is unobservable in populations.
    """
    return _signed_coupling(params, levels, 0, 1, 1, 0)


def subspace_detuning_rate(params: CoupledCircuitParams,
                           levels: LevelStructure) -> float:
    """d(Delta)/dI for the {01,10} block, rad/ns per nA of chirp current."""
    d = levels.dipole
    return params.qubit.stark_rate_per_na * float(d[1, 1] - d[0, 0])


def build_subspace_hamiltonians(params: CoupledCircuitParams,
                                levels: LevelStructure,
                                stark: PulseShape,
                                include_diagonal_offsets: bool = False,
                                ) -> tuple[SubspaceModel, SubspaceModel, SubspaceModel]:
    """The three blocks reachable from the computational states.

    stark is the chirp current on qubit 2 (nA).  Signed diagonal derivative
    elements vanish for real hard-wall eigenfunctions, so the constant
    p_ii p_jj diagonal terms are zero; `include_diagonal_offsets` keeps the
    slots in place so the global-phase invariance of such offsets can be
    exercised with synthetic values.
    """
    d = levels.dipole
    if levels.n_levels < 3:
        raise MissingMatrixElement("need three levels per qubit")
    stark_rate = params.qubit.stark_rate_per_na
    theta = levels.anharmonicity_gap

    # {00}: scalar energy, pure phase.
    d00 = float(d[0, 0])
    p_offset_00 = (-params.coupling_rate_base
                   * float(levels.momentum[0, 0] ** 2))
    offset_00 = p_offset_00 if include_diagonal_offsets else 0.0

    def h1(t: float) -> np.ndarray:
        return np.array([[-stark_rate * stark(t) * d00 + offset_00]],
                        dtype=complex)

    # {01, 10}: displayed 2x2 with the detuning on the |10> diagonal.
    omega_swap = swap_coupling(params, levels)
    d_gap = float(d[1, 1] - d[0, 0])

    def h2(t: float) -> np.ndarray:
        det = stark_rate * stark(t) * d_gap
        return np.array([[0.0, omega_swap], [omega_swap, det]], dtype=complex)

    # {02, 11, 20}: static-phase 3x3 with the frame offsets on the outer states.
    omega_ab = _signed_coupling(params, levels, 1, 0, 1, 2)
    omega_ac = _signed_coupling(params, levels, 2, 0, 0, 2)
    omega_cb = _signed_coupling(params, levels, 1, 2, 1, 0)
    d22, d11, d00v = float(d[2, 2]), float(d[1, 1]), float(d[0, 0])

    def h3(t: float) -> np.ndarray:
        i_dc = stark(t)
        e_a = -stark_rate * i_dc * d22 - theta
        e_b = -stark_rate * i_dc * d11
        e_c = -stark_rate * i_dc * d00v - theta
        return np.array([
            [e_a, omega_ab, omega_ac],
            [omega_ab, e_b, omega_cb],
            [omega_ac, omega_cb, e_c]], dtype=complex)

    m1 = SubspaceModel(1, SUBSPACE_LABELS[1],
                       TimeDependentHamiltonian(1, h1, basis_labels=("00",)),
                       {"diag_offset": p_offset_00}, theta)
    m2 = SubspaceModel(2, SUBSPACE_LABELS[2],
                       TimeDependentHamiltonian(2, h2, basis_labels=("01", "10")),
                       {"swap": omega_swap}, theta)
    m3 = SubspaceModel(3, SUBSPACE_LABELS[3],
                       TimeDependentHamiltonian(3, h3,
                                                basis_labels=("02", "11", "20")),
                       {"ab": omega_ab, "ac": omega_ac, "cb": omega_cb}, theta)
    return m1, m2, m3


def resonant_swap_period(params: CoupledCircuitParams,
                         levels: LevelStructure) -> float:
    """Time for one complete population swap at zero detuning, pi/(2|coupling|)."""
    coupling = abs(swap_coupling(params, levels))
    if coupling == 0.0:
        raise NoCoupling("swap coupling vanished")
    return math.pi / (2.0 * coupling)


@dataclasses.dataclass
class TwoQubitResult:
    """Swap-passage outcome across the three invariant blocks."""

    swap_fidelity: float
    spectator_min: float           # min_t P(|11>)
    leakage_max: float             # max_t (P02 + P20)
    window: tuple[float, float]
    chirp_rate: float
    swap_coupling: float
    edge_ratio: float
    trajectory_single: TrajectoryResult   # {01,10} block, start |10>
    trajectory_double: TrajectoryResult   # {02,11,20} block, start |11>

    @property
    def success(self) -> bool:
        return (self.swap_fidelity >= 0.98 and self.spectator_min >= 0.98
                and self.leakage_max <= 0.02)


def run_iswap_passage(params: CoupledCircuitParams, levels: LevelStructure,
                      chirp_rate: float = DEFAULT_CHIRP_RATE,
                      window: tuple[float, float] | None = None,
                      dt: float = DEFAULT_DT,
                      min_edge_ratio: float = MIN_EDGE_RATIO) -> TwoQubitResult:
    """Chirped swap passage: |10> -> |01> while |00> and |11> stand still.

    The chirp current gamma * t must cross zero inside the window and the
    boundary detuning must dominate the coupling (WindowTooShort otherwise).
    Simulates the {01,10} and {02,11,20} blocks; {00} is one-dimensional and
    invariant by construction.
    """
    if window is None:
        window = (-DEFAULT_HALF_WINDOW, DEFAULT_HALF_WINDOW)
    t0, tf = window
    if not t0 < 0.0 < tf:
        raise ValueError("chirp must cross zero inside the window")

    stark = linear_ramp(chirp_rate, 0.0)
    _, m2, m3 = build_subspace_hamiltonians(params, levels, stark)
    coupling = abs(m2.couplings["swap"])
    det_rate = abs(subspace_detuning_rate(params, levels))
    edge_ratio = det_rate * chirp_rate * min(abs(t0), tf) / coupling
    if edge_ratio < min_edge_ratio:
        raise WindowTooShort(
            f"boundary detuning/coupling ratio {edge_ratio:.2f} is below "
            f"{min_edge_ratio}; widen the window or raise the chirp rate")

    traj2 = evolve(m2.hamiltonian, basis_state(1, 2), t0, tf, dt)
    traj3 = evolve(m3.hamiltonian, basis_state(1, 3), t0, tf, dt)

    return TwoQubitResult(
        swap_fidelity=float(traj2.final_populations[0]),
        spectator_min=float(traj3.populations[:, 1].min()),
        leakage_max=float((traj3.populations[:, 0]
                           + traj3.populations[:, 2]).max()),
        window=window,
        chirp_rate=chirp_rate,
        swap_coupling=m2.couplings["swap"],
        edge_ratio=float(edge_ratio),
        trajectory_single=traj2,
        trajectory_double=traj3,
    )


def stark_shift_ratio(params: CircuitParams, levels: LevelStructure,
                      i_dc_na: float) -> float:
    """Fractional change of the qubit frequency under a static chirp current.

    Re-solves the bound states with the linear Stark term added to the
    potential and compares the 0-1 transition to the unperturbed `levels`.
    """
    if i_dc_na == 0.0:
        return 0.0
    shifted = solve_bound_states(params, n_levels=2, i_dc_na=i_dc_na)
    base = levels.transition_frequency(1, 0)
    return (shifted.transition_frequency(1, 0) - base) / base


# ---------------------------------------------------------------------------
# Full nine-level assembly, used only to verify the block structure.
# ---------------------------------------------------------------------------

NINE_LEVEL_LABELS = ("00", "01", "10", "02", "11", "20", "12", "21", "22")
NINE_LEVEL_BLOCKS = (("00",), ("01", "10"), ("02", "11", "20"),
                     ("12", "21"), ("22",))


def assemble_nine_level_model(params: CoupledCircuitParams,
                              levels: LevelStructure,
                              stark: PulseShape) -> TimeDependentHamiltonian:
    """Rotating-wave nine-level Hamiltonian in the static-phase frame.

    Excitation-number-ordered basis; the matrix is exactly block diagonal in
    the invariant subspaces because the rotating-wave coupling only connects
    states of equal total excitation.
    """
    d = levels.dipole
    p = levels.momentum
    stark_rate = params.qubit.stark_rate_per_na
    theta = levels.anharmonicity_gap
    idx = {lbl: k for k, lbl in enumerate(NINE_LEVEL_LABELS)}

    static = np.zeros((9, 9))

    def couple(a: str, b: str, i1, j1, i2, j2):
        value = -params.coupling_rate_base * float(p[i1, j1] * p[i2, j2])
        static[idx[a], idx[b]] += value
        static[idx[b], idx[a]] += value

    # Exchange terms |ij><ji| for i != j.
    couple("01", "10", 0, 1, 1, 0)
    couple("02", "20", 0, 2, 2, 0)
    couple("12", "21", 1, 2, 2, 1)
    # Double-transition terms inside the two-excitation block.
    couple("02", "11", 0, 1, 2, 1)
    couple("20", "11", 2, 1, 0, 1)

    # Frame offsets: the |i, 2-i>-style outer states of the two-excitation
    # block rotate at theta relative to |11>.
    frame = np.zeros(9)
    frame[idx["02"]] = -theta
    frame[idx["20"]] = -theta
    # One-excitation and three-excitation blocks need no offsets (their
    # couplings are already static); diagonal stark terms are exact.

    # Chirp acts on qubit 2 only: weight each |ij> by d_jj of its second index.
    stark_weights = np.array([float(d[int(lbl[1]), int(lbl[1])])
                              for lbl in NINE_LEVEL_LABELS])

    def generator(t: float) -> np.ndarray:
        diag = -stark_rate * stark(t) * stark_weights + frame
        return (static + np.diag(diag)).astype(complex)

    return TimeDependentHamiltonian(9, generator, frame="reduced",
                                    basis_labels=NINE_LEVEL_LABELS)


def block_index_sets() -> list[list[int]]:
    idx = {lbl: k for k, lbl in enumerate(NINE_LEVEL_LABELS)}
    return [[idx[lbl] for lbl in block] for block in NINE_LEVEL_BLOCKS]


def subspace_invariance_check(model: TimeDependentHamiltonian,
                              initial_label: str,
                              window: tuple[float, float],
                              dt: float = DEFAULT_DT) -> float:
    """Propagate a basis state and report the peak probability outside its block."""
    idx = {lbl: k for k, lbl in enumerate(NINE_LEVEL_LABELS)}
    start = idx[initial_label]
    block = next(b for b in block_index_sets() if start in b)
    outside = [k for k in range(9) if k not in block]
    traj = evolve(model, basis_state(start, 9), window[0], window[1], dt)
    if not outside:
        return 0.0
    return float(traj.populations[:, outside].sum(axis=1).max())
