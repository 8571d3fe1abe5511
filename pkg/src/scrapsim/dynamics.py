"""Time-dependent Schrödinger propagation for small Hermitian systems.

The stepper is the midpoint-sampled matrix exponential,
psi(t + dt) = exp(-i H(t + dt/2) dt) psi(t), evaluated through the
eigendecomposition of H so each step is unitary to roundoff.  Instantaneous
eigenvectors are tracked with a phase gauge fixed by overlap with the
previous step, which works uniformly for 2-, 3-, and 9-level models.
"""

from __future__ import annotations

import dataclasses
import warnings
from typing import Callable, Sequence

import numpy as np

from .errors import DegeneracyWarning, FrameMismatch, StepFailure

HERMITICITY_ATOL = 1e-12
NORM_DRIFT_BUDGET = 1e-9
DEGENERACY_GAP = 1e-6
MAX_STEP_HALVINGS = 6


@dataclasses.dataclass(frozen=True)
class TimeDependentHamiltonian:
    """Dimension, matrix generator H(t) in rad/ns, and a frame tag."""

    dimension: int
    generator: Callable[[float], np.ndarray]
    frame: str = "reduced"
    basis_labels: tuple[str, ...] | None = None

    def __call__(self, t: float) -> np.ndarray:
        return self.generator(t)

    def sample(self, t: float) -> np.ndarray:
        """Evaluate and verify Hermiticity at time t."""
        h = np.asarray(self.generator(t), dtype=complex)
        if h.shape != (self.dimension, self.dimension):
            raise ValueError(f"generator returned shape {h.shape}")
        if np.abs(h - h.conj().T).max() > HERMITICITY_ATOL:
            raise ValueError(f"Hamiltonian not Hermitian at t = {t}")
        return h


def state_vector(amplitudes: Sequence[complex], dim: int | None = None) -> np.ndarray:
    """Normalized complex state vector; raises if the input norm is off."""
    psi = np.asarray(amplitudes, dtype=complex)
    if dim is not None and psi.shape != (dim,):
        raise ValueError(f"state has shape {psi.shape}, expected ({dim},)")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"state norm {norm} is not 1 within 1e-9")
    return psi / norm


def basis_state(index: int, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


@dataclasses.dataclass
class TrajectoryResult:
    """Propagation output on a uniform time grid."""

    times: np.ndarray                  # (n_t,)
    states: np.ndarray                 # (n_t, n) complex
    populations: np.ndarray            # (n_t, n) diabatic |c_i|^2
    adiabatic_populations: np.ndarray  # (n_t, n) |<lambda_k|psi>|^2
    eigenvalues: np.ndarray            # (n_t, n) instantaneous, ascending
    norm_drift: float
    dt: float

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]


def instantaneous_eigensystem(h: np.ndarray,
                              previous_vectors: np.ndarray | None = None,
                              warn_on_degeneracy: bool = True,
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and gauge-fixed eigenvectors of a Hermitian matrix.

    With no previous vectors, each eigenvector's largest-magnitude component
    is rotated to be real positive.  Otherwise the phase maximizes overlap
    with the matching previous vector.  Warns when the minimum gap is below
    the degeneracy threshold (tracking unreliable there).
    """
    vals, vecs = np.linalg.eigh(h)
    if len(vals) > 1 and warn_on_degeneracy:
        if np.min(np.diff(vals)) < DEGENERACY_GAP:
            warnings.warn("near-degenerate spectrum; eigenvector continuity "
                          "tracking is unreliable", DegeneracyWarning,
                          stacklevel=2)
    if previous_vectors is None:
        for k in range(vecs.shape[1]):
            lead = vecs[np.argmax(np.abs(vecs[:, k])), k]
            if lead != 0:
                vecs[:, k] *= np.conj(lead) / abs(lead)
    else:
        overlaps = np.einsum("ik,ik->k", previous_vectors.conj(), vecs)
        for k, z in enumerate(overlaps):
            if abs(z) > 1e-12:
                vecs[:, k] *= np.conj(z) / abs(z)
    return vals, vecs


def evolve(hamiltonian: TimeDependentHamiltonian, psi0: np.ndarray,
           t_start: float, t_end: float, dt: float,
           warn_on_degeneracy: bool = False) -> TrajectoryResult:
    """Propagate i dpsi/dt = H(t) psi with the midpoint exponential stepper.

    The result carries diabatic and adiabatic populations and the tracked
    instantaneous eigenvalues on the same grid.  If the norm drifts beyond
    budget the step is halved and the run repeated (StepFailure after the
    retry limit); with the unitary stepper this is effectively never needed.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    psi0 = state_vector(psi0, hamiltonian.dimension)

    current_dt = dt
    for _ in range(MAX_STEP_HALVINGS + 1):
        result = _propagate(hamiltonian, psi0, t_start, t_end, current_dt,
                            warn_on_degeneracy)
        if result.norm_drift <= NORM_DRIFT_BUDGET:
            return result
        current_dt /= 2.0
    raise StepFailure(
        f"norm drift {result.norm_drift:.2e} exceeds {NORM_DRIFT_BUDGET} "
        f"even at dt = {current_dt * 2.0}")


def _propagate(hamiltonian, psi0, t_start, t_end, dt, warn_on_degeneracy):
    n_steps = max(int(round((t_end - t_start) / dt)), 1)
    actual_dt = (t_end - t_start) / n_steps
    dim = hamiltonian.dimension

    times = t_start + actual_dt * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, dim), dtype=complex)
    eigenvalues = np.empty((n_steps + 1, dim))
    adiabatic = np.empty((n_steps + 1, dim))

    psi = psi0.copy()
    states[0] = psi
    vals, vecs = instantaneous_eigensystem(
        hamiltonian.sample(t_start), None, warn_on_degeneracy)
    eigenvalues[0] = vals
    adiabatic[0] = np.abs(vecs.conj().T @ psi) ** 2

    for k in range(n_steps):
        h_mid = hamiltonian.sample(times[k] + 0.5 * actual_dt)
        mid_vals, mid_vecs = np.linalg.eigh(h_mid)
        phases = np.exp(-1j * mid_vals * actual_dt)
        psi = mid_vecs @ (phases * (mid_vecs.conj().T @ psi))
        states[k + 1] = psi

        vals, vecs = instantaneous_eigensystem(
            hamiltonian.sample(times[k + 1]), vecs, warn_on_degeneracy)
        eigenvalues[k + 1] = vals
        adiabatic[k + 1] = np.abs(vecs.conj().T @ psi) ** 2

    norms = np.linalg.norm(states, axis=1)
    return TrajectoryResult(
        times=times,
        states=states,
        populations=np.abs(states) ** 2,
        adiabatic_populations=adiabatic,
        eigenvalues=eigenvalues,
        norm_drift=float(np.abs(norms - 1.0).max()),
        dt=actual_dt,
    )


def adiabatic_populations(trajectory: TrajectoryResult,
                          hamiltonian: TimeDependentHamiltonian,
                          warn_on_degeneracy: bool = False) -> np.ndarray:
    """Project stored states onto the gauge-tracked instantaneous eigenbasis."""
    out = np.empty_like(trajectory.populations)
    vecs = None
    for k, t in enumerate(trajectory.times):
        _, vecs = instantaneous_eigensystem(
            hamiltonian.sample(t), vecs, warn_on_degeneracy)
        out[k] = np.abs(vecs.conj().T @ trajectory.states[k]) ** 2
    return out


def pi_pulse_analytic(pulse_area: float) -> float:
    """Excited-state probability (1 - cos A)/2 after a resonant pulse of area A."""
    return 0.5 * (1.0 - np.cos(pulse_area))


def frame_shift(amplitudes: Callable[[float], np.ndarray],
                phase_exponents: np.ndarray,
                carrier_offsets: Sequence[float],
                dimension: int,
                frame: str = "reduced") -> TimeDependentHamiltonian:
    """Fold oscillatory factors exp(i phi_jk t) into static diagonal offsets.

    The interaction-picture matrix is A_jk(t) exp(i phi_jk t).  Given per-state
    offsets d with phi_jk = d_j - d_k, the equivalent static-phase matrix is
    A(t) + diag(d).  Raises FrameMismatch when any declared phase has no
    matching offset difference.
    """
    phase_exponents = np.asarray(phase_exponents, dtype=float)
    offsets = np.asarray(carrier_offsets, dtype=float)
    if phase_exponents.shape != (dimension, dimension):
        raise ValueError("phase exponent matrix has the wrong shape")
    if offsets.shape != (dimension,):
        raise ValueError("need one carrier offset per basis state")
    expected = offsets[:, None] - offsets[None, :]
    mismatch = np.abs(phase_exponents - expected)
    if mismatch.max() > 1e-12:
        j, k = np.unravel_index(int(np.argmax(mismatch)), mismatch.shape)
        raise FrameMismatch(
            f"oscillatory term ({j},{k}) has exponent {phase_exponents[j, k]} "
            f"but the declared offsets give {expected[j, k]}")

    def generator(t: float) -> np.ndarray:
        return np.asarray(amplitudes(t), dtype=complex) + np.diag(offsets)

    return TimeDependentHamiltonian(dimension, generator, frame=frame)


def oscillatory_hamiltonian(amplitudes: Callable[[float], np.ndarray],
                            phase_exponents: np.ndarray,
                            dimension: int) -> TimeDependentHamiltonian:
    """Interaction-picture form with the oscillatory factors kept explicit."""
    phase_exponents = np.asarray(phase_exponents, dtype=float)

    def generator(t: float) -> np.ndarray:
        return (np.asarray(amplitudes(t), dtype=complex)
                * np.exp(1j * phase_exponents * t))

    return TimeDependentHamiltonian(dimension, generator, frame="interaction")


def trajectory_csv_rows(trajectory: TrajectoryResult) -> tuple[list[str], np.ndarray]:
    """Header and data block for the canonical trajectory CSV layout."""
    n = trajectory.states.shape[1]
    header = (["t_ns"]
              + [f"p{i}" for i in range(n)]
              + [f"adiabatic_p{i}" for i in range(n)]
              + [f"mu{i}_rad_per_ns" for i in range(n)]
              + ["norm"])
    norms = np.linalg.norm(trajectory.states, axis=1)
    block = np.column_stack([
        trajectory.times,
        trajectory.populations,
        trajectory.adiabatic_populations,
        trajectory.eigenvalues,
        norms,
    ])
    return header, block
