"""Pulse shapes, two-channel schedules, mixing angle, adiabaticity margin.

Amplitudes are drive currents in nA; times in ns.  A schedule carries a pump
channel (resonant microwave envelope) and a Stark channel (slow dc current)
over a finite window, plus the pump carrier frequency.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import DegenerateGap, DegenerateMixingAngle

PULSE_KINDS = ("gaussian", "linear_ramp", "constant", "zero")


@dataclasses.dataclass(frozen=True)
class PulseShape:
    """One of four parametric envelopes with an optional hard clip window.

    gaussian:    amplitude * exp(-((t - center)/width)^2)
    linear_ramp: slope * (t - start)
    constant:    amplitude
    zero:        0
    Outside [clip_on, clip_off] the value is exactly zero.
    """

    kind: str
    amplitude_na: float = 0.0
    center_ns: float = 0.0
    width_ns: float = 1.0
    slope_na_per_ns: float = 0.0
    start_ns: float = 0.0
    clip_on_ns: float | None = None
    clip_off_ns: float | None = None

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.kind == "gaussian" and self.width_ns <= 0:
            raise ValueError("gaussian width must be positive")

    def __call__(self, t):
        return evaluate(self, t)

    def scaled(self, factor: float) -> "PulseShape":
        """Copy with the overall amplitude multiplied by `factor`."""
        return dataclasses.replace(
            self,
            amplitude_na=self.amplitude_na * factor,
            slope_na_per_ns=self.slope_na_per_ns * factor,
        )

    def time_reversed(self) -> "PulseShape":
        """Shape g with g(t) = f(-t)."""
        return dataclasses.replace(
            self,
            center_ns=-self.center_ns,
            slope_na_per_ns=-self.slope_na_per_ns,
            start_ns=-self.start_ns,
            clip_on_ns=None if self.clip_off_ns is None else -self.clip_off_ns,
            clip_off_ns=None if self.clip_on_ns is None else -self.clip_on_ns,
        )

    def time_dilated(self, factor: float) -> "PulseShape":
        """Shape g with g(t) = f(t / factor)."""
        return dataclasses.replace(
            self,
            center_ns=self.center_ns * factor,
            width_ns=self.width_ns * factor,
            slope_na_per_ns=self.slope_na_per_ns / factor,
            start_ns=self.start_ns * factor,
            clip_on_ns=None if self.clip_on_ns is None else self.clip_on_ns * factor,
            clip_off_ns=None if self.clip_off_ns is None else self.clip_off_ns * factor,
        )


def gaussian(amplitude_na: float, center_ns: float, width_ns: float,
             clip: tuple[float, float] | None = None) -> PulseShape:
    on, off = clip if clip else (None, None)
    return PulseShape("gaussian", amplitude_na=amplitude_na,
                      center_ns=center_ns, width_ns=width_ns,
                      clip_on_ns=on, clip_off_ns=off)


def linear_ramp(slope_na_per_ns: float, start_ns: float = 0.0,
                clip: tuple[float, float] | None = None) -> PulseShape:
    on, off = clip if clip else (None, None)
    return PulseShape("linear_ramp", slope_na_per_ns=slope_na_per_ns,
                      start_ns=start_ns, clip_on_ns=on, clip_off_ns=off)


def constant(amplitude_na: float) -> PulseShape:
    return PulseShape("constant", amplitude_na=amplitude_na)


def zero() -> PulseShape:
    return PulseShape("zero")


def evaluate(pulse: PulseShape, t):
    """Pointwise pulse amplitude in nA; scalar in, scalar out."""
    t_arr = np.asarray(t, dtype=float)
    if pulse.kind == "gaussian":
        v = pulse.amplitude_na * np.exp(
            -((t_arr - pulse.center_ns) / pulse.width_ns) ** 2)
    elif pulse.kind == "linear_ramp":
        v = pulse.slope_na_per_ns * (t_arr - pulse.start_ns)
    elif pulse.kind == "constant":
        v = np.full_like(t_arr, pulse.amplitude_na)
    else:
        v = np.zeros_like(t_arr)
    if pulse.clip_on_ns is not None:
        v = np.where(t_arr < pulse.clip_on_ns, 0.0, v)
    if pulse.clip_off_ns is not None:
        v = np.where(t_arr > pulse.clip_off_ns, 0.0, v)
    return v if v.ndim else float(v)


@dataclasses.dataclass(frozen=True)
class PulseSchedule:
    """Pump and Stark channels over a window, with the pump carrier in rad/ns."""

    pump: PulseShape
    stark: PulseShape
    window: tuple[float, float]
    carrier: float

    def __post_init__(self):
        t0, tf = self.window
        if not t0 < tf:
            raise ValueError("schedule window must have t0 < tf")

    @property
    def duration(self) -> float:
        return self.window[1] - self.window[0]

    def with_pump_scale(self, factor: float) -> "PulseSchedule":
        return dataclasses.replace(self, pump=self.pump.scaled(factor))

    def with_stark_scale(self, factor: float) -> "PulseSchedule":
        return dataclasses.replace(self, stark=self.stark.scaled(factor))

    def time_reversed(self) -> "PulseSchedule":
        t0, tf = self.window
        return dataclasses.replace(self, pump=self.pump.time_reversed(),
                                   stark=self.stark.time_reversed(),
                                   window=(-tf, -t0))

    def time_dilated(self, factor: float) -> "PulseSchedule":
        t0, tf = self.window
        return dataclasses.replace(self, pump=self.pump.time_dilated(factor),
                                   stark=self.stark.time_dilated(factor),
                                   window=(t0 * factor, tf * factor))


def mixing_angle(rabi_rate: float, detuning: float) -> float:
    """Angle theta in [0, pi/2] with tan(2 theta) = rabi_rate / detuning.

    Zero when the drive vanishes with positive detuning, pi/4 on resonance,
    pi/2 when the drive vanishes with negative detuning.  Raises
    DegenerateMixingAngle when both arguments are zero.
    """
    if rabi_rate == 0.0 and detuning == 0.0:
        raise DegenerateMixingAngle("rabi rate and detuning both zero")
    return 0.5 * math.atan2(abs(rabi_rate), detuning)


def mixing_angle_series(rabi_rate: np.ndarray, detuning: np.ndarray) -> np.ndarray:
    """Continuous mixing-angle samples along a schedule (unwrapped branch)."""
    two_theta = np.arctan2(np.abs(rabi_rate), np.asarray(detuning, dtype=float))
    return 0.5 * np.unwrap(two_theta)


@dataclasses.dataclass(frozen=True)
class AdiabaticityReport:
    """Mixing angle and adiabaticity margin along a schedule."""

    times: np.ndarray
    rabi_rate: np.ndarray
    detuning: np.ndarray
    theta: np.ndarray
    margin: np.ndarray          # eta(t), dimensionless
    angle_rate_ratio: np.ndarray  # |dtheta/dt| / gap, same quantity by identity
    min_gap: float
    max_margin: float
    threshold: float

    @property
    def adiabatic(self) -> bool:
        return self.max_margin <= self.threshold


def adiabaticity_margin(schedule: PulseSchedule, drive_converter,
                        dt: float = 0.001,
                        threshold: float = 0.1) -> AdiabaticityReport:
    """Evaluate eta(t) = |Omega dDelta/dt - Delta dOmega/dt| / 2 gap^3.

    `drive_converter(schedule, times)` must return the sampled Rabi rate
    Omega(t) and signed detuning Delta(t) in rad/ns.  Derivatives are taken
    by centered differences on the sample grid.  Raises DegenerateGap if the
    gap vanishes exactly anywhere in the window.
    """
    t0, tf = schedule.window
    n = max(int(round((tf - t0) / dt)) + 1, 5)
    times = np.linspace(t0, tf, n)
    rabi, det = drive_converter(schedule, times)
    rabi = np.asarray(rabi, dtype=float)
    det = np.asarray(det, dtype=float)

    gap_sq = rabi**2 + det**2
    if np.any(gap_sq == 0.0):
        t_bad = times[int(np.argmax(gap_sq == 0.0))]
        raise DegenerateGap(f"gap vanishes at t = {t_bad:.6g} ns")
    gap = np.sqrt(gap_sq)

    spacing = times[1] - times[0]
    d_rabi = np.gradient(rabi, spacing)
    d_det = np.gradient(det, spacing)

    eta = 0.5 * np.abs(rabi * d_det - det * d_rabi) / gap_sq**1.5

    theta = mixing_angle_series(rabi, det)
    d_theta = np.gradient(theta, spacing)
    ratio = np.abs(d_theta) / gap

    return AdiabaticityReport(
        times=times, rabi_rate=rabi, detuning=det, theta=theta,
        margin=eta, angle_rate_ratio=ratio,
        min_gap=float(gap.min()), max_margin=float(eta.max()),
        threshold=threshold)


# ---------------------------------------------------------------------------
# The two reference single-qubit schedules (amplitudes in nA, times in ns).
# The inversion schedule applies the Stark pulse first in effect (its wider
# envelope dominates early and late) with the pump switching off before it;
# the superposition schedule puts the Stark pulse strictly before the pump so
# the window ends pump-dominated.
# ---------------------------------------------------------------------------

INVERSION_PUMP = dict(amplitude_na=2.98, center_ns=0.0, width_ns=2.5)
INVERSION_STARK = dict(amplitude_na=5.0, center_ns=0.0, width_ns=5.0)
INVERSION_WINDOW = (-10.0, 10.0)

HADAMARD_PUMP = dict(amplitude_na=1.495, center_ns=0.0, width_ns=2.5)
HADAMARD_STARK = dict(amplitude_na=5.0, center_ns=-5.0, width_ns=2.5)
HADAMARD_WINDOW = (-10.0, 10.0)

# Chirped (ramp-Stark) inversion: the detuning sweeps through resonance while
# the pump is on, which makes the transfer insensitive to the pump amplitude.
CHIRP_RATE_NA_PER_NS = 60.0
CHIRP_PUMP = dict(amplitude_na=2.98, center_ns=0.0, width_ns=12.0)
CHIRP_WINDOW = (-25.0, 25.0)


def make_inversion_schedule(carrier: float) -> PulseSchedule:
    """Population-inversion schedule (concentric Gaussians, pump narrower)."""
    return PulseSchedule(
        pump=gaussian(**INVERSION_PUMP),
        stark=gaussian(**INVERSION_STARK),
        window=INVERSION_WINDOW,
        carrier=carrier,
    )


def make_hadamard_schedule(carrier: float) -> PulseSchedule:
    """Equal-superposition schedule (Stark pulse precedes the pump)."""
    return PulseSchedule(
        pump=gaussian(**HADAMARD_PUMP),
        stark=gaussian(**HADAMARD_STARK),
        window=HADAMARD_WINDOW,
        carrier=carrier,
    )


def make_chirped_inversion_schedule(carrier: float) -> PulseSchedule:
    """Amplitude-robust inversion: linear Stark ramp through resonance."""
    return PulseSchedule(
        pump=gaussian(**CHIRP_PUMP),
        stark=linear_ramp(CHIRP_RATE_NA_PER_NS, 0.0),
        window=CHIRP_WINDOW,
        carrier=carrier,
    )


@dataclasses.dataclass(frozen=True)
class ScheduleMixingSummary:
    """Boundary mixing angles of a schedule, for validation and reporting."""

    theta_start: float | None
    theta_end: float | None
    theta_constant: bool
    transfer_possible: bool


def schedule_mixing_summary(schedule: PulseSchedule, drive_converter,
                            dt: float = 0.01) -> ScheduleMixingSummary:
    """Measure boundary angles instead of assuming idealized values.

    A schedule whose mixing angle never moves (e.g. zero pump) cannot
    transfer population along an adiabatic path.
    """
    t0, tf = schedule.window
    n = max(int(round((tf - t0) / dt)) + 1, 5)
    times = np.linspace(t0, tf, n)
    rabi, det = drive_converter(schedule, times)
    gap_sq = np.asarray(rabi)**2 + np.asarray(det)**2
    ok = gap_sq > 0.0
    if not ok.any():
        return ScheduleMixingSummary(None, None, True, False)
    two_theta = np.arctan2(np.abs(rabi)[ok], np.asarray(det)[ok])
    theta = 0.5 * np.unwrap(two_theta)
    spread = float(theta.max() - theta.min())
    return ScheduleMixingSummary(
        theta_start=float(theta[0]),
        theta_end=float(theta[-1]),
        theta_constant=spread < 1e-6,
        transfer_possible=spread >= 1e-6,
    )
