"""Patient pool: spawn sampling, per-patient logistic survival decay, triage
weight escalation, countdown timers, and expiry."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Cell, TriageParams

STABLE, URGENT, CRITICAL = 1, 2, 3
WEIGHT_MAX = 3
LEVEL_NAMES = {STABLE: "stable", URGENT: "urgent", CRITICAL: "critical"}


@dataclass
class Patient:
    """One delivery task with an individually sampled deterioration profile.

    ``a`` and ``b`` parameterize the logistic survival curve, ``theta_serious``
    and ``theta_critical`` are the escalation thresholds, and the countdown
    timer starts at t_max and decreases by one per world step until delivery
    or expiry.
    """

    id: int
    loc: Cell
    spawn_level: int
    a: float
    b: float
    theta_serious: float
    theta_critical: float
    spawn_time: int
    timer_remaining: int
    delivered: bool = False
    expired: bool = False
    end_clock: int | None = None
    terminal_weight: int | None = None

    @property
    def active(self) -> bool:
        return not self.delivered and not self.expired


def survival(patient: Patient, t_elapsed: float) -> float:
    """Survival probability after ``t_elapsed`` steps: 1 / (1 + exp(a*t - b)).

    Strictly decreasing in elapsed time, strictly inside (0, 1).
    """
    return 1.0 / (1.0 + math.exp(patient.a * t_elapsed - patient.b))


def weight_from_survival(s: float, theta_serious: float, theta_critical: float,
                         floor: int = STABLE) -> int:
    """Map a survival probability to a triage weight, floored at ``floor``.

    The floor keeps a patient's weight from reporting below its spawn level
    while survival is still high.
    """
    if s < theta_critical:
        w = CRITICAL
    elif s < theta_serious:
        w = URGENT
    else:
        w = STABLE
    return max(w, floor)


def current_weight(patient: Patient, t_elapsed: float) -> int:
    return weight_from_survival(
        survival(patient, t_elapsed),
        patient.theta_serious,
        patient.theta_critical,
        patient.spawn_level,
    )


def spawn_patient(rng: np.random.Generator, free_cells: list[Cell], clock: int,
                  params: TriageParams, patient_id: int) -> Patient | None:
    """Sample one patient: uniform triage level, level-conditioned decay
    parameters, threshold pair resampled until separated by the margin, and a
    uniform location among ``free_cells``. Returns None when no cell is free.
    """
    if not free_cells:
        return None
    level = int(rng.integers(STABLE, CRITICAL + 1))
    a_range, b_range = {
        STABLE: (params.a_stable, params.b_stable),
        URGENT: (params.a_urgent, params.b_urgent),
        CRITICAL: (params.a_critical, params.b_critical),
    }[level]
    a = float(rng.uniform(a_range[0], a_range[1])) * params.decay_scale
    b = float(rng.uniform(b_range[0], b_range[1]))
    while True:
        theta_s = float(rng.uniform(*params.theta_serious))
        theta_c = float(rng.uniform(*params.theta_critical))
        if theta_c < theta_s - params.theta_margin:
            break
    loc = free_cells[int(rng.integers(len(free_cells)))]
    return Patient(
        id=patient_id,
        loc=loc,
        spawn_level=level,
        a=a,
        b=b,
        theta_serious=theta_s,
        theta_critical=theta_c,
        spawn_time=clock,
        timer_remaining=params.t_max,
    )


class PatientPool:
    """All patients spawned so far, in spawn order (patient id == list index)."""

    def __init__(self, params: TriageParams):
        self.params = params
        self.patients: list[Patient] = []

    def __len__(self) -> int:
        return len(self.patients)

    def can_spawn(self) -> bool:
        return len(self.patients) < self.params.max_patients

    def active_patients(self) -> list[Patient]:
        return [p for p in self.patients if p.active]

    def active_patient_at(self, cell: Cell) -> Patient | None:
        for p in self.patients:
            if p.active and p.loc == cell:
                return p
        return None

    def spawn(self, rng: np.random.Generator, free_cells: list[Cell],
              clock: int) -> Patient | None:
        if not self.can_spawn():
            return None
        patient = spawn_patient(rng, free_cells, clock, self.params, len(self.patients))
        if patient is not None:
            self.patients.append(patient)
        return patient

    def deliver(self, patient: Patient, clock: int, end_clock: int) -> None:
        patient.delivered = True
        patient.end_clock = end_clock
        patient.terminal_weight = current_weight(patient, clock - patient.spawn_time)

    def tick_all(self, end_clock: int) -> list[Patient]:
        """Decrement every active patient's timer; return the newly expired.

        A timer reaching zero marks the patient expired with the weight it
        held at expiry (elapsed time equals the full countdown).
        """
        expired = []
        for p in self.patients:
            if not p.active:
                continue
            p.timer_remaining -= 1
            if p.timer_remaining <= 0:
                p.timer_remaining = 0
                p.expired = True
                p.end_clock = end_clock
                p.terminal_weight = current_weight(p, self.params.t_max)
                expired.append(p)
        return expired
