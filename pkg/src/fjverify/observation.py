"""Observation-consistency predicates over binary output sequences.

An observed sequence y~(0..T) with tolerance kappa induces one predicate per
step: the margin kappa - H(y(t), y~(t)) must be nonnegative, where H is the
normalized Hamming distance. A trajectory is consistent iff every step's
predicate holds. Margins are compared in exact rational arithmetic: Hamming
distances are multiples of 1/n, so a mismatch count is tested against
floor(kappa * n) with no floating-point boundary ambiguity.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .dynamics import Trajectory, as_fraction, hamming


@dataclass(frozen=True)
class ObservationSpec:
    observed: np.ndarray  # (T+1, n) uint8
    kappa: Fraction

    def __post_init__(self):
        obs = np.asarray(self.observed, dtype=np.uint8)
        obs.setflags(write=False)
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "kappa", as_fraction(self.kappa))
        if obs.ndim != 2:
            raise ValueError("observations must be a (time, agent) array")
        if not np.all((obs == 0) | (obs == 1)):
            raise ValueError("observations must be binary")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")

    @property
    def horizon(self) -> int:
        return self.observed.shape[0] - 1

    @property
    def n(self) -> int:
        return self.observed.shape[1]

    def with_kappa(self, kappa) -> "ObservationSpec":
        return ObservationSpec(observed=self.observed, kappa=as_fraction(kappa))

    def mismatch_budget(self) -> int:
        """Largest mismatch count per step still within tolerance."""
        return math.floor(self.kappa * self.n)


def predicate_value(y, spec: ObservationSpec, t: int) -> Fraction:
    """Margin kappa - H(y, y~(t)); the step predicate holds iff it is >= 0."""
    if not 0 <= t <= spec.horizon:
        raise IndexError(f"step {t} outside observed horizon 0..{spec.horizon}")
    return spec.kappa - hamming(y, spec.observed[t])


def mismatch_counts(outputs: np.ndarray, spec: ObservationSpec) -> np.ndarray:
    """Per-step disagreement counts between outputs and the observations."""
    outputs = np.asarray(outputs, dtype=np.uint8)
    if outputs.shape[1] != spec.n:
        raise ValueError("agent count differs from the observations")
    if outputs.shape[0] < spec.horizon + 1:
        raise ValueError("trajectory shorter than the observed horizon")
    window = outputs[: spec.horizon + 1]
    return (window != spec.observed).sum(axis=1)


def first_violation(outputs: np.ndarray, spec: ObservationSpec) -> int | None:
    """Index of the first step whose predicate fails, or None."""
    bad = np.nonzero(mismatch_counts(outputs, spec) > spec.mismatch_budget())[0]
    return int(bad[0]) if bad.size else None


def satisfies(traj: Trajectory | np.ndarray, spec: ObservationSpec) -> bool:
    """True iff every step t = 0..T stays within the tolerance."""
    outputs = traj.outputs if isinstance(traj, Trajectory) else traj
    return first_violation(outputs, spec) is None


def robustness(traj: Trajectory | np.ndarray, spec: ObservationSpec) -> Fraction:
    """Worst per-step margin; nonnegative exactly when satisfies() holds."""
    outputs = traj.outputs if isinstance(traj, Trajectory) else traj
    worst = int(mismatch_counts(outputs, spec).max())
    return spec.kappa - Fraction(worst, spec.n)


def load_observations_csv(path, kappa) -> ObservationSpec:
    """Rows are time steps, columns agents, cells 0/1."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                bits = [int(c) for c in row]
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: non-integer cell ({e})") from None
            if any(b not in (0, 1) for b in bits):
                raise ValueError(f"{path}:{lineno}: cells must be 0 or 1")
            rows.append(bits)
    if not rows:
        raise ValueError(f"{path}: no observation rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: rows have inconsistent agent counts {sorted(widths)}")
    return ObservationSpec(observed=np.array(rows, dtype=np.uint8), kappa=as_fraction(kappa))


def save_observations_csv(path, spec: ObservationSpec) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in spec.observed:
            writer.writerow([int(b) for b in row])


def load_observations_json(path, kappa=None) -> ObservationSpec:
    """JSON object with "observations" (list of 0/1 rows) and optional "kappa"."""
    data = json.loads(Path(path).read_text())
    if "observations" not in data:
        raise ValueError(f"{path}: missing 'observations' key")
    k = kappa if kappa is not None else data.get("kappa", 0)
    return ObservationSpec(observed=np.array(data["observations"], dtype=np.uint8),
                           kappa=as_fraction(k))


def save_observations_json(path, spec: ObservationSpec) -> None:
    payload = {
        "kappa": str(spec.kappa),
        "observations": [[int(b) for b in row] for row in spec.observed],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
