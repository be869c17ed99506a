"""Calibration study of the sampling-softmax sample count N.

For a fixed Gaussian logit distribution, the N = 100000 estimate serves as
the reference. The sweep then measures, per candidate N, the L2 distance of
independent N-sample estimates to that reference and how often their argmax
disagrees with it. Results go to a semicolon-separated CSV whose columns
feed the error/miss-rate plots directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .disentangle import SamplingSoftmaxConfig, sampling_softmax
from .rng import RngStream

__all__ = [
    "LogitDistSpec", "SweepRow", "REFERENCE_SAMPLES", "DEFAULT_N_GRID",
    "DEFAULT_TRIALS", "reference_probs", "sweep", "emit_sweep_csv",
    "parse_sweep_csv", "SWEEP_CSV_HEADER",
]

REFERENCE_SAMPLES = 100_000
DEFAULT_N_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000)
DEFAULT_TRIALS = 100

SWEEP_CSV_HEADER = "num_samples;mean_error;std_error;mean_miss"

# stream salts keeping the reference draws apart from the trial draws
_REF_SALT = 0x5EED
_TRIAL_SALT = 0x7A1A


@dataclass(frozen=True)
class LogitDistSpec:
    """Gaussian logit distribution: per-class means and standard deviations."""

    means: tuple[float, ...]
    stds: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", tuple(float(v) for v in self.means))
        object.__setattr__(self, "stds", tuple(float(v) for v in self.stds))
        if len(self.means) != len(self.stds):
            raise ValueError("means and stds must have the same length")
        if any(s < 0.0 for s in self.stds):
            raise ValueError("stds must be non-negative")

    @property
    def variances(self) -> np.ndarray:
        return np.square(np.asarray(self.stds))


@dataclass(frozen=True)
class SweepRow:
    num_samples: int
    mean_error: float
    std_error: float
    mean_miss: float

    def __post_init__(self) -> None:
        if self.mean_error < 0.0:
            raise ValueError("mean_error must be non-negative")
        if not 0.0 <= self.mean_miss <= 1.0:
            raise ValueError("mean_miss must lie in [0, 1]")


def reference_probs(spec: LogitDistSpec, rng: RngStream) -> np.ndarray:
    """Best available estimate of the expected softmax: N = 100000."""
    return sampling_softmax(np.asarray(spec.means), spec.variances,
                            SamplingSoftmaxConfig(REFERENCE_SAMPLES),
                            rng=rng.derive(_REF_SALT))


def sweep(spec: LogitDistSpec, n_values=DEFAULT_N_GRID,
          trials: int = DEFAULT_TRIALS, rng: RngStream | None = None
          ) -> list[SweepRow]:
    """Error and miss statistics per candidate N, rows ascending in N.

    Each N gets ``trials`` independent estimates; trials are batched through
    one sampling_softmax call per N (the batch dimension carries the trials,
    so the draws stay independent across trials).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if any(n < 1 for n in n_values):
        raise ValueError("sample counts must be >= 1")
    if rng is None:
        raise ValueError("sweep needs an rng")
    reference = reference_probs(spec, rng)
    ref_argmax = int(np.argmax(reference))
    means = np.asarray(spec.means)
    n_classes = len(spec.means)
    rows = []
    for index, n in enumerate(sorted(int(n) for n in n_values)):
        trial_rng = rng.derive(_TRIAL_SALT).derive(index)
        # cap the draw buffer at a few million floats per chunk
        block = max(1, 4_000_000 // (n * n_classes))
        errors = np.empty(trials)
        misses = np.empty(trials, dtype=bool)
        for start in range(0, trials, block):
            count = min(block, trials - start)
            probs = sampling_softmax(np.tile(means, (count, 1)),
                                     np.tile(spec.variances, (count, 1)),
                                     SamplingSoftmaxConfig(n), rng=trial_rng)
            errors[start:start + count] = np.linalg.norm(probs - reference,
                                                         axis=-1)
            misses[start:start + count] = (np.argmax(probs, axis=-1)
                                           != ref_argmax)
        rows.append(SweepRow(num_samples=n,
                             mean_error=float(errors.mean()),
                             std_error=float(errors.std()),
                             mean_miss=float(misses.mean())))
    return rows


def emit_sweep_csv(rows: list[SweepRow], path) -> None:
    if not rows:
        raise ValueError("no rows to emit")
    lines = [SWEEP_CSV_HEADER]
    for row in rows:
        lines.append(f"{row.num_samples};{row.mean_error:.8g};"
                     f"{row.std_error:.8g};{row.mean_miss:.8g}")
    Path(path).write_text("\n".join(lines) + "\n")


def parse_sweep_csv(path) -> list[SweepRow]:
    lines = Path(path).read_text().strip().splitlines()
    if lines[0] != SWEEP_CSV_HEADER:
        raise ValueError(f"unexpected header: {lines[0]!r}")
    rows = []
    for line in lines[1:]:
        n, mean_error, std_error, mean_miss = line.split(";")
        rows.append(SweepRow(int(n), float(mean_error), float(std_error),
                             float(mean_miss)))
    return rows
