"""Sweep-curve fitting: shifted-cosine model vs readout-only model.

Two model families describe a meridian sweep P0(θ):

* readout-only ("ibm"):   P0 = p0·cos²(θ/2) + (1 − p1)·sin²(θ/2)
  with (p0, p1) taken from the readout calibration; no free parameters.
* shifted ("shift"):      P0 = p0'·cos²((θ+α)/2) + (1 − p1')·sin²((θ+α)/2)
  with (α, p0', p1') fitted by least squares, α ∈ [−π/2, π/2] and the
  primed probabilities bounded to [0, 1].

The shift fit is deterministic and library-free: a 65-point coarse grid
over α, a closed-form solve of the two linear parameters at each α
(clipped to bounds), then golden-section refinement of α around the grid
minimum.  Goodness of fit is the coefficient of determination
R² = 1 − SS_res/SS_tot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .backend import JobRecord, SweepRecord
from .errors import DegenerateDataError, MissingCalibrationError
from .noise import ReadoutCal

ALPHA_BOUND = math.pi / 2
_ALPHA_GRID_POINTS = 65
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_FLAT_MODEL_TOL = 1e-9


@dataclass
class FitResult:
    model: str                      # "shift" or "ibm"
    alpha: float                    # nan when indeterminate (see flags)
    p0_prime: float
    p1_prime: float
    r_squared: float
    residual_norm: float
    flags: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "alpha": self.alpha,
            "p0_prime": self.p0_prime,
            "p1_prime": self.p1_prime,
            "r_squared": self.r_squared,
            "residual_norm": self.residual_norm,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FitResult":
        return cls(
            model=data["model"],
            alpha=data["alpha"],
            p0_prime=data["p0_prime"],
            p1_prime=data["p1_prime"],
            r_squared=data["r_squared"],
            residual_norm=data["residual_norm"],
            flags=tuple(data.get("flags", ())),
        )


def r_squared(observed, predicted) -> float:
    """1 − SS_res/SS_tot; undefined (raises) when all observations coincide."""
    y = np.asarray(observed, dtype=float)
    f = np.asarray(predicted, dtype=float)
    if y.shape != f.shape or y.ndim != 1 or y.size < 2:
        raise DegenerateDataError("observed and predicted must be equal-length, size >= 2")
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DegenerateDataError("R^2 undefined: all observed values identical")
    ss_res = float(((y - f) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def shift_model(thetas, alpha: float, p0_prime: float, p1_prime: float,
                theta_offset: float = 0.0) -> np.ndarray:
    t = np.asarray(thetas, dtype=float) + theta_offset + alpha
    c2 = np.cos(t / 2.0) ** 2
    return p0_prime * c2 + (1.0 - p1_prime) * (1.0 - c2)


def _solve_linear(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Best (p0', p1') for fixed basis x = cos²((θ+α)/2), clipped to [0, 1].

    The model is linear given α: P0 = (1 − p1') + (p0' + p1' − 1)·x.
    Returns (p0', p1', sum of squared residuals at the clipped values).
    """
    xm, ym = x.mean(), y.mean()
    var_x = float(((x - xm) ** 2).sum())
    if var_x == 0.0:
        a = 0.0
        b = ym
    else:
        a = float(((x - xm) * (y - ym)).sum()) / var_x
        b = ym - a * xm
    p0p = min(1.0, max(0.0, a + b))
    p1p = min(1.0, max(0.0, 1.0 - b))
    resid = y - ((1.0 - p1p) + (p0p + p1p - 1.0) * x)
    return p0p, p1p, float(resid @ resid)


def _flagged(model: str, thetas, y, flags: tuple[str, ...]) -> FitResult:
    p0p, p1p, ss = _solve_linear(np.cos(np.asarray(thetas) / 2.0) ** 2, np.asarray(y, float))
    try:
        r2 = r_squared(y, shift_model(thetas, 0.0, p0p, p1p))
    except DegenerateDataError:
        r2 = float("nan")
    return FitResult(model, float("nan"), p0p, p1p, r2, math.sqrt(ss), flags)


def shift_fit(sweep: SweepRecord, theta_offset: float = 0.0) -> FitResult:
    """Least-squares fit of the shifted model to one sweep.

    Deterministic; degenerate inputs come back flagged instead of raising.
    theta_offset displaces the model curve, used for sweeps that start
    from a prepared state Rx(prep)|0>: the fitted α stays comparable
    across preparations.
    """
    thetas = np.asarray(sweep.thetas, dtype=float)
    y = np.asarray(sweep.p0_estimates, dtype=float)
    if thetas.size < 4:
        raise DegenerateDataError("shift fit needs at least 4 grid points")
    if np.ptp(y) == 0.0:
        return _flagged("shift", thetas, y, ("degenerate-data", "alpha-indeterminate"))

    def objective(alpha: float) -> tuple[float, float, float]:
        x = np.cos((thetas + theta_offset + alpha) / 2.0) ** 2
        return _solve_linear(x, y)

    grid = np.linspace(-ALPHA_BOUND, ALPHA_BOUND, _ALPHA_GRID_POINTS)
    ss_grid = np.array([objective(a)[2] for a in grid])
    k = int(ss_grid.argmin())

    # Golden-section refinement inside the bracket around the grid minimum.
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = objective(c)[2], objective(d)[2]
    for _ in range(80):
        if hi - lo < 1e-12:
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = objective(c)[2]
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = objective(d)[2]
    refined = min((c, fc), (d, fd), key=lambda t: t[1])

    # Never report worse than the coarse grid itself (covers α = 0 exactly,
    # so the fit dominates its own unshifted subproblem).
    alpha = refined[0] if refined[1] <= ss_grid[k] else float(grid[k])
    p0p, p1p, ss = objective(alpha)

    flags: tuple[str, ...] = ()
    if abs(p0p + p1p - 1.0) <= _FLAT_MODEL_TOL:
        flags = ("alpha-indeterminate",)
    r2 = r_squared(y, shift_model(thetas, alpha, p0p, p1p, theta_offset))
    return FitResult(
        "shift",
        float("nan") if flags else float(alpha),
        p0p, p1p, r2, math.sqrt(ss), flags,
    )


def ibm_fit(sweep: SweepRecord, cal: ReadoutCal | None,
            theta_offset: float = 0.0) -> FitResult:
    """Evaluate the readout-only model with calibration (p0, p1); no fitting.

    By construction the curve reproduces the calibration endpoints at
    θ = 0 and θ = π when the calibration matches the data source.
    """
    if cal is None:
        raise MissingCalibrationError("ibm fit requires readout calibration (p0, p1)")
    if cal.n_qubits != 1:
        raise MissingCalibrationError("ibm fit needs the swept qubit's single-qubit calibration")
    p0, p1 = cal.fidelities[0]
    thetas = np.asarray(sweep.thetas, dtype=float)
    y = np.asarray(sweep.p0_estimates, dtype=float)
    predicted = shift_model(thetas, 0.0, p0, p1, theta_offset)
    resid = y - predicted
    if np.ptp(y) == 0.0:
        return FitResult("ibm", 0.0, p0, p1, float("nan"),
                         math.sqrt(float(resid @ resid)), ("degenerate-data",))
    return FitResult("ibm", 0.0, p0, p1, r_squared(y, predicted),
                     math.sqrt(float(resid @ resid)))


def round_half_away(value: float, decimals: int) -> float:
    """Decimal rounding with ties away from zero (not banker's)."""
    q = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def format_mean_std(mean: float, std: float) -> str:
    """Concise uncertainty notation m(s): std to one significant digit,
    mean rounded to that digit's place, e.g. (−0.141, 0.068) → "-0.14(7)"."""
    if not (math.isfinite(mean) and math.isfinite(std)):
        return f"{mean}({std})"
    if std == 0.0:
        return f"{mean:.3f}(0)"
    exponent = math.floor(math.log10(abs(std)))
    lead = int(round_half_away(std / 10.0**exponent, 0))
    if lead == 10:
        lead = 1
        exponent += 1
    if exponent >= 0:
        step = 10**exponent
        mean_r = int(round_half_away(mean / step, 0)) * step
        return f"{mean_r}({lead * step})"
    decimals = -exponent
    return f"{round_half_away(mean, decimals):.{decimals}f}({lead})"


@dataclass
class JobFits:
    """Both fit families for every sweep of a job, plus the job summary."""

    shift: list[FitResult]
    ibm: list[FitResult]
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "shift": [f.to_dict() for f in self.shift],
            "ibm": [f.to_dict() for f in self.ibm],
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JobFits":
        return cls(
            shift=[FitResult.from_dict(f) for f in data["shift"]],
            ibm=[FitResult.from_dict(f) for f in data["ibm"]],
            summary=data.get("summary", {}),
        )


def _mean_std(values: list[float]) -> tuple[float, float]:
    if not values:
        return float("nan"), float("nan")
    arr = np.asarray(values)
    if np.ptp(arr) == 0.0:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std())


def fit_job(job: JobRecord, cal: ReadoutCal | None = None) -> JobFits:
    """Shift-fit and readout-only fit of every sweep; summary over sweeps.

    The calibration for the readout-only family defaults to the job's
    recorded noise config (ideal readout when none was recorded); pass
    cal to fit against externally measured fidelities.  The std in the
    summary is the population spread across sweeps, shown in concise
    m(s) notation alongside the raw numbers.
    """
    if cal is None:
        cal = job.noise_config.readout
    if cal is None:
        cal = ReadoutCal.ideal(1)
    elif cal.n_qubits != 1:
        cal = cal.for_qubit(int(job.metadata.get("qubit", 0)))
    offset = float(job.metadata.get("sweep_spec", {}).get("initial_state_prep") or 0.0)

    shift = [shift_fit(s, theta_offset=offset) for s in job.sweeps]
    ibm = [ibm_fit(s, cal, theta_offset=offset) for s in job.sweeps]

    alphas = [f.alpha for f in shift if f.ok]
    p0s = [f.p0_prime for f in shift if f.ok]
    p1s = [f.p1_prime for f in shift if f.ok]
    a_mean, a_std = _mean_std(alphas)
    p0_mean, p0_std = _mean_std(p0s)
    p1_mean, p1_std = _mean_std(p1s)
    summary = {
        "n_sweeps": len(job.sweeps),
        "n_flagged": sum(1 for f in shift if not f.ok),
        "alpha_mean": a_mean,
        "alpha_std": a_std,
        "alpha": format_mean_std(a_mean, a_std),
        "p0_prime_mean": p0_mean,
        "p0_prime": format_mean_std(p0_mean, p0_std),
        "p1_prime_mean": p1_mean,
        "p1_prime": format_mean_std(p1_mean, p1_std),
        "r2_shift_mean": float(np.mean([f.r_squared for f in shift if f.ok])) if alphas else float("nan"),
        "r2_ibm_mean": float(np.mean([f.r_squared for f in ibm if f.ok])) if alphas else float("nan"),
    }
    return JobFits(shift=shift, ibm=ibm, summary=summary)


def attach_fits(job: JobRecord, cal: ReadoutCal | None = None) -> JobFits:
    """Fit a job and embed the results under its ``fits`` key."""
    fits = fit_job(job, cal=cal)
    job.fits = fits.to_dict()
    return fits
