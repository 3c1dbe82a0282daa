"""Sensitivity sweeps over the number of probe systems and exponent fits."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionCapError
from .estimate import EstimationConfig, operating_point, run_monte_carlo
from .fisher import bound_chain
from .opalg import seminorm
from .probespec import ProbeSpec, build_h0

log = logging.getLogger(__name__)

MODES = ("bound", "qfi", "mc")


@dataclass(frozen=True)
class ScalingRow:
    N: int
    seminorm_h0: float
    qfi: float
    bound: float  # 1 / (t ||h0||)
    delta_mc: float | None = None


@dataclass(frozen=True)
class ScalingResult:
    mode: str
    degree: int
    t: float
    rows: tuple[ScalingRow, ...]
    exponent: float  # against the binomial-corrected regressor
    naive_exponent: float  # against log N
    residual: float
    skipped: tuple[int, ...] = field(default=())

    def sensitivities(self) -> np.ndarray:
        return np.array([sensitivity(r, self.mode) for r in self.rows])

    def table(self) -> list[dict]:
        return [
            {
                "N": r.N,
                "seminorm_h0": r.seminorm_h0,
                "qfi": r.qfi,
                "bound": r.bound,
                "delta_mc": r.delta_mc,
                "exponent_fit": self.exponent,
            }
            for r in self.rows
        ]

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "degree": self.degree,
            "t": self.t,
            "rows": self.table(),
            "exponent": self.exponent,
            "naive_exponent": self.naive_exponent,
            "residual": self.residual,
            "skipped": list(self.skipped),
        }


def sensitivity(row: ScalingRow, mode: str) -> float:
    """The inverse uncertainty that each mode scales: 1/bound, sqrt(QFI), 1/delta."""
    if mode == "bound":
        return 1.0 / row.bound
    if mode == "qfi":
        return math.sqrt(row.qfi)
    return 1.0 / row.delta_mc


def binomial_regressor(ns, k: int) -> np.ndarray:
    """``log(C(N,k) k!) / k``: equals ``log N`` for k = 1 and tends to it as N grows."""
    return np.array([math.log(math.comb(n, k) * math.factorial(k)) / k for n in ns])


def fit_exponent(ns, values, k: int) -> tuple[float, float, float]:
    """Least-squares slopes of ``log(values)``.

    Returns ``(corrected, naive, residual)``: the slope against the binomial
    regressor, the slope against ``log N``, and the RMS residual of the
    corrected fit.
    """
    ns = np.asarray(ns)
    y = np.log(np.asarray(values, dtype=float))
    if len(ns) < 2:
        raise ValueError("need at least two points to fit an exponent")
    x = binomial_regressor(ns, k)
    corrected, intercept = np.polyfit(x, y, 1)
    naive = np.polyfit(np.log(ns), y, 1)[0]
    residual = float(np.sqrt(np.mean((y - (corrected * x + intercept)) ** 2)))
    return float(corrected), float(naive), residual


def scaling_sweep(
    template: ProbeSpec,
    n_values,
    mode: str = "bound",
    t: float = 1.0,
    gamma: float = 0.0,
    nu: int = 1000,
    seed: int = 0,
    batches: int = 100,
) -> ScalingResult:
    """Rebuild ``template`` for every N and tabulate the sensitivity.

    ``mc`` mode runs the parity estimator at the operating point of each N.
    Rows whose dimension exceeds the cap are skipped with a warning.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    rows, skipped = [], []
    for n in n_values:
        try:
            spec = template.with_n(int(n))
            h0 = build_h0(spec)
            norm = seminorm(h0)
            chain = bound_chain(None, spec, gamma, t)
            delta = None
            if mode == "mc":
                g = operating_point(spec, t)
                report = run_monte_carlo(spec, EstimationConfig(nu=nu, gamma_true=g, t=t, seed=seed, batches=batches))
                delta = report.delta_gamma
        except DimensionCapError as exc:
            log.warning("skipping N=%s: %s", n, exc)
            skipped.append(int(n))
            continue
        rows.append(ScalingRow(N=int(n), seminorm_h0=norm, qfi=chain.qfi, bound=1.0 / (t * norm), delta_mc=delta))
    if len(rows) < 2:
        raise ValueError("fewer than two sweep points available for a fit")
    values = [sensitivity(r, mode) for r in rows]
    exponent, naive, residual = fit_exponent([r.N for r in rows], values, template.degree)
    return ScalingResult(
        mode=mode,
        degree=template.degree,
        t=float(t),
        rows=tuple(rows),
        exponent=exponent,
        naive_exponent=naive,
        residual=residual,
        skipped=tuple(skipped),
    )
