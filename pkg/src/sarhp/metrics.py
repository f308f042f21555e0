"""Height-map evaluation metrics: RMSE, log/relative errors, deltas, SSIM.

All metrics reduce over the pixels valid (finite) in *both* rasters.  The
delta accuracies additionally require strictly positive heights on both
sides; such exclusions are counted and reported rather than silently guarded,
since the ratio has no additive stabilizer.

The single-window SSIM uses population (1/N) statistics and the standard
``sigma_y^2 + sigma_yhat^2`` denominator; the report header records that
choice (a published variant shows the covariance there, which breaks the
self-similarity identity SSIM(y, y) = 1).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import MetricError

SSIM_C1 = 1e-6
SSIM_C2 = 1e-6

REPORT_NOTE = "ssim uses the standard variance denominator (sigma_y^2 + sigma_yhat^2)"


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    rmse_log: float
    rel: float
    rel_log: float
    delta1: float
    delta2: float
    delta3: float
    ssim: float
    n_valid: int
    n_delta_excluded: int

    def as_text(self) -> str:
        lines = [f"# {REPORT_NOTE}"]
        for key, value in asdict(self).items():
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def as_json(self) -> str:
        payload = {"note": REPORT_NOTE, **asdict(self)}
        return json.dumps(payload, indent=2) + "\n"


def _valid_pair(y, y_hat):
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise MetricError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    mask = np.isfinite(y) & np.isfinite(y_hat)
    if not np.any(mask):
        raise MetricError("no valid pixels to evaluate")
    return y[mask], y_hat[mask]


def rmse(y, y_hat) -> float:
    """Root mean square error over valid pixels, meters."""
    yv, pv = _valid_pair(y, y_hat)
    return float(np.sqrt(np.mean((yv - pv) ** 2)))


def _log_diff(yv, pv):
    if np.any(yv < 0.0) or np.any(pv < 0.0):
        raise MetricError("log metrics require non-negative heights on valid pixels")
    return np.log10(yv + 1.0) - np.log10(pv + 1.0)


def rmse_log(y, y_hat) -> float:
    """RMSE of log10(h + 1) differences; the +1 guards h = 0."""
    yv, pv = _valid_pair(y, y_hat)
    return float(np.sqrt(np.mean(np.abs(_log_diff(yv, pv)) ** 2)))


def rel(y, y_hat) -> float:
    """Mean absolute error relative to |reference| + 1."""
    yv, pv = _valid_pair(y, y_hat)
    return float(np.mean(np.abs(yv - pv) / (np.abs(yv) + 1.0)))


def rel_log(y, y_hat) -> float:
    """Mean absolute log10(h + 1) difference."""
    yv, pv = _valid_pair(y, y_hat)
    return float(np.mean(np.abs(_log_diff(yv, pv))))


def delta(y, y_hat, i: int) -> float:
    """Percentage of pixels with max(y/yhat, yhat/y) below 1.25**i.

    Only pixels with strictly positive heights on both sides participate;
    use :func:`delta_excluded` for the exclusion count.
    """
    if i not in (1, 2, 3):
        raise ValueError("delta order must be 1, 2 or 3")
    yv, pv = _valid_pair(y, y_hat)
    pos = (yv > 0.0) & (pv > 0.0)
    if not np.any(pos):
        raise MetricError("no strictly positive pixels for the delta ratio")
    ratio = np.maximum(yv[pos] / pv[pos], pv[pos] / yv[pos])
    return float(100.0 * np.mean(ratio < 1.25 ** i))


def delta_excluded(y, y_hat) -> int:
    """Number of valid pixels excluded from the delta ratio (h <= 0 sides)."""
    yv, pv = _valid_pair(y, y_hat)
    return int(np.count_nonzero(~((yv > 0.0) & (pv > 0.0))))


def ssim(y, y_hat) -> float:
    """Global single-window structural similarity over valid pixels."""
    yv, pv = _valid_pair(y, y_hat)
    mu_y = np.mean(yv)
    mu_p = np.mean(pv)
    var_y = np.mean((yv - mu_y) ** 2)
    var_p = np.mean((pv - mu_p) ** 2)
    cov = np.mean((yv - mu_y) * (pv - mu_p))
    num = (2.0 * mu_y * mu_p + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_y ** 2 + mu_p ** 2 + SSIM_C1) * (var_y + var_p + SSIM_C2)
    return float(num / den)


def evaluate(y, y_hat) -> MetricReport:
    """Run the full metric suite and assemble a report."""
    return MetricReport(
        rmse=rmse(y, y_hat),
        rmse_log=rmse_log(y, y_hat),
        rel=rel(y, y_hat),
        rel_log=rel_log(y, y_hat),
        delta1=delta(y, y_hat, 1),
        delta2=delta(y, y_hat, 2),
        delta3=delta(y, y_hat, 3),
        ssim=ssim(y, y_hat),
        n_valid=int(np.count_nonzero(np.isfinite(np.asarray(y, dtype=float))
                                     & np.isfinite(np.asarray(y_hat, dtype=float)))),
        n_delta_excluded=delta_excluded(y, y_hat),
    )
