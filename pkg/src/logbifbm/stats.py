"""Statistical comparison engine: moments, characteristic functions, PSD checks.

Every Monte Carlo quantity travels as an :class:`EstimateReport` with a
stable JSON schema (name, estimate, se, n, target, z, seed, plan) so the
acceptance harness and external tools consume the same machine-readable
records.  Covariance standard errors use the Gaussian Wick approximation
sqrt((C_ii C_jj + C_ij^2) / N); heavy-tailed stable samples are compared
through characteristic functions only, since their moments need not exist.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EstimateReport",
    "empirical_cov",
    "empirical_chf",
    "empirical_variance_se",
    "psd_check",
    "plan_digest",
    "reports_to_json",
    "reports_from_json",
]


def plan_digest(plan: dict) -> str:
    """Short stable digest of a plan dictionary."""
    blob = json.dumps(plan, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate with standard error and optional comparison target."""

    name: str
    estimate: float
    se: float
    n: int
    seed: int
    plan: dict = field(default_factory=dict)
    target: float | None = None

    def __post_init__(self):
        if self.se < 0:
            raise ValueError("standard error must be nonnegative")

    @property
    def z(self) -> float | None:
        if self.target is None or self.se == 0.0:
            return None
        return (self.estimate - self.target) / self.se

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "estimate": self.estimate,
            "se": self.se,
            "n": self.n,
            "target": self.target,
            "z": self.z,
            "seed": self.seed,
            "plan": self.plan,
        }

    @staticmethod
    def from_dict(d: dict) -> "EstimateReport":
        return EstimateReport(
            name=d["name"],
            estimate=d["estimate"],
            se=d["se"],
            n=d["n"],
            seed=d["seed"],
            plan=d.get("plan") or {},
            target=d.get("target"),
        )


def reports_to_json(reports, meta: dict | None = None) -> str:
    payload = {
        "meta": meta or {},
        "reports": [r.to_dict() for r in reports],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def reports_from_json(text: str):
    payload = json.loads(text)
    return [EstimateReport.from_dict(d) for d in payload["reports"]], payload.get(
        "meta", {}
    )


def _values(samples) -> np.ndarray:
    vals = getattr(samples, "values", samples)
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return vals


def empirical_cov(samples):
    """Unbiased sample covariance with Wick-formula standard errors.

    Returns (cov, se) where se[i, j] = sqrt((C_ii C_jj + C_ij^2) / N), the
    Gaussian approximation of the sampling error of a covariance entry.
    """
    vals = _values(samples)
    n = vals.shape[0]
    if n < 2:
        raise ValueError("need at least 2 replicates for a covariance")
    cov = np.cov(vals, rowvar=False).reshape(vals.shape[1], vals.shape[1])
    var = np.diag(cov)
    se = np.sqrt((np.outer(var, var) + cov**2) / n)
    return cov, se


def empirical_variance_se(samples, col: int = 0) -> tuple[float, float]:
    """Sample variance of one coordinate with its moment-based SE.

    SE^2 = (m4 - var^2) / N, the asymptotic variance of the sample variance;
    unlike the Wick formula this stays honest for the heavy-tailed mixture
    distributions the aggregated models produce.
    """
    x = _values(samples)[:, col]
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 replicates")
    m = x.mean()
    var = x.var(ddof=1)
    m4 = np.mean((x - m) ** 4)
    se = math.sqrt(max(m4 - var * var, 0.0) / n)
    return float(var), se


def empirical_chf(samples, thetas, col: int = 0):
    """Empirical characteristic function with per-theta standard errors.

    Returns a list of dicts {theta, re, im, se_re, se_im}: the means of
    cos(theta X) and sin(theta X) with their sample standard errors.
    """
    x = _values(samples)[:, col]
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 replicates")
    out = []
    for th in np.atleast_1d(thetas):
        c = np.cos(th * x)
        s = np.sin(th * x)
        out.append(
            {
                "theta": float(th),
                "re": float(c.mean()),
                "im": float(s.mean()),
                "se_re": float(c.std(ddof=1) / math.sqrt(n)),
                "se_im": float(s.std(ddof=1) / math.sqrt(n)),
            }
        )
    return out


def psd_check(matrix, tolerance: float = 1e-10) -> dict:
    """Minimum eigenvalue report for a symmetric matrix.

    Fails (ok=False) when the smallest eigenvalue drops below -tolerance.
    Asymmetric input (beyond 1e-10) is rejected.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("psd_check needs a square matrix")
    if m.size and np.max(np.abs(m - m.T)) > 1e-10:
        raise ValueError("matrix is not symmetric within 1e-10")
    eigs = np.linalg.eigvalsh(0.5 * (m + m.T))
    min_eig = float(eigs[0]) if eigs.size else 0.0
    return {
        "min_eigenvalue": min_eig,
        "tolerance": tolerance,
        "ok": bool(min_eig >= -tolerance),
        "dim": m.shape[0],
    }
