"""Analytical per-index eigenvalue bounds for the composite channel.

The bounds combine the per-index spectra of the two correlation matrices
with the extreme eigenvalues of the underlying white Wishart factor, whose
almost-sure limits are the Marchenko-Pastur edges (1 +- sqrt(eta))^2 with
eta = n_t / n_r. Three regimes apply depending on eta; because the edges
are asymptotic, every audit carries an explicit multiplicative slack.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel_mc import ChannelEnsemble
from .correlation import effective_rank
from .errors import ValidationError

REGIME_NT_MUCH_LESS = "nt_much_less"
REGIME_NT_MUCH_GREATER = "nt_much_greater"
REGIME_NT_APPROX_NR = "nt_approx_nr"

# eta thresholds separating the qualitative regimes; recorded, configurable.
DEFAULT_ETA_LOW = 0.1
DEFAULT_ETA_HIGH = 10.0
DEFAULT_SLACK = 0.10
DEFAULT_RANK_TOL = 1e-12


@dataclass
class BoundTable:
    """Per-index lower/upper bounds on the composite-channel eigenvalues."""

    regime: str
    lower: np.ndarray
    upper: np.ndarray
    slack: float

    def __post_init__(self):
        if np.any(self.lower > self.upper * (1 + 1e-12)):
            raise ValidationError("lower bound exceeds upper bound")


@dataclass
class BoundViolation:
    """One sample outside its slackened bound. k is 1-based."""

    k: int
    realization: int
    value: float
    bound: float
    kind: str  # "upper" or "lower"


def mp_edges(eta: float) -> tuple[float, float]:
    """Marchenko-Pastur spectral edges ((1-sqrt(eta))^2, (1+sqrt(eta))^2)."""
    if not eta > 0:
        raise ValidationError(f"eta must be positive, got {eta}", field="eta")
    root = math.sqrt(eta)
    return ((1.0 - root) ** 2, (1.0 + root) ** 2)


def _smallest_significant(values: np.ndarray, rank_tol: float) -> float:
    """Smallest eigenvalue above the effective-rank tolerance.

    Using the literal smallest (often a clamped 0) would collapse every
    lower bound to 0 uninformatively.
    """
    rank = effective_rank(values, rank_tol)
    if rank == 0:
        raise ValidationError("spectrum has no significant eigenvalues")
    return float(values[rank - 1])


def per_eig_bounds(
    dt: np.ndarray,
    dr: np.ndarray,
    n_t: int,
    n_r: int,
    *,
    slack: float = DEFAULT_SLACK,
    eta_low: float = DEFAULT_ETA_LOW,
    eta_high: float = DEFAULT_ETA_HIGH,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> BoundTable:
    """Regime-dependent per-index bounds from the two normalized spectra.

    Returns n_r rows; indices beyond the transmit spectrum length use a
    zero transmit eigenvalue, which correctly forces those bounds to 0.
    """
    dt = np.asarray(dt, dtype=float)
    dr = np.asarray(dr, dtype=float)
    if dt.size == 0 or dr.size == 0:
        raise ValidationError("spectra must be non-empty")
    if dt.size != n_t or dr.size != n_r:
        raise ValidationError(
            f"spectra lengths ({dt.size}, {dr.size}) do not match counts "
            f"({n_t}, {n_r})"
        )

    dt_pad = np.zeros(n_r)
    dt_pad[: min(n_t, n_r)] = dt[: min(n_t, n_r)]
    dt1, dr1 = float(dt[0]), float(dr[0])
    dt_rank = _smallest_significant(dt, rank_tol)
    dr_rank = _smallest_significant(dr, rank_tol)

    eta = n_t / n_r
    if eta <= eta_low:
        regime = REGIME_NT_MUCH_LESS
        mult = float(n_r)
    elif eta >= eta_high:
        regime = REGIME_NT_MUCH_GREATER
        mult = float(n_t)
    else:
        regime = REGIME_NT_APPROX_NR
        mult = None

    if mult is not None:
        lower = np.maximum(mult * dt_pad * dr_rank, mult * dr * dt_rank)
        upper = np.minimum(mult * dt_pad * dr1, mult * dr * dt1)
    else:
        lower = np.zeros(n_r)
        upper = np.minimum(4.0 * n_r * dt_pad * dr1, 4.0 * n_t * dr * dt1)

    # beyond the joint rank the eigenvalue is exactly zero; the per-index
    # expressions are meaningless there
    dead = (dt_pad == 0.0) | (dr == 0.0)
    lower[dead] = 0.0
    upper[dead] = 0.0

    return BoundTable(regime=regime, lower=lower, upper=upper, slack=slack)


def check_bounds(
    ensemble: ChannelEnsemble, table: BoundTable, slack: float | None = None
) -> list[BoundViolation]:
    """Audit every sample in the ensemble against the slackened bounds.

    An empty list means the ensemble respects the bounds.
    """
    if table.upper.size != ensemble.n_r:
        raise ValidationError(
            f"bound table has {table.upper.size} rows but ensemble n_r = "
            f"{ensemble.n_r}"
        )
    if slack is None:
        slack = table.slack
    hi = table.upper * (1.0 + slack)
    lo = table.lower * (1.0 - slack)

    violations: list[BoundViolation] = []
    samples = ensemble.eig_samples
    over = np.argwhere(samples > hi[None, :])
    under = np.argwhere(samples < lo[None, :])
    for realization, idx in over:
        violations.append(
            BoundViolation(
                k=int(idx) + 1,
                realization=int(realization),
                value=float(samples[realization, idx]),
                bound=float(table.upper[idx]),
                kind="upper",
            )
        )
    for realization, idx in under:
        violations.append(
            BoundViolation(
                k=int(idx) + 1,
                realization=int(realization),
                value=float(samples[realization, idx]),
                bound=float(table.lower[idx]),
                kind="lower",
            )
        )
    return violations
