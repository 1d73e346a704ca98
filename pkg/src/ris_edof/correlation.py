"""Isotropic-scattering spatial correlation of an RIS and its spectrum.

The correlation between elements m and n is sinc(2 * ||d_m - d_n||) with
distances in wavelengths, sinc(x) = sin(pi x) / (pi x). The matrix is a
positive semi-definite kernel with unit diagonal, so trace(R/N) = 1 for
every geometry; everything downstream consumes the normalized spectrum
values(R)/N, which therefore sums to 1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, SizeGuardError, ValidationError
from .geometry import RisGeometry, element_coordinates

# Eigenvalues of R more negative than NEGATIVE_CLAMP_REL * alpha_1 indicate a
# broken matrix rather than rounding noise and are treated as an error.
NEGATIVE_CLAMP_REL = 1e-10

DEFAULT_MAX_ELEMENTS = 10_000


@dataclass
class CorrelationMatrix:
    """Dense real symmetric correlation matrix with unit diagonal."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (self.dim, self.dim):
            raise ValidationError(
                f"entries shape {self.entries.shape} does not match dim {self.dim}",
                field="entries",
            )


@dataclass
class Spectrum:
    """Real eigenvalues in non-increasing order, plus trace metadata.

    min_raw_value records the most negative eigenvalue seen before the
    clamp so that rounding noise stays observable.
    """

    values: np.ndarray
    trace_in: float
    min_raw_value: float
    vectors: np.ndarray | None = None


def build_correlation(
    geom: RisGeometry, *, max_elements: int = DEFAULT_MAX_ELEMENTS
) -> CorrelationMatrix:
    """Sinc correlation matrix for all element pairs of a geometry."""
    n = geom.n
    if n > max_elements:
        raise SizeGuardError(
            f"geometry has {n} elements, above the dense-storage guard of "
            f"{max_elements}; pass a larger max_elements (CLI: --allow-large) "
            "to override"
        )
    coords = element_coordinates(geom)
    gram = coords @ coords.T
    sq = np.diag(gram).copy()
    dist_sq = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
    entries = np.sinc(2.0 * np.sqrt(dist_sq))
    # gemm output is symmetric only to rounding; the contract is exact.
    entries = 0.5 * (entries + entries.T)
    np.fill_diagonal(entries, 1.0)
    return CorrelationMatrix(dim=n, entries=entries)


def eigen_decompose(corr: CorrelationMatrix, keep_vectors: bool = False) -> Spectrum:
    """Full spectral decomposition with non-increasing eigenvalue order.

    Small negative eigenvalues (rounding noise from the PSD kernel) are
    clamped to zero; anything below -NEGATIVE_CLAMP_REL * alpha_1 raises.
    """
    matrix = corr.entries
    try:
        if keep_vectors:
            raw, vecs = np.linalg.eigh(matrix)
        else:
            raw = np.linalg.eigvalsh(matrix)
            vecs = None
    except np.linalg.LinAlgError as exc:
        diag = {
            "dim": corr.dim,
            "fro_norm": float(np.linalg.norm(matrix)),
            "max_abs_entry": float(np.max(np.abs(matrix))),
        }
        raise NumericError(f"eigensolver failed to converge: {exc}", diag) from exc

    order = np.argsort(raw)[::-1]
    values = raw[order].astype(float)
    if vecs is not None:
        vecs = vecs[:, order]

    trace_in = float(np.trace(matrix))
    min_raw = float(values[-1])
    alpha_1 = float(values[0])
    clamp_floor = -NEGATIVE_CLAMP_REL * max(alpha_1, 0.0)
    if min_raw < clamp_floor:
        raise NumericError(
            f"eigenvalue {min_raw:.3e} below clamp floor {clamp_floor:.3e}; "
            "matrix is not a PSD correlation kernel",
            {"min_raw": min_raw, "alpha_1": alpha_1},
        )
    values = np.where(values < 0.0, 0.0, values)

    total = float(values.sum())
    if abs(total - trace_in) > 1e-10 * max(abs(trace_in), 1.0):
        raise NumericError(
            f"eigenvalue sum {total!r} does not match trace {trace_in!r}",
            {"sum": total, "trace": trace_in},
        )

    if vecs is not None:
        residual = np.max(
            np.linalg.norm(matrix @ vecs - vecs * values[None, :], axis=0)
        )
        if residual > 1e-8 * alpha_1:
            raise NumericError(
                f"eigenvector residual {residual:.3e} exceeds 1e-8 * alpha_1",
                {"residual": float(residual), "alpha_1": alpha_1},
            )

    return Spectrum(
        values=values, trace_in=trace_in, min_raw_value=min_raw, vectors=vecs
    )


def normalized_spectrum(spec: Spectrum, n: int) -> np.ndarray:
    """Eigenvalues of R/N; sums to 1 within 1e-10 by trace normalization."""
    if n <= 0:
        raise ValidationError(f"element count must be positive, got {n}", field="n")
    if len(spec.values) != n:
        raise ValidationError(
            f"spectrum has {len(spec.values)} values but n = {n}", field="n"
        )
    values = spec.values / float(n)
    total = float(values.sum())
    if abs(total - 1.0) > 1e-10:
        raise NumericError(
            f"normalized spectrum sums to {total!r}, expected 1", {"sum": total}
        )
    return values


def effective_rank(values: np.ndarray, rel_tol: float) -> int:
    """Number of values above rel_tol times the largest value."""
    if not 0.0 < rel_tol < 1.0:
        raise ValidationError(
            f"rel_tol must lie in (0, 1), got {rel_tol}", field="rel_tol"
        )
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0
    return int(np.sum(values > rel_tol * values[0]))


def geometry_spectrum(
    geom: RisGeometry, *, max_elements: int = DEFAULT_MAX_ELEMENTS
) -> np.ndarray:
    """Convenience: normalized correlation spectrum of a geometry."""
    corr = build_correlation(geom, max_elements=max_elements)
    return normalized_spectrum(eigen_decompose(corr), geom.n)
