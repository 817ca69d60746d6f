"""Per-step innovation covariance, factorization, and reproducible sampling.

Over one grid step of length tau the exact solution gains a zero-mean
Gaussian increment J with covariance Q(tau), the same polynomial as the
state covariance evaluated at t = tau.  Sampling J = A Z with Q = A A^T and
Z standard normal is what makes the iterative simulator exact at any step
size.  Randomness comes from counter-based per-path substreams so ensembles
can be generated in any order, or in parallel, with identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NotPositiveSemidefiniteError, ShapeError
from .model import _covariance_poly

__all__ = [
    "InnovationModel",
    "RngStream",
    "innovation_covariance",
    "cholesky_lower",
    "sample_innovation",
]

#: Relative pivot tolerance for the semidefinite Cholesky factorization.
PIVOT_RTOL = 1e-14

#: Relative tolerance for the Q = A A^T reconstruction invariant.
RECONSTRUCTION_RTOL = 1e-12


def innovation_covariance(sigmas: tuple[float, float, float], tau: float) -> np.ndarray:
    """Covariance Q of the exact one-step innovation.

    Parameters
    ----------
    sigmas : tuple of float
        Diffusion coefficients (sigma1, sigma2, sigma3), all >= 0.
    tau : float
        Step length in seconds, > 0.

    Returns
    -------
    numpy.ndarray
        Symmetric PSD matrix, shape (3, 3).  Evaluates the same polynomial
        as the state covariance at t = tau, so the two agree bitwise.
    """
    if len(sigmas) != 3:
        raise ShapeError(f"sigmas must have 3 entries, got {len(sigmas)}")
    sig = tuple(float(s) for s in sigmas)
    for s in sig:
        if not math.isfinite(s) or s < 0.0:
            raise DomainError(f"sigmas must be finite and >= 0, got {sigmas!r}")
    tau = float(tau)
    if not math.isfinite(tau) or tau <= 0.0:
        raise DomainError(f"tau must be finite and > 0, got {tau!r}")
    return _covariance_poly(sig, tau)


def cholesky_lower(q: np.ndarray) -> np.ndarray:
    """Lower-triangular A with A A^T = q, for symmetric PSD 3x3 q.

    Unlike a plain Cholesky this accepts semidefinite input: a pivot within
    ``PIVOT_RTOL * max(diag(q))`` of zero zeroes its whole column instead of
    failing, which is what near-degenerate diffusion settings (two sigmas at
    ~1e-22) produce.

    Raises
    ------
    ShapeError
        If q is not 3x3 or not symmetric within 1e-12 relative.
    NotPositiveSemidefiniteError
        If a pivot falls below -tolerance.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (3, 3):
        raise ShapeError(f"q must have shape (3, 3), got {q.shape}")
    scale = float(np.abs(q).max())
    asym = float(np.abs(q - q.T).max())
    if asym > 1e-12 * scale:
        raise ShapeError(
            f"q is not symmetric: max |q - q.T| = {asym:.3e} exceeds 1e-12 relative"
        )
    tol = PIVOT_RTOL * max(float(q.diagonal().max()), 0.0)
    a = np.zeros((3, 3))
    for j in range(3):
        pivot = q[j, j] - float(np.dot(a[j, :j], a[j, :j]))
        if pivot < -tol:
            raise NotPositiveSemidefiniteError(
                f"pivot {pivot:.3e} at column {j} is below -{tol:.3e}"
            )
        if pivot <= 0.0:
            # Rank-deficient direction (zero pivot, or negative within the
            # cancellation tolerance): leave the column at zero.  A tiny
            # positive pivot is factored normally; dropping it would also
            # drop its off-diagonal coupling to later columns.
            continue
        a[j, j] = math.sqrt(pivot)
        for i in range(j + 1, 3):
            a[i, j] = (q[i, j] - float(np.dot(a[i, :j], a[j, :j]))) / a[j, j]
    return a


@dataclass(frozen=True, eq=False)
class InnovationModel:
    """Step length tau with innovation covariance q and its factor a.

    Immutable and shareable across threads.  Build via :meth:`from_sigmas`
    unless q and a come from somewhere else; the constructor re-checks the
    reconstruction invariant either way.
    """

    tau: float
    q: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        tau = float(self.tau)
        if not math.isfinite(tau) or tau <= 0.0:
            raise DomainError(f"tau must be finite and > 0, got {self.tau!r}")
        object.__setattr__(self, "tau", tau)
        q = np.asarray(self.q, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if q.shape != (3, 3) or a.shape != (3, 3):
            raise ShapeError(
                f"q and a must have shape (3, 3), got {q.shape} and {a.shape}"
            )
        if np.any(a[np.triu_indices(3, k=1)] != 0.0):
            raise ShapeError("a must be lower-triangular")
        if np.any(a.diagonal() < 0.0):
            raise DomainError("diagonal of a must be >= 0")
        q_norm = float(np.linalg.norm(q))
        err = float(np.linalg.norm(a @ a.T - q))
        if err > RECONSTRUCTION_RTOL * q_norm and err > 0.0:
            raise NotPositiveSemidefiniteError(
                f"a does not reconstruct q: relative Frobenius error "
                f"{err / q_norm if q_norm else err:.3e}"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "a", a)

    @classmethod
    def from_sigmas(
        cls, sigmas: tuple[float, float, float], tau: float
    ) -> "InnovationModel":
        q = innovation_covariance(sigmas, tau)
        return cls(tau=tau, q=q, a=cholesky_lower(q))


@dataclass
class RngStream:
    """Reproducible standard-normal substream keyed by (seed, path_id).

    Distinct (seed, path_id) pairs give statistically independent streams;
    the same pair replays the same sequence bit-for-bit regardless of what
    other streams did in between.  ``counter`` counts normal draws taken.
    """

    seed: int
    path_id: int
    counter: int = 0
    _generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        seed = int(self.seed)
        path_id = int(self.path_id)
        if not 0 <= seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
        if not 0 <= path_id < 2**64:
            raise DomainError(f"path_id must be in [0, 2^64), got {path_id!r}")
        if int(self.counter) != 0:
            raise DomainError("counter must start at 0; streams advance by sampling")
        self.seed = seed
        self.path_id = path_id
        self.counter = 0
        # Counter-based bit generator keyed directly on the pair; no
        # sequential seeding, so stream identity is order-independent.
        key = np.array([seed, path_id], dtype=np.uint64)
        self._generator = np.random.Generator(np.random.Philox(key=key))

    def standard_normal(self, n: int) -> np.ndarray:
        """Draw ``n`` standard normals and advance the counter."""
        z = self._generator.standard_normal(int(n))
        self.counter += int(n)
        return z


def _apply_factor(a, z1, z2, z3):
    # Lower-triangular multiply spelled out term by term.  Every sampler in
    # the package must come through here: elementwise expressions round the
    # same for scalars and arrays, matrix products do not.
    j1 = a[0, 0] * z1
    j2 = a[1, 0] * z1 + a[1, 1] * z2
    j3 = a[2, 0] * z1 + a[2, 1] * z2 + a[2, 2] * z3
    return j1, j2, j3


def sample_innovation(model: InnovationModel, stream: RngStream) -> np.ndarray:
    """Draw one innovation J = A Z, consuming exactly 3 normals.

    Returns
    -------
    numpy.ndarray
        Correlated Gaussian increment with covariance model.q, shape (3,).
    """
    z = stream.standard_normal(3)
    j1, j2, j3 = _apply_factor(model.a, z[0], z[1], z[2])
    return np.array([j1, j2, j3])
