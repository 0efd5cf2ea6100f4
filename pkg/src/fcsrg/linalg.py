"""Dense linear algebra, seeded randomness, and the sensing-operator toolbox.

Conventions used across the package: vectors are 1-d float64 numpy arrays,
matrices are 2-d row-major float64 arrays, and every public operation
validates shapes and rejects non-finite inputs. All randomness flows through
:class:`Rng`, which wraps numpy's PCG64 so runs are reproducible bit-for-bit
from a single 64-bit seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, ParameterError, SingularMatrixError

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    """One splitmix64 output step; the standard 64-bit finalizer."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-d float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


class Rng:
    """Seeded random stream (PCG64 underneath).

    Same seed gives the identical draw sequence on every run. Child streams
    for trial/sample indices come from :meth:`substream`, which scrambles
    ``seed XOR index`` through splitmix64 so nested derivations never collide.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def substream(self, *indices: int) -> "Rng":
        """Derive an independent child stream from this seed and indices."""
        s = self.seed
        for i in indices:
            s = _splitmix64(s ^ (int(i) & _MASK64))
        return Rng(s)

    def draw_seed(self) -> int:
        """Consume one draw and return it as a fresh 64-bit seed."""
        return int(self._gen.integers(0, 1 << 64, dtype=np.uint64))

    def normal(self, size=None, scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(0.0, scale, size=size)

    def uniform(self, low: float, high: float, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def dirichlet(self, alpha) -> np.ndarray:
        return self._gen.dirichlet(alpha)


def gaussian_matrix(m: int, n: int, variance: float, rng: Rng) -> np.ndarray:
    """An m x n matrix of i.i.d. zero-mean Gaussians with the given variance.

    No shape restriction beyond positivity; the isometry checks legitimately
    use m > n.
    """
    if m < 1 or n < 1:
        raise ParameterError(f"matrix dimensions must be positive, got {m}x{n}")
    if not variance > 0:
        raise ParameterError(f"entry variance must be positive, got {variance}")
    return rng.normal(size=(m, n), scale=float(np.sqrt(variance)))


@dataclass(frozen=True)
class SensingMatrix:
    """The compression operator: an m x n i.i.d. Gaussian matrix.

    Carries the seed and entry variance it was drawn from, so
    ``SensingMatrix.from_seed(seed, m, n, variance)`` reproduces it
    bit-for-bit.
    """

    matrix: np.ndarray
    m: int
    n: int
    seed: int
    entry_variance: float

    @classmethod
    def from_seed(cls, seed: int, m: int, n: int, variance: float) -> "SensingMatrix":
        if m > n:
            raise ParameterError(f"sensing matrix needs m <= n, got m={m} > n={n}")
        mat = gaussian_matrix(m, n, variance, Rng(seed))
        return cls(matrix=mat, m=m, n=n, seed=int(seed) & _MASK64,
                   entry_variance=float(variance))

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = as_vector(x, "signal")
        if x.shape[0] != self.n:
            raise DimensionError(f"signal length {x.shape[0]} != n={self.n}")
        return self.matrix @ x

    def apply_t(self, y: np.ndarray) -> np.ndarray:
        y = as_vector(y, "measurement")
        if y.shape[0] != self.m:
            raise DimensionError(f"measurement length {y.shape[0]} != m={self.m}")
        return self.matrix.T @ y


def sample_sensing_matrix(m: int, n: int, variance: float, rng: Rng) -> SensingMatrix:
    """Draw a fresh seeded sensing matrix; deterministic given the rng state."""
    if m < 1 or n < 1:
        raise ParameterError(f"matrix dimensions must be positive, got {m}x{n}")
    if m > n:
        raise ParameterError(f"sensing matrix needs m <= n, got m={m} > n={n}")
    if not variance > 0:
        raise ParameterError(f"entry variance must be positive, got {variance}")
    return SensingMatrix.from_seed(rng.draw_seed(), m, n, variance)


def spectral_norm(w: np.ndarray, iters: int = 100, tol: float = 1e-9) -> float:
    """Largest singular value by power iteration on W^T W.

    Deterministic: the start vector comes from a fixed-seed stream, so the
    estimate is reproducible. Converges from below; callers needing a
    certified upper bound apply their own safety factor.
    """
    w = as_matrix(w, "weights")
    n = w.shape[1]
    v = Rng(0x5EED5EED).normal(size=n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        u = w @ v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = w.T @ u
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
        prev, sigma = sigma, nv / nu if nu > 0 else 0.0
        # sigma estimate: ||W^T u|| / ||u|| equals the Rayleigh growth rate
        if abs(sigma - prev) <= tol * max(sigma, 1.0):
            break
    return float(np.linalg.norm(w @ v))


class RidgeSolver:
    """Solves (Phi^T Phi + rho I) x = b through the Woodbury identity.

    Only the m x m Gram matrix (Phi Phi^T + rho I) is factored, once, and the
    Cholesky factor is reused across calls; each solve is then two matrix-
    vector products and one small triangular solve. rho > 0 keeps the system
    positive definite for any Phi.
    """

    def __init__(self, phi: SensingMatrix, rho: float):
        if not rho > 0:
            raise ParameterError(f"rho must be positive, got {rho}")
        self.phi = phi
        self.rho = float(rho)
        gram = phi.matrix @ phi.matrix.T
        gram[np.diag_indices_from(gram)] += self.rho
        self._factor = scipy.linalg.cho_factor(gram, lower=True)

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = as_vector(b, "right-hand side")
        if b.shape[0] != self.phi.n:
            raise DimensionError(
                f"right-hand side length {b.shape[0]} != n={self.phi.n}")
        # Woodbury: (Phi^T Phi + rho I)^-1 b = (b - Phi^T (Phi Phi^T + rho I)^-1 Phi b) / rho
        pb = self.phi.matrix @ b
        corr = scipy.linalg.cho_solve(self._factor, pb)
        return (b - self.phi.matrix.T @ corr) / self.rho


def ridge_solve(phi: SensingMatrix, rho: float, b: np.ndarray) -> np.ndarray:
    """One-shot ridge-regularized normal-equation solve; see RidgeSolver."""
    return RidgeSolver(phi, rho).solve(b)


def pseudo_inverse_lsq(phi: SensingMatrix, y: np.ndarray) -> np.ndarray:
    """Minimum-norm x with Phi x = y, via the Gram system Phi Phi^T.

    Requires full row rank; a Cholesky pivot below 1e-12 of the largest is
    treated as rank deficiency.
    """
    y = as_vector(y, "measurement")
    if y.shape[0] != phi.m:
        raise DimensionError(f"measurement length {y.shape[0]} != m={phi.m}")
    gram = phi.matrix @ phi.matrix.T
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Phi Phi^T is not positive definite: {exc}") from exc
    pivots = np.diag(factor[0]) ** 2
    if pivots.min() < 1e-12 * pivots.max():
        raise SingularMatrixError(
            f"rank-deficient sensing matrix: pivot ratio {pivots.min() / pivots.max():.3e}")
    return phi.matrix.T @ scipy.linalg.cho_solve(factor, y)
