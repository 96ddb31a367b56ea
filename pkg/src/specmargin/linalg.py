"""Dense matrix primitives: products, norms, and seeded Gaussian sampling.

Matrices are 2-D float64 numpy arrays with finite entries; vectors are 1-D
float64 arrays.  Everything here is pure and deterministic given an explicit
seed, so values can be shared freely across threads.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
    "SpectralNormError",
    "as_matrix",
    "as_vector",
    "mat_vec",
    "frobenius_norm",
    "l1_elementwise_norm",
    "l21_norm",
    "spectral_norm",
    "gaussian_matrix",
    "derive_seed",
]

# Power-iteration defaults: relative change of the Rayleigh quotient between
# iterations, and the iteration budget per start vector.
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000


class SpectralNormError(RuntimeError):
    """Power iteration did not converge.

    Carries the last iterate so a failure is never a silent wrong answer:
    ``last_estimate`` is the square root of the last Rayleigh quotient and
    ``last_vector`` the corresponding unit vector.
    """

    def __init__(self, message, last_estimate, last_vector, iterations):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.last_vector = last_vector
        self.iterations = iterations


def as_matrix(obj) -> np.ndarray:
    """Coerce to a finite 2-D float64 array (rows x cols, both >= 1)."""
    m = np.asarray(obj, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got {m.ndim}-D data")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"matrix dimensions must be positive, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must all be finite")
    return m


def as_vector(obj) -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    v = np.asarray(obj, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got {v.ndim}-D data")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must all be finite")
    return v


def mat_vec(m, v) -> np.ndarray:
    """Matrix-vector product M @ v with an explicit dimension check."""
    m = as_matrix(m)
    v = as_vector(v)
    if v.shape[0] != m.shape[1]:
        raise ValueError(
            f"dimension mismatch: matrix has {m.shape[1]} columns, vector has length {v.shape[0]}"
        )
    return m @ v


def frobenius_norm(m) -> float:
    """sqrt of the sum of squared entries."""
    m = as_matrix(m)
    return float(np.sqrt(np.sum(m * m)))


def l1_elementwise_norm(m) -> float:
    """Sum of absolute values of all entries."""
    m = as_matrix(m)
    return float(np.sum(np.abs(m)))


def l21_norm(m) -> float:
    """Sum over rows of each row's l2 norm.

    Rows are the output units: row i of a layer matrix holds unit i's
    incoming weights.
    """
    m = as_matrix(m)
    return float(np.sum(np.sqrt(np.sum(m * m, axis=1))))


def _power_iteration(m, tol, max_iter, seed):
    """One power-iteration run on the Gram operator v -> M^T (M v).

    Returns (sigma_max, unit right-singular vector); raises SpectralNormError
    on non-convergence or a start that lands in the kernel.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    rayleigh = None
    for it in range(max_iter):
        w = m @ v
        r = float(w @ w)  # Rayleigh quotient of M^T M at the unit vector v
        g = m.T @ w
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            raise SpectralNormError(
                "power iteration start degenerated into the kernel of M",
                float(np.sqrt(r)),
                v,
                it + 1,
            )
        v = g / gn
        if rayleigh is not None and abs(r - rayleigh) <= tol * max(r, np.finfo(np.float64).tiny):
            return float(np.sqrt(r)), v
        rayleigh = r
    raise SpectralNormError(
        f"power iteration did not converge within {max_iter} iterations "
        f"(last relative change {abs(r - rayleigh) / max(r, 1e-300):.3e})",
        float(np.sqrt(r)),
        v,
        max_iter,
    )


def spectral_norm(m, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0) -> float:
    """Largest singular value of M by power iteration on v -> M^T (M v).

    Stops when the Rayleigh quotient |Mv|^2 changes by at most ``tol``
    relative between iterations.  A failed run is restarted once from
    ``seed + 1`` (guards a start orthogonal to the top singular vector);
    a second failure raises SpectralNormError carrying the last iterate.
    The zero matrix short-circuits to 0.0, where the iteration is undefined.
    """
    m = as_matrix(m)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    if not m.any():
        return 0.0
    try:
        sigma, _ = _power_iteration(m, tol, max_iter, seed)
    except SpectralNormError:
        sigma, _ = _power_iteration(m, tol, max_iter, seed + 1)
    return sigma


def gaussian_matrix(rows, cols, sigma, seed) -> np.ndarray:
    """rows x cols matrix of i.i.d. N(0, sigma^2) entries from the seeded stream.

    Identical (rows, cols, sigma, seed) always reproduces the same matrix
    bit for bit; sigma = 0 gives the exact zero matrix.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got {(rows, cols)}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    rng = np.random.default_rng(seed)
    return sigma * rng.standard_normal((rows, cols))


def derive_seed(master, *path) -> int:
    """Counter-based child seed for (master, path).

    The same master seed and integer path always yield the same child,
    independent of call order, so parallel and serial consumers draw
    identical streams.
    """
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
