"""Independent oracles for the test suite.

Everything here is deliberately written from scratch with a different
algorithm than the package uses, so agreement between the two is evidence
rather than tautology: a cyclic Jacobi eigensolver instead of power
iteration, straight-line Python loops instead of vectorized numpy for
forward evaluation, and central finite differences instead of backprop.
oracles are validated once against numpy.linalg in test_oracles.py and
then treated as frozen.
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigenvalues(sym, sweeps=60, rel_tol=1e-15):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Rotates away each off-diagonal entry in turn until the off-diagonal
    mass is negligible relative to the total.  O(n^3) per sweep; fine for
    the n <= 32 matrices used in tests.
    """
    a = np.array(sym, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"need a square matrix, got shape {a.shape}")
    if n == 1:
        return np.array([a[0, 0]])
    total = math.sqrt(float(np.sum(a * a)))
    if total == 0.0:
        return np.zeros(n)
    for _ in range(sweeps):
        off = math.sqrt(max(0.0, float(np.sum(a * a) - np.sum(np.diag(a) ** 2))))
        if off <= rel_tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                diag_scale = abs(a[p, p]) + abs(a[q, q])
                if diag_scale + abs(apq) == diag_scale:
                    # rotation would change nothing at this precision
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
    return np.sort(np.diag(a))


def spectral_norm_oracle(m) -> float:
    """Largest singular value via a full eigensolve of the smaller Gram matrix."""
    a = np.asarray(m, dtype=np.float64)
    gram = a @ a.T if a.shape[0] <= a.shape[1] else a.T @ a
    top = float(jacobi_eigenvalues(gram)[-1])
    return math.sqrt(max(0.0, top))


def frobenius_oracle(m) -> float:
    total = 0.0
    for row in np.asarray(m, dtype=np.float64):
        for x in row:
            total += float(x) * float(x)
    return math.sqrt(total)


def l1_oracle(m) -> float:
    total = 0.0
    for row in np.asarray(m, dtype=np.float64):
        for x in row:
            total += abs(float(x))
    return total


def l21_oracle(m) -> float:
    total = 0.0
    for row in np.asarray(m, dtype=np.float64):
        row_sq = 0.0
        for x in row:
            row_sq += float(x) * float(x)
        total += math.sqrt(row_sq)
    return total


def forward_oracle(layers, x):
    """Network output by plain Python loops; relu between layers, none after the last."""
    v = [float(xi) for xi in x]
    last = len(layers) - 1
    for li, w in enumerate(layers):
        w = np.asarray(w, dtype=np.float64)
        out = []
        for r in range(w.shape[0]):
            acc = 0.0
            for c in range(w.shape[1]):
                acc += float(w[r, c]) * v[c]
            out.append(acc)
        if li < last:
            out = [o if o > 0.0 else 0.0 for o in out]
        v = out
    return np.array(v)


def margin_oracle(scores, y) -> float:
    best_other = -math.inf
    for j, s in enumerate(scores):
        if j != y and float(s) > best_other:
            best_other = float(s)
    return float(scores[y]) - best_other


def loss_oracle(layers, inputs, labels, kind) -> float:
    """Mean loss by per-sample Python evaluation (stable log-sum-exp)."""
    total = 0.0
    m = len(labels)
    for i in range(m):
        scores = forward_oracle(layers, np.asarray(inputs)[i])
        y = int(labels[i])
        if kind == "cross_entropy":
            peak = max(float(s) for s in scores)
            lse = peak + math.log(sum(math.exp(float(s) - peak) for s in scores))
            total += lse - float(scores[y])
        elif kind == "multiclass_hinge":
            total += max(0.0, 1.0 - margin_oracle(scores, y))
        else:
            raise ValueError(f"unknown loss kind {kind!r}")
    return total / m


def fd_gradients(value_fn, layers, step=1e-5):
    """Central-difference gradients of a scalar function of the layer list."""
    grads = []
    work = [np.array(w, dtype=np.float64) for w in layers]
    for li in range(len(work)):
        g = np.zeros_like(work[li])
        for r in range(work[li].shape[0]):
            for c in range(work[li].shape[1]):
                keep = work[li][r, c]
                work[li][r, c] = keep + step
                up = value_fn(work)
                work[li][r, c] = keep - step
                down = value_fn(work)
                work[li][r, c] = keep
                g[r, c] = (up - down) / (2.0 * step)
        grads.append(g)
    return grads


def lemma2_bound_oracle(w_norms, u_norms, B) -> float:
    prod = 1.0
    ratio = 0.0
    for w, u in zip(w_norms, u_norms):
        prod *= float(w)
        ratio += float(u) / float(w)
    return math.e * float(B) * prod * ratio
