"""Small dense linear algebra.

Everything here works on plain ``numpy`` arrays of modest size (at most a
few dozen rows).  Matrix equations are solved by Kronecker vectorization,
which is exact enough at this scale and keeps the code short.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, DomainError, SingularityError

SEPARATION_TOL = 1e-8
CLUSTER_TOL = 1e-6
RANK_TOL = 1e-8


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float array."""
    m = np.array(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


def _square(a, name="matrix"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    tolerance: float = CLUSTER_TOL

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def max_real(self):
        return float(np.max(self.eigenvalues.real))

    @property
    def min_real(self):
        return float(np.min(self.eigenvalues.real))

    def clusters(self):
        """Group eigenvalues closer than ``tolerance``; returns (center, count) pairs."""
        out = []
        for lam in self.eigenvalues:
            for k, (c, cnt) in enumerate(out):
                if abs(lam - c) <= self.tolerance * max(1.0, abs(c)):
                    out[k] = ((c * cnt + lam) / (cnt + 1), cnt + 1)
                    break
            else:
                out.append((lam, 1))
        return out


def eigenvalues(a, tolerance=CLUSTER_TOL) -> Spectrum:
    """All eigenvalues of a real square matrix.

    LAPACK's ``geev`` (Hessenberg reduction followed by shifted QR) does the
    work; conjugate pairs of a real input come out together.
    """
    m = _square(a)
    try:
        lam = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc
    lam = np.asarray(lam, dtype=complex)
    order = np.lexsort((lam.imag, lam.real))
    return Spectrum(lam[order], tolerance)


def is_hurwitz(a) -> bool:
    return eigenvalues(a).max_real < 0.0


def is_positive_definite(a, sym_tol=1e-12) -> bool:
    """Cholesky test on a symmetric matrix.

    Raises ``DomainError`` when ``a`` is not symmetric to within ``sym_tol``
    relative to its norm.
    """
    m = _square(a)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > sym_tol * scale:
        raise DomainError("positive-definiteness test needs a symmetric matrix")
    try:
        np.linalg.cholesky(0.5 * (m + m.T))
    except np.linalg.LinAlgError:
        return False
    return True


def _rank(m, tol):
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def is_semisimple(a, rank_tol=RANK_TOL, cluster_tol=CLUSTER_TOL) -> bool:
    """True if geometric and algebraic multiplicities agree for every eigenvalue."""
    m = _square(a)
    n = m.shape[0]
    scale = max(1.0, np.linalg.norm(m, 2))
    for lam, alg in eigenvalues(m, cluster_tol).clusters():
        shifted = m.astype(complex) - lam * np.eye(n)
        geo = n - _rank(shifted / scale, rank_tol)
        if geo != alg:
            return False
    return True


def controllability_rank(a, b) -> int:
    a = _square(a, "A")
    b = as_matrix(b, "B")
    if b.shape[0] != a.shape[0]:
        b = b.T
    if b.shape[0] != a.shape[0]:
        raise DimensionError("B must have as many rows as A")
    blocks = [b]
    for _ in range(a.shape[0] - 1):
        blocks.append(a @ blocks[-1])
    return _rank(np.hstack(blocks), 1e-10)


def solve_sylvester(a, b, c):
    """Solve ``X B - A X = C`` for X.

    A is n x n, B is m x m and C is n x m.  The spectra of A and B must be
    separated by at least ``SEPARATION_TOL``.
    """
    a = _square(a, "A")
    b = _square(b, "B")
    c = as_matrix(c, "C")
    n, m = a.shape[0], b.shape[0]
    if c.shape != (n, m):
        raise DimensionError(f"C must be {n}x{m}, got {c.shape}")
    la = eigenvalues(a).eigenvalues
    lb = eigenvalues(b).eigenvalues
    gap = np.min(np.abs(la[:, None] - lb[None, :]))
    if gap < SEPARATION_TOL:
        raise SingularityError(f"A and B share an eigenvalue (separation {gap:.3g})")
    # column-major vec: vec(XB) = (B^T kron I) vec X, vec(AX) = (I kron A) vec X
    op = np.kron(b.T, np.eye(n)) - np.kron(np.eye(m), a)
    x = np.linalg.solve(op, c.reshape(-1, order="F"))
    return x.reshape((n, m), order="F")


def solve_lyapunov(a, r):
    """Solve ``A^T P + P A = -R`` for a Hurwitz A; P comes back symmetrized."""
    a = _square(a, "A")
    r = _square(r, "R")
    if r.shape != a.shape:
        raise DimensionError("A and R must have the same shape")
    if not is_hurwitz(a):
        raise DomainError("Lyapunov equation needs a Hurwitz matrix")
    # P A - (-A^T) P = -R
    p = solve_sylvester(-a.T, a, -r)
    return 0.5 * (p + p.T)


def minimal_polynomial(s, tol=1e-9):
    """Coefficients ``[a_0, ..., a_{l-1}]`` of the monic minimal polynomial of ``s``.

    Walks the Krylov sequence I, S, S^2, ... and stops at the first power
    that lies in the span of the previous ones (least-squares residual at
    most ``tol`` relative to the size of that power).
    """
    s = _square(s, "S")
    n = s.shape[0]
    powers = [np.eye(n).ravel()]
    current = np.eye(n)
    for k in range(1, n + 1):
        current = current @ s
        target = current.ravel()
        basis = np.column_stack(powers)
        coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
        resid = np.linalg.norm(basis @ coef - target)
        if resid <= tol * max(1.0, np.linalg.norm(target)):
            return [float(-c) for c in coef]
        powers.append(target)
    # Cayley-Hamilton guarantees termination by degree n
    raise ConvergenceError("no annihilating polynomial found up to degree n")


def poly_eval_matrix(coeffs, s):
    """Evaluate the monic polynomial with low-order ``coeffs`` at matrix ``s``."""
    s = _square(s, "S")
    n = s.shape[0]
    acc = np.eye(n)
    out = coeffs[0] * np.eye(n) if coeffs else np.zeros((n, n))
    for c in coeffs[1:]:
        acc = acc @ s
        out = out + c * acc
    return out + acc @ s
