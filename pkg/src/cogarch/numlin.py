"""
Dense linear-algebra kernels.

Everything downstream (model matrices, moment formulas, simulation) goes
through these helpers so that tolerances and failure modes are uniform:
matrix exponentials, companion-polynomial roots, the Vandermonde
diagonalizer, induced matrix norms, Kronecker/vec algebra, Lyapunov
Gramians and a checked linear solve.

All functions are pure.
"""
import functools

import numpy as np
import scipy.linalg as sla

from .errors import (DegenerateSpectrum, IllConditioned, NumericOverflow,
                     SingularMatrix, ValidationError)

DISTINCT_TOL = 1e-8
TIE_TOL = 1e-9
IMAG_TOL = 1e-8
EXPM_NORM_CAP = 1e6


def _as_square(A, name="A"):
    A = np.atleast_2d(np.asarray(A))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    return A


def mat_exp(A, t=1.0):
    """Matrix exponential ``exp(A * t)``.

    Scaling and squaring with a degree-13 Padé approximant (Higham 2005,
    via ``scipy.linalg.expm``).  ``t`` may be negative.

    Raises
    ------
    NumericOverflow
        If ``||A t||_1`` exceeds ``EXPM_NORM_CAP`` or the result is not
        finite.
    """
    A = _as_square(A)
    if not np.isfinite(t):
        raise ValidationError("t must be finite")
    At = A * t
    nrm = np.abs(At).sum(axis=0).max() if At.size else 0.0
    if nrm > EXPM_NORM_CAP:
        raise NumericOverflow(f"||A t||_1 = {nrm:.3g} exceeds cap {EXPM_NORM_CAP:g}")
    with np.errstate(over="ignore", invalid="ignore"):
        E = sla.expm(At)
    if not np.all(np.isfinite(E)):
        raise NumericOverflow(f"exp(A t) overflowed (||A t||_1 = {nrm:.3g})")
    return E


# -- polynomial roots --------------------------------------------------------

def _horner(coeffs, z):
    # coeffs highest degree first
    p = np.zeros_like(z, dtype=complex) + coeffs[0]
    dp = np.zeros_like(p)
    for c in coeffs[1:]:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def aberth_roots(coeffs, tol=1e-15, maxiter=2000):
    """All roots of a polynomial by Aberth–Ehrlich iteration.

    ``coeffs`` is highest degree first; the leading coefficient must be
    nonzero.  Returns an unsorted complex array.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    coeffs = coeffs / coeffs[0]
    n = len(coeffs) - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return np.array([-coeffs[1]])
    # start on a circle around the root centroid, radius from Fujiwara's bound
    centre = -coeffs[1] / n
    k = np.arange(1, n + 1)
    radius = 2 * np.max(np.abs(coeffs[1:]) ** (1.0 / k))
    radius = max(radius, 1e-3)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = centre + radius * np.exp(1j * angles)
    for _ in range(maxiter):
        biggest = 0.0
        for i in range(n):
            p, dp = _horner(coeffs, z[i])
            if p == 0:
                continue
            ratio = p / dp if dp != 0 else p
            diff = z[i] - np.delete(z, i)
            s = np.sum(1.0 / diff)
            step = ratio / (1.0 - ratio * s)
            z[i] -= step
            biggest = max(biggest, abs(step) / (1.0 + abs(z[i])))
        if biggest <= tol:
            break
    # Newton polish
    for _ in range(3):
        p, dp = _horner(coeffs, z)
        ok = dp != 0
        z[ok] = z[ok] - p[ok] / dp[ok]
    return z


def _pair_conjugates(z, tol):
    """Force exact conjugate symmetry on roots of a real polynomial."""
    z = z.copy()
    scale = 1.0 + np.abs(z)
    real = np.abs(z.imag) <= tol * scale
    z[real] = z[real].real
    upper = list(np.flatnonzero(~real & (z.imag > 0)))
    lower = list(np.flatnonzero(~real & (z.imag < 0)))
    if len(upper) != len(lower):
        return z
    for i in upper:
        j = min(lower, key=lambda j: abs(z[j] - np.conj(z[i])))
        lower.remove(j)
        avg = 0.5 * (z[i] + np.conj(z[j]))
        z[i], z[j] = avg, np.conj(avg)
    return z


def _spectrum_cmp(x, y):
    # nonincreasing real part; ties (relative TIE_TOL) by nondecreasing imag
    scale = 1.0 + max(abs(x), abs(y))
    if abs(x.real - y.real) > TIE_TOL * scale:
        return -1 if x.real > y.real else 1
    if x.imag == y.imag:
        return 0
    return -1 if x.imag < y.imag else 1


def sort_spectrum(values):
    """Sort eigenvalues: real part descending, imaginary part ascending on ties."""
    vals = [complex(v) for v in np.asarray(values).ravel()]
    return np.array(sorted(vals, key=functools.cmp_to_key(_spectrum_cmp)),
                    dtype=complex)


def check_distinct(values, tol=DISTINCT_TOL):
    """Raise ``DegenerateSpectrum`` when two values lie within ``tol`` (relative)."""
    v = np.asarray(values, dtype=complex)
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            scale = 1.0 + max(abs(v[i]), abs(v[j]))
            if abs(v[i] - v[j]) <= tol * scale:
                raise DegenerateSpectrum(
                    f"eigenvalues {v[i]:.6g} and {v[j]:.6g} coincide to "
                    f"tolerance {tol:g}")


def companion_eigs(beta):
    """Roots of ``z^q + beta_1 z^(q-1) + ... + beta_q``, sorted.

    Parameters
    ----------
    beta : array_like, length q
        Autoregressive coefficients; ``beta[-1]`` must be nonzero.

    Returns
    -------
    ndarray of complex, length q
        Roots ordered by nonincreasing real part (ties: nondecreasing
        imaginary part).  Complex roots come in exact conjugate pairs.

    Raises
    ------
    DegenerateSpectrum
        If two roots agree to relative tolerance ``DISTINCT_TOL``.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    q = len(beta)
    if q == 0:
        raise ValidationError("beta must be nonempty")
    if beta[-1] == 0:
        raise ValidationError("beta_q must be nonzero")
    coeffs = np.concatenate(([1.0], beta))
    z = _pair_conjugates(aberth_roots(coeffs), 1e-10)
    p, dp = _horner(coeffs, z)
    scale = 1.0 + np.abs(z)
    bad = np.abs(p) > 1e-9 * scale ** q
    if np.any(bad):
        raise DegenerateSpectrum(
            f"root residual too large: max |b(z)| = {np.max(np.abs(p)):.3g}")
    check_distinct(z)
    if q > 1 and np.any(np.abs(dp) <= DISTINCT_TOL * scale ** (q - 1)):
        raise DegenerateSpectrum("b'(z) vanishes at a root: repeated root")
    return sort_spectrum(z)


def companion_matrix(beta):
    """Companion matrix with superdiagonal ones and last row ``-beta`` reversed."""
    beta = np.asarray(beta, dtype=float).ravel()
    q = len(beta)
    B = np.zeros((q, q))
    B[np.arange(q - 1), np.arange(1, q)] = 1.0
    B[-1, :] = -beta[::-1]
    return B


def vandermonde_S(spec, B=None, max_cond=1e12):
    """Vandermonde diagonalizer with column j equal to ``(1, l_j, ..., l_j^(q-1))``.

    If the companion matrix ``B`` is supplied, the diagonalization residual
    ``||S^-1 B S - diag(spec)||_inf`` is checked against ``1e-8`` scaled by
    ``max(1, max|l|)``.
    """
    spec = np.asarray(spec, dtype=complex).ravel()
    q = len(spec)
    check_distinct(spec)
    S = np.vander(spec, q, increasing=True).T
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > max_cond:
        raise IllConditioned(f"Vandermonde matrix condition {cond:.3g} > {max_cond:g}",
                             cond=cond)
    if B is not None:
        D = np.linalg.solve(S, np.asarray(B) @ S)
        resid = np.abs(D - np.diag(spec)).sum(axis=1).max()
        tol = 1e-8 * max(1.0, np.max(np.abs(spec)))
        if resid > tol:
            raise IllConditioned(f"diagonalization residual {resid:.3g} > {tol:.3g}",
                                 cond=cond)
    return S


# -- norms, Kronecker/vec ----------------------------------------------------

def operator_norm(A, r):
    """Induced matrix norm for ``r`` in ``{1, 2, inf}``.

    ``r=1`` is the maximum absolute column sum, ``r=inf`` the maximum
    absolute row sum and ``r=2`` the largest singular value.
    """
    A = np.atleast_2d(np.asarray(A))
    if r in (1, "1"):
        return float(np.abs(A).sum(axis=0).max())
    if r in (np.inf, "inf", "Inf", "infinity"):
        return float(np.abs(A).sum(axis=1).max())
    if r in (2, "2"):
        return float(np.linalg.svd(A, compute_uv=False)[0])
    raise ValidationError(f"norm selector must be 1, 2 or inf, got {r!r}")


def kron(A, B):
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def vec(A):
    """Stack the columns of ``A`` (first column first)."""
    return np.asarray(A).reshape(-1, order="F")


def unvec(x, q):
    x = np.asarray(x)
    if x.size != q * q:
        raise ValidationError(f"cannot reshape vector of length {x.size} to {q}x{q}")
    return x.reshape((q, q), order="F")


# -- linear systems ----------------------------------------------------------

def solve_linear(A, b):
    """Solve ``A x = b`` by LU with partial pivoting, with singularity checks.

    Raises ``SingularMatrix`` (carrying a numerical rank estimate) when the
    smallest singular value falls below ``1e-13 * ||A||_2``.
    """
    A = _as_square(A)
    b = np.asarray(b)
    if b.shape[0] != A.shape[0]:
        raise ValidationError(f"dimension mismatch: A is {A.shape}, b is {b.shape}")
    sv = np.linalg.svd(A, compute_uv=False)
    thresh = 1e-13 * sv[0] if sv.size else 0.0
    if sv.size and (sv[0] == 0 or sv[-1] <= thresh):
        rank = int(np.sum(sv > thresh))
        raise SingularMatrix(f"matrix is singular to tolerance (rank {rank} of {A.shape[0]})",
                             rank=rank)
    return np.linalg.solve(A, b)


def lyapunov_gram(Bt, U):
    """``L = int_0^inf exp(Bt s) U exp(Bt' s) ds`` for a stable ``Bt``.

    Solved as ``((I kron Bt) + (Bt kron I)) vec(L) = -vec(U)``.
    """
    Bt = _as_square(Bt, "Bt")
    U = _as_square(U, "U")
    q = Bt.shape[0]
    if U.shape != Bt.shape:
        raise ValidationError("U must have the same shape as Bt")
    ev = np.linalg.eigvals(Bt)
    if np.max(ev.real) >= 0:
        raise ValidationError(
            f"Bt must have spectrum in the open left half-plane (max Re = {np.max(ev.real):.3g})")
    I = np.eye(q)
    op = np.kron(I, Bt) + np.kron(Bt, I)
    L = unvec(solve_linear(op, -vec(U)), q)
    resid = np.abs(Bt @ L + L @ Bt.T + U).max()
    unorm = max(np.abs(U).max(), 1e-300)
    if resid > 1e-10 * max(unorm, 1.0):
        raise SingularMatrix(f"Lyapunov residual {resid:.3g} too large")
    return L


def real_part(x, tol=IMAG_TOL, what="value"):
    """Return ``x.real`` after checking the imaginary residue is negligible."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        scale = 1.0 + np.max(np.abs(x)) if x.size else 1.0
        resid = np.max(np.abs(x.imag)) if x.size else 0.0
        if resid > tol * scale:
            raise ValidationError(f"{what} has imaginary residue {resid:.3g}")
        x = x.real
    return x if x.ndim else float(x)
