"""
COGARCH(p, q) parameters and the matrices derived from them.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numlin
from .errors import DegenerateSpectrum, ValidationError

NORMS = (1, 2, np.inf)


@dataclass(frozen=True)
class CogarchParams:
    """User-facing parameters.

    ``alpha`` holds ``alpha_1..alpha_p`` and ``beta`` holds
    ``beta_1..beta_q``; ``p`` and ``q`` are inferred from their lengths when
    omitted.
    """
    alpha0: float
    alpha: tuple
    beta: tuple
    p: Optional[int] = None
    q: Optional[int] = None

    def __post_init__(self):
        alpha = tuple(float(x) for x in np.atleast_1d(self.alpha))
        beta = tuple(float(x) for x in np.atleast_1d(self.beta))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        p = len(alpha) if self.p is None else int(self.p)
        q = len(beta) if self.q is None else int(self.q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if len(alpha) != p:
            raise ValidationError(f"alpha has {len(alpha)} entries but p = {p}")
        if len(beta) != q:
            raise ValidationError(f"beta has {len(beta)} entries but q = {q}")
        if not q >= p >= 1:
            raise ValidationError(f"need q >= p >= 1, got p={p}, q={q}")
        if not (np.isfinite(self.alpha0) and self.alpha0 > 0):
            raise ValidationError("alpha0 must be finite and > 0")
        if not all(np.isfinite(alpha + beta)):
            raise ValidationError("alpha and beta must be finite")
        if alpha[-1] == 0:
            raise ValidationError("alpha_p must be nonzero")
        if beta[-1] == 0:
            raise ValidationError("beta_q must be nonzero")


@dataclass(frozen=True, eq=False)
class ModelMatrices:
    """Derived objects for a validated parameter set.

    ``a`` is zero-padded to length q.  ``spec`` is sorted with the dominant
    eigenvalue first and ``lam`` is its real part.  ``kappa[r]`` is the
    induced r-norm of ``S^-1 e a' S``.
    """
    params: CogarchParams
    B: np.ndarray
    a: np.ndarray
    e: np.ndarray
    spec: np.ndarray
    lam: float
    S: np.ndarray
    S_inv: np.ndarray
    kappa: dict = field(default_factory=dict)

    @property
    def q(self):
        return self.params.q

    @property
    def p(self):
        return self.params.p

    @property
    def alpha0(self):
        return self.params.alpha0

    @property
    def beta(self):
        return np.asarray(self.params.beta)

    @property
    def u(self):
        """``S^-1 e``: how a unit kick along ``e`` enters eigen-coordinates."""
        return self.S_inv[:, -1]

    @property
    def w(self):
        """``S' a``, so that ``a' Y = w . (S^-1 Y)``."""
        return self.S.T @ self.a

    def to_eigen(self, y):
        return np.asarray(y) @ self.S_inv.T

    def from_eigen(self, x):
        return numlin.real_part(np.asarray(x) @ self.S.T, what="state")

    def flow(self, y, t):
        """``exp(B t) y`` via the eigendecomposition; broadcasts over rows."""
        x = self.to_eigen(y) * np.exp(np.multiply.outer(np.asarray(t), self.spec))
        return self.from_eigen(x)

    def kernel_coefficients(self):
        """Coefficients ``c_j`` with ``a' exp(B t) e = sum_j c_j exp(l_j t)``."""
        return self.w * self.u


def _kappas(S, S_inv, a, e):
    M = S_inv @ np.outer(e, a) @ S
    return {r: numlin.operator_norm(M, r) for r in NORMS}


def build_model(params):
    """Companion matrix, spectrum, Vandermonde diagonalizer and norm constants."""
    if not isinstance(params, CogarchParams):
        raise ValidationError("build_model expects CogarchParams")
    q = params.q
    B = numlin.companion_matrix(params.beta)
    a = np.zeros(q)
    a[:params.p] = params.alpha
    e = np.zeros(q)
    e[-1] = 1.0
    spec = numlin.companion_eigs(params.beta)
    S = numlin.vandermonde_S(spec, B)
    S_inv = np.linalg.inv(S)
    return ModelMatrices(params=params, B=B, a=a, e=e, spec=spec,
                         lam=float(spec[0].real), S=S, S_inv=S_inv,
                         kappa=_kappas(S, S_inv, a, e))


@dataclass(frozen=True, eq=False)
class MeanCorrectedMatrices:
    """``Bt = B + mu e a'`` with its spectrum.

    ``distinct`` is False when the spectrum of ``Bt`` has repeated values;
    ``spec`` then comes from a generic eigen-solver and spectral formulas
    that divide by ``bt'(l)`` must not be used.
    """
    model: ModelMatrices
    mu: float
    Bt: np.ndarray
    beta_tilde: np.ndarray
    spec: np.ndarray
    distinct: bool

    @property
    def lam(self):
        return float(self.spec[0].real)


def mean_corrected(m, mu):
    """Assemble ``B + mu e a'`` and recompute its spectrum."""
    if not (np.isfinite(mu) and mu >= 0):
        raise ValidationError("mu must be finite and >= 0")
    Bt = m.B + mu * np.outer(m.e, m.a)
    # Bt is again a companion matrix: beta_j - mu alpha_{q+1-j}
    beta_tilde = m.beta - mu * m.a[::-1]
    distinct = True
    try:
        if beta_tilde[-1] == 0:
            raise DegenerateSpectrum("zero eigenvalue")
        spec = numlin.companion_eigs(beta_tilde)
    except DegenerateSpectrum:
        distinct = False
        spec = numlin.sort_spectrum(np.linalg.eigvals(Bt))
    return MeanCorrectedMatrices(model=m, mu=float(mu), Bt=Bt, beta_tilde=beta_tilde,
                                 spec=spec, distinct=distinct)


def _poly_desc(coeffs_desc, z):
    val = np.zeros_like(np.asarray(z, dtype=complex))
    for c in coeffs_desc:
        val = val * z + c
    return val


def eval_polys(mc, z):
    """Evaluate ``a(z)``, ``b(z)``, ``bt(z)`` and ``bt'(z)``.

    ``mc`` is a ``MeanCorrectedMatrices``; a bare ``ModelMatrices`` is
    treated as ``mu = 0`` so that ``bt = b``.
    """
    if isinstance(mc, ModelMatrices):
        m, beta_t = mc, mc.beta
    else:
        m, beta_t = mc.model, mc.beta_tilde
    z = np.asarray(z, dtype=complex)
    alpha = np.asarray(m.params.alpha)
    a_val = _poly_desc(alpha[::-1], z)
    b_val = _poly_desc(np.concatenate(([1.0], m.beta)), z)
    bt_coeffs = np.concatenate(([1.0], beta_t))
    bt_val = _poly_desc(bt_coeffs, z)
    q = m.q
    dcoeffs = bt_coeffs[:-1] * np.arange(q, 0, -1)
    btp_val = _poly_desc(dcoeffs, z)
    return a_val, b_val, bt_val, btp_val
