"""
Closed-form stationary moments of the state and volatility, their
autocovariances, and the second-order structure of price increments.
"""
from dataclasses import dataclass, asdict
import logging
import warnings

import numpy as np

from . import numlin
from .conditions import check_moment
from .errors import ConditionFailed, InvariantBreach, SingularMatrix, ValidationError
from .model import mean_corrected, eval_polys

log = logging.getLogger(__name__)

MAX_Q_DENSE = 12
MIN_HR_PATHS = 1000


def _require(m, d, k):
    rep = check_moment(m, d, k)
    if not rep.satisfied:
        raise ConditionFailed(f"condition {rep.equation} ({rep.description}) does not hold",
                              label=rep.equation)
    return rep


def _denominator(m, d):
    """``beta_q - mu alpha_1``; zero exactly when ``Bt`` is singular."""
    den = m.beta[-1] - d.mu * m.a[0]
    if abs(den) <= 1e-14 * max(abs(m.beta[-1]), 1.0):
        raise SingularMatrix("Bt is singular (beta_q = alpha_1 mu)")
    return den


def mean_state(m, d, check=True):
    """Stationary mean ``-alpha0 mu Bt^-1 e``.

    Cross-checked against the explicit form ``alpha0 mu/(beta_q - alpha_1 mu) e_1``.
    """
    if check:
        _require(m, d, 1)
    den = _denominator(m, d)
    mc = mean_corrected(m, d.mu)
    ey = -m.alpha0 * d.mu * numlin.solve_linear(mc.Bt, m.e)
    explicit = np.zeros(m.q)
    explicit[0] = m.alpha0 * d.mu / den
    if np.max(np.abs(ey - explicit)) > 1e-10 * max(1.0, abs(explicit[0])):
        raise InvariantBreach("the two expressions for the stationary mean disagree")
    return explicit


def _variance_constant(m, d):
    den = _denominator(m, d)
    return m.alpha0 ** 2 * m.beta[-1] ** 2 * d.rho / den ** 2


def m_value(m, d):
    """``rho a' L a`` with ``L`` the Gramian of ``(Bt, e e')``."""
    mc = mean_corrected(m, d.mu)
    if mc.lam >= 0:
        raise ValidationError("Bt is not stable, m is undefined")
    L = numlin.lyapunov_gram(mc.Bt, np.outer(m.e, m.e))
    val = float(d.rho * m.a @ L @ m.a)
    if val >= 1.0 and check_moment(m, d, 2).satisfied:
        raise InvariantBreach(f"m = {val:.6g} >= 1 although the second-moment condition holds")
    return val


def _psd_clean(C, what):
    C = 0.5 * (C + C.T)
    ev, V = np.linalg.eigh(C)
    floor = -1e-8 * max(np.trace(C), 0.0)
    if ev.min() < floor:
        raise InvariantBreach(f"{what} is not positive semi-definite (min eigenvalue {ev.min():.3g})")
    if ev.min() < 0:
        log.warning("%s: clipping eigenvalues down to %.3g", what, ev.min())
        C = (V * np.clip(ev, 0, None)) @ V.T
        C = 0.5 * (C + C.T)
    return C


def cov_state_routes(m, d):
    """Stationary covariance of the state by the dense Kronecker system and
    by the Gramian route, both unprocessed."""
    q = m.q
    if q > MAX_Q_DENSE:
        raise ValidationError(f"dense covariance solve supports q <= {MAX_Q_DENSE}")
    mc = mean_corrected(m, d.mu)
    K = _variance_constant(m, d)
    I = np.eye(q)
    ea = np.outer(m.e, m.a)
    op = np.kron(I, mc.Bt) + np.kron(mc.Bt, I) + d.rho * np.kron(ea, ea)
    ee = np.outer(m.e, m.e)
    C_kron = numlin.unvec(numlin.solve_linear(op, -K * numlin.vec(ee)), q)
    mv = m_value(m, d)
    C_gram = K / (1.0 - mv) * numlin.lyapunov_gram(mc.Bt, ee)
    return C_kron, C_gram


def cov_state(m, d, check=True):
    """Stationary covariance of the state (symmetric, PSD-cleaned)."""
    if check:
        _require(m, d, 2)
    C_kron, C_gram = cov_state_routes(m, d)
    scale = max(np.abs(C_gram).max(), 1e-300)
    if np.abs(C_kron - C_gram).max() > 1e-8 * scale:
        raise InvariantBreach("Kronecker and Gramian covariance routes disagree")
    return _psd_clean(C_kron, "state covariance")


def stationary_v_moments(m, d, check=True):
    """``(E V, var V)`` of the stationary volatility."""
    if check:
        _require(m, d, 2)
    den = _denominator(m, d)
    ev = m.alpha0 * m.beta[-1] / den
    mv = m_value(m, d)
    var = (m.alpha0 * m.beta[-1] / den) ** 2 * mv / (1.0 - mv)
    C = cov_state(m, d, check=False)
    alt = float(m.a @ C @ m.a)
    if abs(alt - var) > 1e-8 * max(abs(var), 1e-300):
        raise InvariantBreach("a' C a disagrees with the closed-form volatility variance")
    return float(ev), float(var)


def acvf_coefficients(m, d):
    """Pairs ``(l_j, w_j)`` with ``acvf_V(h) = sum_j w_j exp(l_j h)``.

    Needs the eigenvalues of ``Bt`` to be distinct.
    """
    mc = mean_corrected(m, d.mu)
    if not mc.distinct:
        raise SingularMatrix("eigenvalues of Bt are repeated; spectral form unavailable")
    K = _variance_constant(m, d) / (1.0 - m_value(m, d))
    lt = mc.spec
    a_pos, _, _, btp = eval_polys(mc, lt)
    a_neg, _, bt_neg, _ = eval_polys(mc, -lt)
    return lt, K * a_pos * a_neg / (btp * bt_neg)


def acvf_V_spectral(m, d, h):
    lt, w = acvf_coefficients(m, d)
    h = np.asarray(h, dtype=float)
    vals = np.exp(np.multiply.outer(h, lt)) @ w
    return numlin.real_part(vals, what="spectral autocovariance")


def acvf_V(m, d, h, check=True):
    """``cov(V_{t+h}, V_t) = a' exp(Bt h) C a``; accepts scalar or array ``h``.

    The spectral form is computed alongside whenever the eigenvalues of
    ``Bt`` are distinct and both must agree.
    """
    if check:
        _require(m, d, 2)
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(h_arr < 0):
        raise ValidationError("lag h must be >= 0")
    mc = mean_corrected(m, d.mu)
    Ca = cov_state(m, d, check=False) @ m.a
    vals = np.array([m.a @ numlin.mat_exp(mc.Bt, hh) @ Ca for hh in h_arr])
    if mc.distinct:
        spec_vals = acvf_V_spectral(m, d, h_arr)
        scale = max(abs(float(m.a @ Ca)), 1e-300)
        if np.abs(vals - spec_vals).max() > 1e-8 * scale:
            raise InvariantBreach("matrix and spectral autocovariance routes disagree")
    else:
        warnings.warn("repeated eigenvalues of Bt: spectral autocovariance skipped")
    return float(vals[0]) if np.ndim(h) == 0 else vals


def acf_V(m, d, h):
    """Autocorrelation of the stationary volatility."""
    return acvf_V(m, d, h) / acvf_V(m, d, 0.0)


def increment_moments(m, d, r):
    """Mean and variance of a price increment over a window of length ``r``."""
    if not r >= 0:
        raise ValidationError("spacing r must be >= 0")
    _require(m, d, 1)
    den = _denominator(m, d)
    return 0.0, float(m.alpha0 * m.beta[-1] * r / den * d.second_moment)


def hr_factor(m, d, r):
    """``E L_1^2 Bt^-1 (I - exp(-Bt r))``, the matrix mapping
    ``cov(Y_r, G_r^2)`` to ``H_r``."""
    mc = mean_corrected(m, d.mu)
    q = m.q
    M = np.eye(q) - numlin.mat_exp(mc.Bt, -r)
    return d.second_moment * numlin.solve_linear(mc.Bt, M)


def sq_increment_acvf(m, d, r, h, Hr):
    """``cov((G^(r)_t)^2, (G^(r)_{t+h})^2) = a' exp(Bt h) H_r`` for ``h >= r``."""
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(h_arr < r):
        raise ValidationError("squared-increment autocovariance needs h >= r")
    mc = mean_corrected(m, d.mu)
    Hr = np.asarray(Hr, dtype=float)
    vals = np.array([m.a @ numlin.mat_exp(mc.Bt, hh) @ Hr for hh in h_arr])
    return float(vals[0]) if np.ndim(h) == 0 else vals


@dataclass
class HrEstimate:
    """Monte-Carlo estimate of ``H_r`` (labelled as estimated everywhere)."""
    r: float
    Hr: np.ndarray
    se: np.ndarray
    cov_YG2: np.ndarray
    cov_se: np.ndarray
    n_paths: int
    estimated: bool = True


def estimate_Hr(m, d, r, n_paths, rng, chunk=20_000):
    """Estimate ``H_r`` from ``n_paths`` stationary starts.

    Each start is run for time ``r``; ``cov(Y_r, G_r^2)`` is estimated by
    streaming moment accumulation over chunks and pushed through
    ``hr_factor``.  Standard errors use the delta method per component.
    """
    from .simulate import stationary_init, simulate_endpoints

    if n_paths < MIN_HR_PATHS:
        raise ValidationError(f"estimate_Hr needs n_paths >= {MIN_HR_PATHS}")
    if not r > 0:
        raise ValidationError("spacing r must be > 0")
    q = m.q
    n = 0
    s_y = np.zeros(q)
    s_g = 0.0
    s_yg = np.zeros(q)
    s_yy = np.zeros(q)
    s_gg = 0.0
    # products needed for the variance of each covariance estimator
    s_yyg = np.zeros(q)
    s_ygg = np.zeros(q)
    s_yygg = np.zeros(q)
    remaining = int(n_paths)
    while remaining:
        k = min(chunk, remaining)
        y0 = stationary_init(m, d, rng, size=k)
        yT, gT = simulate_endpoints(m, d, y0, r, rng)
        g2 = gT ** 2
        n += k
        s_y += yT.sum(0)
        s_g += g2.sum()
        s_yg += (yT * g2[:, None]).sum(0)
        s_yy += (yT ** 2).sum(0)
        s_gg += (g2 ** 2).sum()
        s_yyg += (yT ** 2 * g2[:, None]).sum(0)
        s_ygg += (yT * g2[:, None] ** 2).sum(0)
        s_yygg += (yT ** 2 * g2[:, None] ** 2).sum(0)
        remaining -= k
    my, mg = s_y / n, s_g / n
    cov = s_yg / n - my * mg
    # variance of the product of centred variables, expanded in raw moments
    eyy, egg = s_yy / n, s_gg / n
    e_yg = s_yg / n
    e_c2 = (s_yygg / n - 2 * mg * s_yyg / n + mg ** 2 * eyy
            - 2 * my * (s_ygg / n - 2 * mg * e_yg + mg ** 2 * my)
            + my ** 2 * (egg - 2 * mg * mg + mg ** 2))
    var_c = np.maximum(e_c2 - cov ** 2, 0.0)
    cov_se = np.sqrt(var_c / n)
    F = hr_factor(m, d, r)
    Hr = F @ cov
    # components of the covariance estimate are treated as independent
    se = np.sqrt((F ** 2) @ cov_se ** 2)
    return HrEstimate(r=float(r), Hr=Hr, se=se, cov_YG2=cov, cov_se=cov_se, n_paths=n)


def expected_flow(m, c):
    """``E exp(B T)`` for ``T ~ Exponential(c)``: ``(I - B/c)^-1``."""
    return numlin.solve_linear(np.eye(m.q) - m.B / c, np.eye(m.q))


def fixed_point_mean(m, d):
    """Stationary mean from the fixed-point identity ``(I - E Q) E Y = E R``.

    ``Q = exp(B T)(I + Z e a')`` and ``R = alpha0 Z exp(B T) e`` with
    independent ``T ~ Exponential(c)`` and ``Z = J^2``.
    """
    F = expected_flow(m, d.rate)
    EZ = d.jump.even_moment(1)
    EQ = F @ (np.eye(m.q) + EZ * np.outer(m.e, m.a))
    ER = m.alpha0 * EZ * F @ m.e
    return numlin.solve_linear(np.eye(m.q) - EQ, ER)


@dataclass
class MomentReport:
    E_Y: np.ndarray
    cov_Y: np.ndarray
    E_V: float
    var_V: float
    m: float
    acvf_lambdas: np.ndarray
    acvf_weights: np.ndarray
    E_L1_sq: float
    E_psi: float
    increment_var: float
    r: float

    def to_dict(self):
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, np.ndarray) and np.iscomplexobj(v):
                out[k] = {"re": v.real.tolist(), "im": v.imag.tolist()}
            elif isinstance(v, np.ndarray):
                out[k] = v.tolist()
            else:
                out[k] = v
        return out


def moment_report(m, d, r=1.0):
    """Collect the closed-form second-order quantities.

    ``E_psi = alpha_1 mu/(beta_q - mu alpha_1)`` is the stationary mean of
    the auxiliary comparison process and is reported only as a diagnostic.
    """
    _require(m, d, 2)
    ev, var = stationary_v_moments(m, d)
    try:
        lt, w = acvf_coefficients(m, d)
    except SingularMatrix:
        lt, w = np.array([], dtype=complex), np.array([], dtype=complex)
    den = _denominator(m, d)
    return MomentReport(
        E_Y=mean_state(m, d), cov_Y=cov_state(m, d), E_V=ev, var_V=var,
        m=m_value(m, d), acvf_lambdas=lt, acvf_weights=w,
        E_L1_sq=d.second_moment, E_psi=float(m.a[0] * d.mu / den),
        increment_var=increment_moments(m, d, r)[1], r=float(r))
