"""
Exact event-driven simulation of the state ``Y``, volatility ``V`` and
price ``G`` for compound-Poisson (plus Brownian) drivers.

Between jumps the state flows as ``exp(B t) Y``; at a jump with size
``dL`` it is kicked by ``e V dL^2``.  All flows are done in the
eigen-coordinates ``x = S^-1 Y`` where they are diagonal.
"""
from dataclasses import dataclass
import math
import warnings
from typing import Optional

import numpy as np

from . import numlin
from ._kernels import event_loop
from .conditions import (PROVEN_NONNEGATIVE, check_initial_state, check_positivity,
                         check_stationarity)
from .errors import (InvariantBreach, NonConvergence, NotApplicable, ValidationError,
                     ConditionFailed)
from .levy import sample_jumps


V_FLOOR_TOL = 1e-10
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


# -- single steps --------------------------------------------------------------

def step_recurrence(y, T, Z, m):
    """One flow-then-jump step: ``(I + Z e a') exp(B T) y + alpha0 Z e``."""
    if T < 0:
        raise ValidationError("waiting time must be >= 0")
    y1 = numlin.mat_exp(m.B, T) @ np.asarray(y, dtype=float)
    return y1 + Z * (m.alpha0 + m.a @ y1) * m.e


def fixed_point_map(y, T, Z, m):
    """Jump-then-flow map ``Q y + R = exp(B T)[(I + Z e a') y + alpha0 Z e]``.

    The stationary state is a fixed point in distribution of this map
    when ``T ~ Exponential(c)`` and ``Z = J^2`` are independent of ``y``.
    Vectorized over rows of ``y`` and entries of ``T`` and ``Z``.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    T = np.broadcast_to(np.asarray(T, dtype=float), (y.shape[0],))
    Z = np.broadcast_to(np.asarray(Z, dtype=float), (y.shape[0],))
    kicked = y + np.outer(Z * (m.alpha0 + y @ m.a), m.e)
    return m.flow(kicked, T)


# -- integrals of V over an inter-jump interval ------------------------------

def _int_v(m, x, delta):
    """``int_0^delta V ds`` for rows of eigen-states ``x`` and lengths ``delta``."""
    lam = m.spec
    z = np.multiply.outer(delta, lam)
    # (exp(l d) - 1)/l, stable for small l d
    phi = np.where(np.abs(z) > 1e-8, np.expm1(z) / np.where(z == 0, 1, z), 1 + z / 2)
    phi = phi * delta[:, None]
    return m.alpha0 * delta + (x * phi) @ m.w


def _int_sqrt_v(m, x, delta, chunk=100_000):
    """``int_0^delta sqrt(V) ds`` by 16-point Gauss-Legendre per interval."""
    out = np.empty(len(delta))
    s = 0.5 * (_GL_NODES + 1.0)
    for i in range(0, len(delta), chunk):
        xs, ds = x[i:i + chunk], delta[i:i + chunk]
        t = ds[:, None] * s[None, :]
        ph = np.exp(t[:, :, None] * m.spec[None, None, :])
        v = m.alpha0 + np.real((xs[:, None, :] * ph) @ m.w)
        out[i:i + chunk] = 0.5 * ds * (np.sqrt(np.maximum(v, 0.0)) @ _GL_WEIGHTS)
    return out


def _continuous_increment(m, d, x, delta, rng):
    """Price increment over intervals without jumps: Brownian part and the
    drift compensating the jump mean.  Returns (total, brownian part)."""
    n = len(delta)
    bm = np.zeros(n)
    if d.brownian_var > 0:
        iv = np.maximum(np.real(_int_v(m, x, delta)), 0.0)
        bm = np.sqrt(d.brownian_var * iv) * rng.standard_normal(n)
    total = bm.copy()
    if d.drift != 0:
        total += d.drift * _int_sqrt_v(m, x, delta)
    return total, bm


# -- paths -----------------------------------------------------------------

@dataclass(eq=False)
class Path:
    """Event-indexed trajectory.

    Arrays indexed by event: ``times`` (jump times), ``dL`` (jump sizes),
    ``Z = dL^2``, ``y_post`` (state right after the jump), ``v_pre``
    (volatility left limit), ``dG`` (price jump ``sqrt(V) dL``) and ``G``
    (price right after the jump).  ``cont`` holds the continuous price
    increments on ``[0, G_1), ..., [G_n, horizon]`` (length n + 1) and
    ``brownian`` their Brownian parts.
    """
    model: object
    driver: object
    horizon: float
    y0: np.ndarray
    times: np.ndarray
    dL: np.ndarray
    y_post: np.ndarray
    v_pre: np.ndarray
    dG: np.ndarray
    G: np.ndarray
    cont: np.ndarray
    brownian: np.ndarray
    seed: Optional[object] = None
    negative_v: int = 0

    @property
    def n_events(self):
        return len(self.times)

    @property
    def Z(self):
        return self.dL ** 2

    @property
    def y_pre(self):
        prev = np.vstack((self.y0[None, :], self.y_post[:-1])) if self.n_events else self.y_post
        gaps = np.diff(self.times, prepend=0.0)
        return self.model.flow(prev, gaps)

    @property
    def v_post(self):
        return self.model.alpha0 + self.y_post @ self.model.a

    @property
    def G_T(self):
        last = self.G[-1] if self.n_events else 0.0
        return float(last + self.cont[-1])

    @property
    def y_T(self):
        last = self.y_post[-1] if self.n_events else self.y0
        t0 = self.times[-1] if self.n_events else 0.0
        return self.model.flow(last, self.horizon - t0)


def _resolve_init(m, d, init, rng, override):
    if init is None or (isinstance(init, str) and init == "zero"):
        return np.zeros(m.q)
    if isinstance(init, str) and init == "stationary":
        return stationary_init(m, d, rng)
    if isinstance(init, str):
        raise ValidationError(f"unknown init {init!r}")
    y0 = np.asarray(init, dtype=float)
    if y0.shape != (m.q,):
        raise ValidationError(f"initial state must have length {m.q}")
    if not override and not check_initial_state(m, y0):
        raise ConditionFailed("initial state lets the volatility drop below zero",
                              label="initial-state")
    return y0


def simulate_from_jumps(m, d, jumps, y0, horizon, rng=None, positivity=None):
    """Run the recurrence over a given jump stream starting from ``y0``.

    ``rng`` is only needed when the driver has a Brownian part.
    ``positivity`` is an optional verdict from ``check_positivity``; when
    it proves the kernel nonnegative any negative volatility is an error.
    """
    times = np.asarray(jumps.times, dtype=float)
    dL = np.asarray(jumps.sizes, dtype=float)
    if len(times) and (np.any(np.diff(times) <= 0) or times[0] <= 0 or times[-1] > horizon):
        raise ValidationError("jump times must be strictly increasing in (0, horizon]")
    y0 = np.asarray(y0, dtype=float)
    x0 = m.to_eigen(y0).astype(complex)
    gaps = np.diff(times, prepend=0.0)
    xs, v_pre = event_loop(m.spec, m.u, m.w, float(m.alpha0), gaps, dL ** 2, x0)
    y_post = np.real(xs @ m.S.T)

    negative = int(np.sum(v_pre < 0))
    if negative:
        verdict = positivity
        if verdict is None:
            try:
                verdict = check_positivity(m)
            except NotApplicable:
                verdict = None
        # the guarantee only covers admissible starting states
        if verdict is not None and verdict.status == PROVEN_NONNEGATIVE \
                and v_pre.min() < -V_FLOOR_TOL * max(1.0, m.alpha0) \
                and check_initial_state(m, y0):
            raise InvariantBreach(f"volatility {v_pre.min():.3g} < 0 although the kernel "
                                  "is proven nonnegative")
        warnings.warn(f"{negative} jump(s) saw negative volatility; "
                      "the square root is taken of max(V, 0)")

    dG = np.sqrt(np.maximum(v_pre, 0.0)) * dL
    starts = np.vstack((x0[None, :], xs))
    lengths = np.append(gaps, horizon - (times[-1] if len(times) else 0.0))
    if d.brownian_var > 0 and rng is None:
        raise ValidationError("a Brownian driver needs an rng")
    cont, bm = _continuous_increment(m, d, starts, lengths, rng)
    G = np.cumsum(cont[:-1] + dG)
    return Path(model=m, driver=d, horizon=float(horizon), y0=y0, times=times, dL=dL,
                y_post=y_post, v_pre=v_pre, dG=dG, G=G, cont=cont, brownian=bm,
                negative_v=negative)


def simulate_path(m, d, horizon, init="zero", rng=None, override=False, positivity=None,
                  seed=None):
    """Simulate one path on ``[0, horizon]``.

    ``init`` is ``"zero"``, ``"stationary"`` or an explicit state; an
    explicit state must pass ``check_initial_state`` unless ``override``.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    if not horizon > 0:
        raise ValidationError("horizon must be > 0")
    y0 = _resolve_init(m, d, init, rng, override)
    jumps = sample_jumps(d, horizon, rng)
    path = simulate_from_jumps(m, d, jumps, y0, horizon, rng=rng, positivity=positivity)
    path.seed = seed
    return path


# -- grids -----------------------------------------------------------------

@dataclass(eq=False)
class GridSample:
    dt: float
    t: np.ndarray
    V: np.ndarray
    G: np.ndarray
    Y: np.ndarray


def _grid_times(dt, horizon):
    n = int(math.floor(horizon / dt + 1e-9))
    return dt * np.arange(n + 1)


def sample_grid(path, m, dt, rng=None):
    """Observe a path at ``0, dt, 2 dt, ...`` up to the horizon.

    ``V`` uses left limits (an event exactly at a grid time is not yet
    included); ``Y`` and ``G`` are right-continuous.  With a Brownian
    driver, ``G`` between events needs the Brownian bridge of the interval,
    drawn from ``rng``.
    """
    if not dt > 0:
        raise ValidationError("grid step must be > 0")
    d = path.driver
    t = _grid_times(dt, path.horizon)
    times = path.times
    xpost = m.to_eigen(path.y_post) if path.n_events else np.zeros((0, m.q), complex)
    x_all = np.vstack((m.to_eigen(path.y0)[None, :].astype(complex), xpost))
    t_all = np.concatenate(([0.0], times))

    il = np.searchsorted(times, t, side="left")
    x_left = x_all[il] * np.exp(np.multiply.outer(t - t_all[il], m.spec))
    V = m.alpha0 + np.real(x_left @ m.w)

    ir = np.searchsorted(times, t, side="right")
    tau = t - t_all[ir]
    x_right = x_all[ir] * np.exp(np.multiply.outer(tau, m.spec))
    Y = np.real(x_right @ m.S.T)

    G_all = np.concatenate(([0.0], path.G))
    G = G_all[ir].copy()
    if d.drift != 0:
        G += d.drift * _int_sqrt_v(m, x_all[ir], tau)
    if d.brownian_var > 0:
        if rng is None:
            raise ValidationError("a Brownian driver needs an rng for grid sampling")
        G += _bridge_partials(m, d, path, x_all, t_all, ir, tau, rng)
    return GridSample(dt=float(dt), t=t, V=V, G=G, Y=Y)


def _bridge_partials(m, d, path, x_all, t_all, ir, tau, rng):
    """Brownian part accumulated from the last event to each grid time.

    Conditionally on the path of ``V`` the Brownian contribution on an
    interval is a time-changed Brownian motion with clock ``tau^2 int V``.
    Given its total over the interval, the partial sums at several
    interior times form a Brownian bridge in that clock.  Grid times in
    the same interval are handled in order so the bridge is exact.
    """
    total = path.brownian
    lengths = np.append(np.diff(t_all), path.horizon - t_all[-1])
    clock = d.brownian_var * np.maximum(np.real(_int_v(m, x_all[ir], tau)), 0.0)
    clock_full = d.brownian_var * np.maximum(
        np.real(_int_v(m, x_all[ir], lengths[ir])), 0.0)
    out = np.zeros(len(tau))
    # grid times are sorted, so points in one interval are contiguous
    prev_k, prev_c, prev_w = -1, 0.0, 0.0
    for j in range(len(tau)):
        k = ir[j]
        if k != prev_k:
            prev_k, prev_c, prev_w = k, 0.0, 0.0
        c, cT, W = clock[j], clock_full[j], total[k]
        if cT <= 0 or c <= prev_c:
            out[j] = prev_w
            continue
        frac = (c - prev_c) / (cT - prev_c)
        mean = prev_w + frac * (W - prev_w)
        var = (c - prev_c) * (cT - c) / (cT - prev_c)
        w = mean + math.sqrt(max(var, 0.0)) * rng.standard_normal()
        out[j] = w
        prev_c, prev_w = c, w
    return out


# -- stationary initialization -------------------------------------------

def stationary_init(m, d, rng, tol=1e-10, max_terms=1_000_000, size=None, check=True):
    """Draw from the stationary state distribution.

    Sums the forward series ``sum_i C_1 ... C_i D_{i+1}`` until the
    Frobenius norm of the running product (in eigen-coordinates) is below
    ``tol``, then applies an independent Exponential(c) flow.  ``size``
    draws are produced in parallel; ``size=None`` returns one state.
    """
    if check:
        rep = check_stationarity(m, d)
        if not rep.satisfied:
            raise ConditionFailed("stationarity condition does not hold", label=rep.equation)
    n = 1 if size is None else int(size)
    q = m.q
    u, w, lam = m.u, m.w, m.spec
    P = np.tile(np.eye(q, dtype=complex), (n, 1, 1))
    acc = np.zeros((n, q), dtype=complex)
    active = np.arange(n)
    terms = 0
    while active.size:
        if terms >= max_terms:
            raise NonConvergence(f"stationary series did not converge in {max_terms} terms "
                                 f"({active.size} draws pending)")
        k = active.size
        T = rng.exponential(1.0 / d.rate, k)
        Z = d.jump.sample(rng, k) ** 2
        Pa = P[active]
        Pu = Pa @ u
        acc[active] += m.alpha0 * Z[:, None] * Pu
        # P <- P (I + Z u w') diag(exp(lam T))
        Pa = (Pa + Z[:, None, None] * Pu[:, :, None] * w[None, None, :])
        Pa *= np.exp(np.multiply.outer(T, lam))[:, None, :]
        P[active] = Pa
        done = np.sqrt(np.sum(np.abs(Pa) ** 2, axis=(1, 2))) < tol
        active = active[~done]
        terms += 1
    T = rng.exponential(1.0 / d.rate, n)
    x = acc * np.exp(np.multiply.outer(T, lam))
    y = np.real(x @ m.S.T)
    return y[0] if size is None else y


# -- ensembles ---------------------------------------------------------------

def simulate_endpoints(m, d, y0, horizon, rng):
    """Run many independent paths from the rows of ``y0`` for time
    ``horizon``; return the final states and the price increments."""
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    n = y0.shape[0]
    x = m.to_eigen(y0).astype(complex)
    G = np.zeros(n)
    elapsed = np.zeros(n)
    active = np.arange(n)
    while active.size:
        k = active.size
        gap = rng.exponential(1.0 / d.rate, k)
        stop = elapsed[active] + gap > horizon
        delta = np.where(stop, horizon - elapsed[active], gap)
        xa = x[active]
        inc, _ = _continuous_increment(m, d, xa, delta, rng)
        xa = xa * np.exp(np.multiply.outer(delta, m.spec))
        jump = ~stop
        dL = d.jump.sample(rng, k)
        v = m.alpha0 + np.real(xa @ m.w)
        inc = inc + np.where(jump, np.sqrt(np.maximum(v, 0.0)) * dL, 0.0)
        kick = np.where(jump, v * dL ** 2, 0.0)
        xa = xa + kick[:, None] * m.u[None, :]
        x[active] = xa
        G[active] += inc
        elapsed[active] += delta
        active = active[jump]
    return np.real(x @ m.S.T), G


def sample_propagators(m, d, t, n, rng):
    """Draw ``n`` propagators ``J_{0,t} = exp(B(t - G_N)) C_N ... C_1``
    (real ``q x q`` matrices)."""
    q = m.q
    u, w, lam = m.u, m.w, m.spec
    J = np.tile(np.eye(q, dtype=complex), (n, 1, 1))
    elapsed = np.zeros(n)
    active = np.arange(n)
    while active.size:
        k = active.size
        gap = rng.exponential(1.0 / d.rate, k)
        stop = elapsed[active] + gap > t
        delta = np.where(stop, t - elapsed[active], gap)
        Z = np.where(stop, 0.0, d.jump.sample(rng, k) ** 2)
        Ja = J[active] * np.exp(np.multiply.outer(delta, lam))[:, :, None]
        Ja = Ja + Z[:, None, None] * u[None, :, None] * (w @ Ja)[:, None, :]
        J[active] = Ja
        elapsed[active] += delta
        active = active[~stop]
    return np.real(m.S @ J @ m.S_inv)


# -- COGARCH(1,1) explicit formula -----------------------------------------

def cogarch11_reference(omega0, omega1, eta, jump_times, jump_sizes, sigma0_sq, t,
                        left=True):
    """Volatility of the COGARCH(1,1) process from its explicit representation.

    ``X_t = eta t - sum log(1 + omega1 e^eta dL^2)`` and
    ``sigma_t^2 = (sigma0^2 + omega0 int_0^t e^{X_s} ds) e^{-X_t}``; the
    integral is piecewise exponential and evaluated in closed form.  With
    ``left=True`` jumps at exactly ``t`` are excluded (left limits).
    """
    jt = np.asarray(jump_times, dtype=float)
    js = np.asarray(jump_sizes, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    # X right after each jump, and the integral up to each jump
    logk = np.log1p(omega1 * math.exp(eta) * js ** 2)
    gaps = np.diff(jt, prepend=0.0)
    X_post = eta * jt - np.cumsum(logk)
    X_pre_start = np.concatenate(([0.0], X_post))
    seg = np.exp(X_pre_start[:-1]) * _expm1_ratio(eta, gaps)
    I_at = np.concatenate(([0.0], np.cumsum(seg)))
    idx = np.searchsorted(jt, t, side="left" if left else "right")
    t0 = np.concatenate(([0.0], jt))[idx]
    X0 = X_pre_start[idx]
    dt = t - t0
    integral = I_at[idx] + np.exp(X0) * _expm1_ratio(eta, dt)
    X_t = X0 + eta * dt
    return (sigma0_sq + omega0 * integral) * np.exp(-X_t)


def _expm1_ratio(eta, dt):
    """``(e^{eta dt} - 1)/eta`` with the ``eta -> 0`` limit."""
    dt = np.asarray(dt, dtype=float)
    if eta == 0:
        return dt
    return np.expm1(eta * dt) / eta


def cogarch11_map(alpha0, alpha1, beta1):
    """Parameters ``(omega0, omega1, eta)`` of the explicit representation."""
    return alpha0 * beta1, alpha1 * math.exp(-beta1), beta1


# -- seeding -----------------------------------------------------------------

def spawn_rngs(seed, n):
    """``n`` independent generators, deterministic given ``seed`` and index."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def ensemble(m, d, horizon, n_paths, seed, init="stationary", workers=1):
    """Independent paths, path ``i`` driven by the ``i``-th spawned stream."""
    rngs = spawn_rngs(seed, n_paths)

    def one(i):
        return simulate_path(m, d, horizon, init=init, rng=rngs[i], seed=(seed, i))

    if workers == 1:
        return [one(i) for i in range(n_paths)]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(one, range(n_paths)))
