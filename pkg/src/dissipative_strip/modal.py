"""Per-mode spectral quantities, modal propagators and the Green's function.

A sine mode ``sin(gamma_n x)`` of the strip problem evolves according to

    u'' + 2 h_n u' + b_n^2 u = -f_n(t),

with ``gamma_n = n pi / ell``, ``b_n = c gamma_n`` and
``h_n = (a + eps gamma_n^2) / 2``.  The impulse response of this oscillator
is ``H_n(t) = exp(-h_n t) sinh(omega_n t) / omega_n`` where
``omega_n^2 = h_n^2 - b_n^2`` may have either sign.

The position response ``K_n`` comes from applying ``(d/dt + a - eps d_xx)``
to ``H_n sin(gamma_n x)``: on a single mode ``-eps d_xx`` multiplies by
``eps gamma_n^2``, so the operator acts as ``d/dt + a + eps gamma_n^2``,
i.e. ``d/dt + 2 h_n``.  Hence ``K_n = H_n' + 2 h_n H_n``, which satisfies
the same ODE with ``K_n(0) = 1`` and ``K_n'(0) = H_n''(0) + 2 h_n = 0``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

# |omega^2 t^2| below this uses the sinh(z)/z series
SERIES_THRESHOLD = 1e-6
# |omega^2| <= CRITICAL_RTOL * h^2 is labelled Critical
CRITICAL_RTOL = 1e-10
DEFAULT_TERM_CAP = 10**6


class SeriesCapExceeded(RuntimeError):
    """Raised when a truncated Green's function series would need too many terms."""

    def __init__(self, message, n_terms, bound):
        super().__init__(message)
        self.n_terms = n_terms
        self.bound = bound


@dataclass(frozen=True)
class Params:
    """Constants of the operator ``d_xx(eps d_t + c^2) - d_t(d_t + a)`` on ``[0, ell]``."""

    epsilon: float
    a: float
    c: float
    ell: float

    def __post_init__(self):
        for name in ("epsilon", "a", "c", "ell"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
            object.__setattr__(self, name, float(value))


class Regime(str, enum.Enum):
    OVERDAMPED = "Overdamped"
    CRITICAL = "Critical"
    OSCILLATORY = "Oscillatory"


def _classify(h, omega_sq):
    if abs(omega_sq) <= CRITICAL_RTOL * h * h:
        return Regime.CRITICAL
    return Regime.OVERDAMPED if omega_sq > 0 else Regime.OSCILLATORY


@dataclass(frozen=True)
class Mode:
    n: int
    gamma_n: float
    b_n: float
    h_n: float
    omega_sq: float
    regime: Regime

    @classmethod
    def from_damping(cls, h, omega_sq, n=1, gamma=1.0):
        """Build a mode directly from ``h`` and ``omega^2`` (``b^2 = h^2 - omega^2``).

        Handy for probing the propagators across regimes with ``h`` held fixed.
        """
        b_sq = h * h - omega_sq
        if b_sq <= 0:
            raise ValueError("omega_sq must be smaller than h**2")
        return cls(n, gamma, math.sqrt(b_sq), h, omega_sq, _classify(h, omega_sq))

    @property
    def b_sq(self):
        return self.h_n * self.h_n - self.omega_sq

    @property
    def X(self):
        return (self.b_n / self.h_n) ** 2

    @property
    def omega(self):
        """Principal square root of ``omega_sq`` (complex for oscillatory modes)."""
        if self.omega_sq >= 0:
            return math.sqrt(self.omega_sq)
        return complex(0.0, math.sqrt(-self.omega_sq))

    @property
    def phi(self):
        """``omega_n - h_n``; negative of the slow decay rate for real ``omega_n``."""
        if self.omega_sq >= 0:
            return -self.b_sq / (self.h_n + math.sqrt(self.omega_sq))
        return complex(-self.h_n, math.sqrt(-self.omega_sq))


@dataclass(frozen=True)
class DecayConstants:
    p: float
    q: float
    beta: float


def make_mode(params: Params, n: int) -> Mode:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"mode index must be a positive integer, got {n!r}")
    n = int(n)
    gamma = n * math.pi / params.ell
    b = params.c * gamma
    h = 0.5 * (params.a + params.epsilon * gamma * gamma)
    omega_sq = (h - b) * (h + b)
    return Mode(n, gamma, b, h, omega_sq, _classify(h, omega_sq))


def decay_constants(params: Params) -> DecayConstants:
    eps, a, c, ell = params.epsilon, params.a, params.c, params.ell
    p = c * c / (eps + a * (ell / math.pi) ** 2)
    q = 0.5 * (a + eps * (math.pi / ell) ** 2)
    return DecayConstants(p, q, min(p, q))


@dataclass(frozen=True)
class ModeArrays:
    """Vectorised counterpart of :class:`Mode` for indices ``1..N`` (or a given set)."""

    n: np.ndarray
    gamma: np.ndarray
    b_sq: np.ndarray
    h: np.ndarray
    omega_sq: np.ndarray

    def __len__(self):
        return len(self.n)

    def decay_rate(self):
        return mode_decay_rates(self.h, self.b_sq, self.omega_sq)


def mode_arrays(params: Params, n_modes=None, indices=None) -> ModeArrays:
    if indices is None:
        if n_modes is None or n_modes < 1:
            raise ValueError("need n_modes >= 1 or explicit indices")
        indices = np.arange(1, int(n_modes) + 1)
    n = np.asarray(indices, dtype=np.int64)
    if np.any(n < 1):
        raise ValueError("mode indices must be >= 1")
    gamma = n * (math.pi / params.ell)
    b = params.c * gamma
    h = 0.5 * (params.a + params.epsilon * gamma * gamma)
    return ModeArrays(n, gamma, b * b, h, (h - b) * (h + b))


def mode_decay_rates(h, b_sq, omega_sq):
    h, b_sq, omega_sq = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (h, b_sq, omega_sq)))
    w = np.sqrt(np.maximum(omega_sq, 0.0))
    # h - omega written as b^2 / (h + omega) to avoid cancellation
    return np.where(omega_sq > 0, b_sq / (h + w), h)


def mode_decay_rate(mode: Mode) -> float:
    """Slowest exponential rate of the mode, ``h_n - Re(omega_n)``."""
    return float(mode_decay_rates(mode.h_n, mode.b_sq, mode.omega_sq))


def propagators(h, b_sq, omega_sq, t):
    """Return ``(H, H', K)`` evaluated elementwise (all arguments broadcast).

    Branches: a short series for ``|omega^2 t^2| < 1e-6``; otherwise the
    overdamped form ``exp(-(h - omega) t) (1 - exp(-2 omega t)) / (2 omega)``
    (both exponents nonpositive, so no overflow) or the damped sine.
    """
    h, b_sq, omega_sq, t = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (h, b_sq, omega_sq, t)))
    if np.any(t < 0):
        raise ValueError("propagators are defined for t >= 0")
    H = np.empty(h.shape)
    Hd = np.empty(h.shape)
    K = np.empty(h.shape)

    z = omega_sq * t * t
    series = np.abs(z) < SERIES_THRESHOLD
    over = ~series & (omega_sq > 0)
    osc = ~series & (omega_sq < 0)

    if np.any(series):
        hs, ts, zs = h[series], t[series], z[series]
        e = np.exp(-hs * ts)
        Hs = e * ts * (1.0 + zs / 6.0 + zs * zs / 120.0)
        Cs = e * (1.0 + zs / 2.0 + zs * zs / 24.0)
        H[series] = Hs
        K[series] = Cs + hs * Hs
        Hd[series] = Cs - hs * Hs

    if np.any(over):
        ho, to, bo = h[over], t[over], b_sq[over]
        w = np.sqrt(omega_sq[over])
        slow = bo / (ho + w)
        fast = ho + w
        base = np.exp(-slow * to)
        E = np.exp(-2.0 * w * to)
        Ho = base * (-np.expm1(-2.0 * w * to)) / (2.0 * w)
        H[over] = Ho
        K[over] = base * 0.5 * (1.0 + E) + ho * Ho
        Hd[over] = base * (fast * E - slow) / (2.0 * w)

    if np.any(osc):
        hq, tq = h[osc], t[osc]
        mu = np.sqrt(-omega_sq[osc])
        e = np.exp(-hq * tq)
        Hq = e * np.sin(mu * tq) / mu
        Cq = e * np.cos(mu * tq)
        H[osc] = Hq
        K[osc] = Cq + hq * Hq
        Hd[osc] = Cq - hq * Hq

    return H, Hd, K


def _scalar(mode, t, which):
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(propagators(mode.h_n, mode.b_sq, mode.omega_sq, t)[which][()])


def propagator_H(mode: Mode, t: float) -> float:
    return _scalar(mode, t, 0)


def propagator_Hdot(mode: Mode, t: float) -> float:
    return _scalar(mode, t, 1)


def propagator_K(mode: Mode, t: float) -> float:
    return _scalar(mode, t, 2)


@dataclass(frozen=True)
class StepOperator:
    """Exact one-step map of ``w'' + 2 h w' + b^2 w = f`` with ``f`` linear on the step.

    ``f`` is interpolated linearly between its values ``f0`` (step start)
    and ``f1`` (step end); the convolution with the impulse response is then
    integrated in closed form.
    """

    dt: float
    K: np.ndarray
    H: np.ndarray
    Hd: np.ndarray
    minus_b_sq_H: np.ndarray
    A0: np.ndarray
    A1: np.ndarray
    B0: np.ndarray
    B1: np.ndarray

    def apply(self, w, wd, f0, f1):
        w_new = self.K * w + self.H * wd + self.A0 * f0 + self.A1 * f1
        wd_new = self.minus_b_sq_H * w + self.Hd * wd + self.B0 * f0 + self.B1 * f1
        return w_new, wd_new


def _impulse_moments(h, b_sq, omega_sq, dt):
    """``I0 = int_0^dt H`` and ``J1 = int_0^dt s H(s) ds`` for each mode."""
    H, _, K = propagators(h, b_sq, omega_sq, dt)
    I0 = np.empty(h.shape)
    J1 = np.empty(h.shape)
    small = np.maximum(2.0 * h, np.sqrt(b_sq)) * dt <= 0.5

    if np.any(small):
        # Taylor coefficients d_k = H^{(k)}(0) dt^k / k! from the ODE recursion
        hs, bs = h[small], b_sq[small]
        d_prev = np.zeros(hs.shape)
        d_cur = np.full(hs.shape, dt)
        i0 = d_cur * dt / 2.0
        j1 = d_cur * dt * dt / 3.0
        for k in range(0, 40):
            d_next = -(2.0 * hs * dt * d_cur + bs * dt * dt * d_prev / (k + 1)) / (k + 2)
            i0 = i0 + d_next * dt / (k + 3)
            j1 = j1 + d_next * dt * dt / (k + 4)
            d_prev, d_cur = d_cur, d_next
            if np.all(np.abs(d_next) <= 1e-18 * np.abs(i0) / dt):
                break
        I0[small] = i0
        J1[small] = j1

    big = ~small
    if np.any(big):
        hb, bb = h[big], b_sq[big]
        i0 = (1.0 - K[big]) / bb
        I0[big] = i0
        J1[big] = (H[big] - dt * K[big] + 2.0 * hb * i0) / bb
    return I0, J1


def step_operator(modes: ModeArrays, dt: float) -> StepOperator:
    if not dt > 0:
        raise ValueError("dt must be positive")
    h, b_sq, omega_sq = modes.h, modes.b_sq, modes.omega_sq
    H, Hd, K = propagators(h, b_sq, omega_sq, dt)
    I0, J1 = _impulse_moments(h, b_sq, omega_sq, dt)
    return StepOperator(
        dt=dt, K=K, H=H, Hd=Hd, minus_b_sq_H=-b_sq * H,
        A0=J1 / dt, A1=I0 - J1 / dt,
        B0=H - I0 / dt, B1=I0 / dt,
    )


# ---------------------------------------------------------------------------
# Green's function
# ---------------------------------------------------------------------------

def _term_bounds(modes, t):
    """Per-term bounds on ``|H_n(t)|`` valid in every regime."""
    h, b_sq, omega_sq = modes.h, modes.b_sq, modes.omega_sq
    w = np.sqrt(np.abs(omega_sq))
    # overdamped: H <= e^{-rate t} min(t, 1/(2 omega)); otherwise |sin(mu t)/mu| <= min(t, 1/mu)
    inv = np.full(h.shape, np.inf)
    over = omega_sq > 0
    osc = omega_sq < 0
    inv[over] = 1.0 / (2.0 * w[over])
    inv[osc] = 1.0 / w[osc]
    rate = mode_decay_rates(h, b_sq, omega_sq)
    return np.exp(-rate * t) * np.minimum(t, inv)


def _tail_start(params):
    """First index ``M`` from which ``omega_n >= kappa n^2`` with ``kappa >= E/2`` holds for all ``n > M``."""
    E = params.epsilon * math.pi**2 / (2.0 * params.ell**2)
    deficit = max(0.0, (params.c * math.pi / params.ell) ** 2 - params.a * E)
    if deficit == 0.0:
        return 1
    return max(1, math.ceil(math.sqrt(4.0 * deficit / (3.0 * E * E))) - 1)


def green_tail_bound(params: Params, N: int, t: float) -> float:
    """Upper bound on ``(2/ell) sum_{n>N} |H_n(t)|``.

    Terms up to the index where every later mode is overdamped with
    ``omega_n >= kappa n^2`` are bounded one by one; beyond it each term is
    at most ``exp(-r t) / (2 kappa n^2)``, with ``r`` a lower bound of the
    slow rates, and ``sum_{n>M} n^-2 <= 1/M`` closes the sum.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not t > 0:
        raise ValueError("t must be positive")
    N = int(N)
    M = max(N, _tail_start(params))
    explicit = 0.0
    if M > N:
        explicit = math.fsum(_term_bounds(mode_arrays(params, indices=np.arange(N + 1, M + 1)), t))
    E = params.epsilon * math.pi**2 / (2.0 * params.ell**2)
    deficit = max(0.0, (params.c * math.pi / params.ell) ** 2 - params.a * E)
    kappa = math.sqrt(E * E - deficit / (M + 1) ** 2)
    g = (M + 1) * math.pi / params.ell
    r_min = params.c**2 * g * g / (params.a + params.epsilon * g * g)
    analytic = math.exp(-r_min * t) / (2.0 * kappa * M)
    return (2.0 / params.ell) * (explicit + analytic)


def green_partial_sum(params: Params, x: float, xi: float, t: float, n_terms: int) -> float:
    """``(2/ell) sum_{n=1}^{N} H_n(t) sin(gamma_n xi) sin(gamma_n x)``, exactly rounded."""
    if not t > 0:
        raise ValueError("t must be positive")
    modes = mode_arrays(params, n_terms)
    H = propagators(modes.h, modes.b_sq, modes.omega_sq, t)[0]
    terms = (2.0 / params.ell) * H * (np.sin(modes.gamma * x) * np.sin(modes.gamma * xi))
    return math.fsum(terms)


def terms_for_tolerance(params: Params, t: float, tol: float, cap: int = DEFAULT_TERM_CAP) -> int:
    """Smallest ``N`` with ``green_tail_bound(params, N, t) <= tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if green_tail_bound(params, 1, t) <= tol:
        return 1
    lo, hi = 1, 2
    while green_tail_bound(params, hi, t) > tol:
        if hi >= cap:
            raise SeriesCapExceeded(
                f"Green's function at t={t} needs more than {cap} terms for tol={tol}",
                n_terms=cap, bound=green_tail_bound(params, cap, t))
        lo, hi = hi, min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if green_tail_bound(params, mid, t) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


def green_eval(params: Params, x: float, xi: float, t: float, tol: float = 1e-10,
               cap: int = DEFAULT_TERM_CAP) -> float:
    """Green's function ``G(x, xi, t)`` truncated so the neglected tail is below ``tol``.

    The terms decay only like ``exp(-c^2 t / eps) / n^2``, so small ``t``
    together with a tight ``tol`` can exceed ``cap`` terms; that raises
    :class:`SeriesCapExceeded`.
    """
    if not t > 0:
        raise ValueError("G is evaluated pointwise only for t > 0")
    n_terms = terms_for_tolerance(params, t, tol, cap)
    return green_partial_sum(params, x, xi, t, n_terms)


def green_matrix(params: Params, xs, xis, t: float, n_terms: int) -> np.ndarray:
    """Truncated ``G`` on the tensor grid ``xs x xis`` (BLAS reduction, for bulk scans)."""
    modes = mode_arrays(params, n_terms)
    H = propagators(modes.h, modes.b_sq, modes.omega_sq, t)[0]
    Sx = np.sin(np.outer(np.asarray(xs, dtype=float), modes.gamma))
    Sxi = np.sin(np.outer(np.asarray(xis, dtype=float), modes.gamma))
    return (2.0 / params.ell) * (Sx * H) @ Sxi.T
