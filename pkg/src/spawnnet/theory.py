"""Analytic degree distribution of the spawning model.

Three evaluations of the stationary distribution ``p_q``:

* the ratio recursion ``p_q = q / (q + 5/2) * p_{q-1}`` from ``p_1 = 3/7``,
  exactly in rationals or in floating point;
* the Gamma-function closed form ``mu * delta * G(1+q) G(mu) / G(mu+q)``,
  evaluated through a log-Gamma difference so it never overflows;
* the power-law asymptote ``(45 sqrt(pi) / 16) q^(-5/2)``.

:func:`evolve_master` iterates the finite-``n`` balance equation to show the
degree sets converging on the stationary values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numba
import numpy as np

A = 1
MEAN_DEGREE = 2
MU = Fraction(7, 2)
DELTA = Fraction(3, 7)
ALPHA = Fraction(5, 2)
ASYMPTOTIC_COEFF = 45 * math.sqrt(math.pi) / 16
DEFAULT_Q_CAP = 10_000

# Known regression value: first q where closed/asymptotic enters [0.99, 1.01].
ASYMPTOTE_ENTRY_Q = 435


@dataclass(frozen=True)
class TheoryConstants:
    a: int = A
    mean_degree: int = MEAN_DEGREE
    mu: Fraction = MU
    delta: Fraction = DELTA
    alpha: Fraction = ALPHA


class NumericalIntegrityError(ArithmeticError):
    """Master-equation mass drifted away from 1."""


def p1_stationary() -> Fraction:
    """Stationary share of degree-1 nodes, the fixed point of ``p1 = 1 - (4/3) p1``."""
    return Fraction(1) / (1 + Fraction(4, 3))


def degree_pmf_recursive_exact(q_max: int) -> list[Fraction]:
    """Exact ``[p_1, ..., p_qmax]`` by the ratio recursion."""
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    out = [p1_stationary()]
    for q in range(2, q_max + 1):
        out.append(out[-1] * Fraction(2 * q, 2 * q + 5))
    return out


def degree_pmf_recursive(q_max: int) -> np.ndarray:
    """Float ``p_q`` for ``q = 1..q_max`` (index 0 holds ``p_1``)."""
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    q = np.arange(2, q_max + 1, dtype=np.float64)
    ratios = np.concatenate(([3.0 / 7.0], q / (q + 2.5)))
    return np.cumprod(ratios)


_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
)
_SHIFT_TO = 20.0


def _stirling_tail(z: float) -> float:
    zi = 1.0 / z
    zi2 = zi * zi
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * zi2 + c
    return acc * zi


def log_gamma_ratio(x: float, d: float) -> float:
    """``ln G(x + d) - ln G(x)`` for ``x > 0``, ``d >= 0``.

    Subtracting two full log-Gammas loses about ``eps * ln G(x)`` absolute,
    which for ``x ~ 1000`` is already ``1e-12``. Instead the arguments are
    shifted above 20 with the recurrence and the Stirling expansions are
    differenced term by term, keeping the large ``x ln x`` parts cancelled
    analytically through ``log1p``.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    if d < 0:
        raise ValueError("d must be non-negative")
    if d == 0:
        return 0.0
    shift = 0.0
    while x < _SHIFT_TO:
        # G(x+d)/G(x) = [G(x+1+d)/G(x+1)] * x/(x+d)
        shift += math.log1p(-d / (x + d))
        x += 1.0
    b = x + d
    main = (x - 0.5) * math.log1p(d / x) + d * math.log(b) - d
    return shift + main + (_stirling_tail(b) - _stirling_tail(x))


def degree_pmf_closed(q: int | float) -> float:
    """``mu delta G(1+q) G(mu) / G(mu+q)`` evaluated in the log domain."""
    if q < 1:
        raise ValueError("q must be >= 1")
    mu = float(MU)
    prefactor = mu * float(DELTA) * math.gamma(mu)
    return prefactor * math.exp(-log_gamma_ratio(1.0 + q, mu - 1.0))


def degree_pmf_asymptotic(q: int | float) -> float:
    """Large-``q`` power law ``(45 sqrt(pi)/16) q^(-5/2)``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return ASYMPTOTIC_COEFF * q ** -2.5


@dataclass(frozen=True)
class DegreeProbabilityTable:
    q: np.ndarray
    p_recursive: np.ndarray
    p_closed: np.ndarray
    p_asymptotic: np.ndarray

    def rows(self):
        return zip(self.q.tolist(), self.p_recursive.tolist(), self.p_closed.tolist(), self.p_asymptotic.tolist())

    def __len__(self) -> int:
        return len(self.q)


def degree_table(q_max: int) -> DegreeProbabilityTable:
    """All three evaluations for ``q = 1..q_max``.

    Up to ``q = 1000`` the recursive column comes from exact rationals; beyond
    that it continues the float recursion from the last exact value.
    """
    exact_to = min(q_max, 1000)
    rec = [float(v) for v in degree_pmf_recursive_exact(exact_to)]
    if q_max > exact_to:
        q = np.arange(exact_to + 1, q_max + 1, dtype=np.float64)
        rec.extend((rec[-1] * np.cumprod(q / (q + 2.5))).tolist())
    qs = np.arange(1, q_max + 1)
    return DegreeProbabilityTable(
        q=qs,
        p_recursive=np.asarray(rec),
        p_closed=np.array([degree_pmf_closed(int(q)) for q in qs]),
        p_asymptotic=ASYMPTOTIC_COEFF * qs.astype(np.float64) ** -2.5,
    )


def spawn_probability(q: int, n: int) -> Fraction:
    """Chance that a given node of degree ``q`` spawns next, ``(q+1)/(3n)``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    return Fraction(q + 1, 3 * n)


def expected_new_connections(degrees) -> Fraction:
    """Sum over nodes of ``2 (q+1) / (3n)``; equals 2 when the mean degree is 2."""
    degrees = list(degrees)
    n = len(degrees)
    return sum((2 * spawn_probability(q, n) for q in degrees), Fraction(0))


@dataclass
class MasterEvolutionState:
    """Degree-set shares after ``n`` nodes; ``p[0]`` is ``p_1``."""

    n: int
    p: np.ndarray
    overflow_mass: float = 0.0
    max_drift: float = field(default=0.0, compare=False)

    @property
    def q_cap(self) -> int:
        return len(self.p)

    def mass(self) -> float:
        return math.fsum(self.p.tolist()) + self.overflow_mass

    def l1_distance(self, reference: np.ndarray) -> float:
        """L1 distance to ``reference`` (``p_1..p_cap``), overflow vs. the reference tail."""
        reference = np.asarray(reference, dtype=np.float64)
        if len(reference) != self.q_cap:
            raise ValueError("reference must cover q = 1..q_cap")
        tail = max(0.0, 1.0 - math.fsum(reference.tolist()))
        return float(np.abs(self.p - reference).sum()) + abs(self.overflow_mass - tail)


def initial_master_state(q_cap: int = DEFAULT_Q_CAP) -> MasterEvolutionState:
    """Two nodes, both of degree 1."""
    p = np.zeros(q_cap)
    p[0] = 1.0
    return MasterEvolutionState(n=2, p=p)


@numba.njit(cache=True)
def _master_steps(u, comp, overflow, n, target, drift_limit, check_every):
    # u[k] holds n * p_{k+1}; comp is the running Kahan compensation per cell.
    cap = u.shape[0]
    two_thirds = 2.0 / 3.0
    max_drift = 0.0
    while n < target:
        inv = 1.0 / n
        top = min(n, cap)
        flux_in = 1.0  # every spawn adds one degree-1 child
        for k in range(top):
            flux_out = two_thirds * (k + 2) * u[k] * inv
            y = (flux_in - flux_out) - comp[k]
            s = u[k] + y
            comp[k] = (s - u[k]) - y
            u[k] = s
            flux_in = flux_out
        if top == cap:
            overflow += flux_in
        n += 1
        if n % check_every == 0 or n == target:
            total = overflow
            for k in range(min(n, cap)):
                total += u[k]
            drift = abs(total - n) / n
            if drift > max_drift:
                max_drift = drift
            if drift > drift_limit:
                return overflow, n, max_drift, False
    return overflow, n, max_drift, True


def evolve_master(
    initial: MasterEvolutionState,
    target_n: int,
    checkpoints=None,
    drift_limit: float = 1e-9,
    check_every: int = 32,
) -> MasterEvolutionState | tuple[MasterEvolutionState, list[MasterEvolutionState]]:
    """Iterate the finite-``n`` balance equation from ``initial.n`` to ``target_n``.

    Per added node, degree set ``q`` gains ``(2/3) q p_{q-1}`` and loses
    ``(2/3)(q+1) p_q``; the ``q = 1`` set gains exactly 1. Whatever leaves the
    last tracked set accumulates in ``overflow_mass``. Updates run on counts
    ``n p_q`` with compensated addition, which keeps total mass at 1 to
    rounding.

    With ``checkpoints`` (an iterable of node counts) a list of intermediate
    states is returned alongside the final one. Mass is audited every
    ``check_every`` nodes and at the end; drift past ``drift_limit`` raises
    :class:`NumericalIntegrityError`.
    """
    if check_every < 1:
        raise ValueError("check_every must be >= 1")
    if target_n <= initial.n:
        raise ValueError("target_n must exceed the initial node count")
    if np.any(initial.p < 0):
        raise ValueError("initial distribution has negative entries")
    if abs(initial.mass() - 1.0) > 1e-12:
        raise ValueError("initial distribution does not sum to 1")
    n = initial.n
    u = initial.p.astype(np.float64) * n
    comp = np.zeros_like(u)
    overflow = initial.overflow_mass * n
    stops = sorted({int(c) for c in (checkpoints if checkpoints is not None else ()) if n < int(c) < target_n}) + [target_n]
    trace = []
    max_drift = initial.max_drift
    for stop in stops:
        overflow, n, drift, ok = _master_steps(u, comp, overflow, n, stop, drift_limit, check_every)
        max_drift = max(max_drift, drift)
        if not ok:
            raise NumericalIntegrityError(f"mass drift {drift:.3e} at n={n} exceeds {drift_limit:.1e}")
        state = MasterEvolutionState(n=n, p=(u - comp) / n, overflow_mass=overflow / n, max_drift=max_drift)
        trace.append(state)
    final = trace[-1]
    if checkpoints is None:
        return final
    return final, trace[:-1]
