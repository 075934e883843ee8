"""Closed-form predictions: thresholds, step horizons, tail bounds.

All logarithms are natural.  A horizon whose log argument is <= 1 is
floored at one step.  Functions that need 1/(1 - lambda) return ``None`` (or
a report with ``applicable=False``) when lambda = 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


def epsilon_schedule(lam: float, n: int) -> tuple[float, float]:
    """(eps1, eps2) = (max{4 lam^2, n^-2}, max{2 lam, n^-2/3})."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return max(4.0 * lam * lam, n**-2.0), max(2.0 * lam, n ** (-2.0 / 3.0))


def _ceil_floor1(value: float) -> int:
    return max(1, math.ceil(value))


def _log_or_zero(arg: float) -> float:
    return math.log(arg) if arg > 1.0 else 0.0


def T1(n: int, eps: float) -> int:
    return _ceil_floor1(2 * n * _log_or_zero(1.0 / (2 * eps * eps)))


def T2(n: int, eps: float) -> int:
    return _ceil_floor1((2 * n / eps) * _log_or_zero(1.0 / (2 * eps * eps)))


def Tp(n: int, lam: float, pi_min: float) -> int | None:
    if lam >= 1.0:
        return None
    return math.ceil(64 * n / (math.sqrt(2) * (1 - lam) * pi_min))


def Tp_eps(n: int, lam: float, pi_min: float, eps: float) -> int | None:
    """T_p * sqrt(eps), rounded up to a whole step."""
    tp = Tp(n, lam, pi_min)
    return None if tp is None else _ceil_floor1(tp * math.sqrt(eps))


@dataclass(frozen=True)
class Horizons:
    T1: int
    T2: int
    Tp: int | None
    Tp_eps: int | None


def horizons(n: int, lam: float, pi_min: float, eps: float) -> Horizons:
    return Horizons(T1(n, eps), T2(n, eps), Tp(n, lam, pi_min), Tp_eps(n, lam, pi_min, eps))


@dataclass(frozen=True)
class ShrinkHorizons:
    T1: int
    T2: int
    eta: float
    hypothesis_T1: bool  # eps >= 4 lam^2
    hypothesis_T2: bool  # eps >= 2 lam


def shrink_horizons(n: int, eps: float, eta: float, lam: float | None = None) -> ShrinkHorizons:
    """Horizons T with P[tau_extr(eps) > T] <= eta.

    T1 = ceil(2n log(1/(4 eps^2 eta))) for a range of at least four opinions,
    T2 = ceil((2n/eps) log(1/(4 eps^2 eta))) for exactly three.  With
    ``lam`` given, the eps lower bounds of each case are reported.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    arg = 1.0 / (4 * eps * eps * eta)
    t1 = _ceil_floor1(2 * n * _log_or_zero(arg))
    t2 = _ceil_floor1((2 * n / eps) * _log_or_zero(arg))
    h1 = True if lam is None else eps >= 4 * lam * lam
    h2 = True if lam is None else eps >= 2 * lam
    return ShrinkHorizons(t1, t2, eta, h1, h2)


def order_reference(n: int, k: int, lam: float) -> float:
    """k n log n + n^5/3 log n + lam k n^2 + sqrt(lam) n^2, constant 1.

    Order-of-magnitude reference only, not a bound.
    """
    ln = math.log(n)
    return k * n * ln + n ** (5 / 3) * ln + lam * k * n * n + math.sqrt(lam) * n * n


def structured_bound(n: int, k: int, lam: float, pi_min: float) -> float | None:
    """4 max(k-3, 0)(T1(eps1) + Tp(eps1)) + 4 (T2(eps2) + Tp(eps2))."""
    if lam >= 1.0:
        return None
    e1, e2 = epsilon_schedule(lam, n)
    stages = max(k - 3, 0)
    return 4 * stages * (T1(n, e1) + Tp_eps(n, lam, pi_min, e1)) + 4 * (T2(n, e2) + Tp_eps(n, lam, pi_min, e2))


@dataclass(frozen=True)
class ExpectedTBound:
    order_reference: float
    structured: float | None
    note: str = "order_reference uses constant 1 and is not a bound"


def expected_T_bound(n: int, k: int, lam: float, pi_min: float | None = None) -> ExpectedTBound:
    pi_min = 1.0 / n if pi_min is None else pi_min
    return ExpectedTBound(order_reference(n, k, lam), structured_bound(n, k, lam, pi_min))


def final_distribution(c: float) -> tuple[int, float, float]:
    """(i, p, q) with i = floor(c), p = i + 1 - c, q = c - i."""
    i = math.floor(c)
    q = c - i
    return i, 1.0 - q, q


def azuma_tail(h: float, t: float) -> float:
    """min(1, 2 exp(-h^2 / 2t))."""
    if h <= 0 or t < 1:
        raise ValueError("need h > 0 and t >= 1")
    return min(1.0, 2.0 * math.exp(-h * h / (2.0 * t)))


def restart_tail(h: float) -> float:
    """exp(-h): tail of tau beyond h * e * E[tau] under independent restarts."""
    if h < 0:
        raise ValueError("need h >= 0")
    return math.exp(-h)


@dataclass
class BoundReport:
    n: int
    k: int
    lam: float
    pi_min: float
    epsilon1: float
    epsilon2: float
    T1: int
    T2: int
    Tp: int | None
    Tp_of_eps: int | None
    ET_bound: float | None
    order_reference: float
    applicable: bool
    hypothesis_flags: dict = field(default_factory=dict)
    eps: float | None = None
    eta: float | None = None
    shrink: dict | None = None
    horizon_form: str = "eta=1/2 specialisation: log(1/(2 eps^2))"
    vacuous: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(n: int, k: int, lam: float, pi_min: float | None = None,
                 eps: float | None = None, eta: float | None = None) -> BoundReport:
    """Every horizon for one (n, k, lambda) instance.

    Without ``eps`` the horizons T1/T2/Tp(eps) are evaluated at the schedule
    values (T1 and Tp(eps) at eps1, T2 at eps2).  ``eta`` adds the
    failure-probability form of the extreme-shrinking horizons.
    """
    pi_min = 1.0 / n if pi_min is None else pi_min
    e1, e2 = epsilon_schedule(lam, n)
    applicable = lam < 1.0
    if eps is None:
        t1, t2 = T1(n, e1), T2(n, e2)
        tpe = Tp_eps(n, lam, pi_min, e1)
    else:
        t1, t2 = T1(n, eps), T2(n, eps)
        tpe = Tp_eps(n, lam, pi_min, eps)
    vacuous = [name for name, e in (("epsilon1", e1), ("epsilon2", e2)) if e >= 1.0]
    if eps is not None and eps >= 1 / math.sqrt(2):
        vacuous.append("eps")
    shrink = None
    if eta is not None:
        e = e1 if eps is None else eps
        l6 = shrink_horizons(n, e, eta, lam)
        shrink = {"eps": e, "eta": eta, "T1": l6.T1, "T2": l6.T2,
                  "hypothesis_T1": l6.hypothesis_T1, "hypothesis_T2": l6.hypothesis_T2,
                  "form": "log(1/(4 eps^2 eta))"}
    return BoundReport(
        n=n, k=k, lam=lam, pi_min=pi_min,
        epsilon1=e1, epsilon2=e2,
        T1=t1, T2=t2, Tp=Tp(n, lam, pi_min), Tp_of_eps=tpe,
        ET_bound=structured_bound(n, k, lam, pi_min),
        order_reference=order_reference(n, k, lam),
        applicable=applicable,
        hypothesis_flags={
            "lambda_k_small": lam * k,
            "k_vs_n": k * math.log(n) / n,
            "pi_min_ratio": n * pi_min,
        },
        eps=eps, eta=eta, shrink=shrink, vacuous=vacuous,
    )
