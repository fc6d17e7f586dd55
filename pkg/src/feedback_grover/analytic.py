"""Closed-form success law of Grover search and the flag-count ratio model.

``gr(p, r) = sin((2r+1) asin(sqrt(p)))**2`` is the success probability after
``r`` iterates from the uniform state. If the flag is sampled once per
iterate without disturbing the rotation, the expected counts of ones and
zeros up to a horizon give the ratio modelled below, either as a discrete
sum over iterates, an integral over a continuous rotation count, or the
antiderivative evaluated in closed form in terms of the start angle
``theta = asin(sqrt(p))`` and end angle ``X = asin(sqrt(g))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .problem import DomainError

LIMIT_TOL = 1e-9

# Printed two-decimal cells of the published table, row-major; rows are
# p -> 0, 1/4, 1/2 and columns target success 1/2, 3/4, 1.
PRINTED_TABLE = (
    (0.23, 0.42, 1.00),
    (0.60, 1.00, 2.41),
    (1.00, 1.69, 4.50),
)
CASE_LABELS = ("I", "II", "III")
CASE_THETAS = (0.0, math.pi / 6, math.pi / 4)
CASE_P = (0.0, 0.25, 0.5)
TARGET_SUCCESS = (0.5, 0.75, 1.0)
TARGET_ANGLES = (math.pi / 4, math.pi / 3, math.pi / 2)
PRINTED_MATCH_TOL = 0.005


def _check_p(p: float, allow_one: bool = True) -> None:
    if not (0.0 < p < 1.0 or (allow_one and p == 1.0)):
        raise DomainError(f"probability p must be in (0, {'1]' if allow_one else '1)'}, got {p!r}")


def success_after_rotations(p: float, r: int | float) -> float:
    _check_p(p)
    return math.sin((2 * r + 1) * math.asin(math.sqrt(p))) ** 2


def optimal_rotation_count(p: float) -> int:
    """Smallest ``r`` maximising the success law, by exhaustive scan."""
    _check_p(p)
    if p == 1.0:
        return 0
    upper = math.ceil(math.pi / (4 * math.asin(math.sqrt(p)))) + 1
    best_r, best = 0, -1.0
    for r in range(upper + 1):
        val = success_after_rotations(p, r)
        if val > best + 1e-15:
            best_r, best = r, val
    return best_r


def rotations_to_reach(p: float, g: float) -> float:
    """Real rotation count at which the success law first reaches ``g``."""
    _check_p(p, allow_one=False)
    if not (p <= g <= 1.0):
        raise DomainError(f"target success g={g!r} must satisfy p <= g <= 1")
    return (math.asin(math.sqrt(g)) / math.asin(math.sqrt(p)) - 1.0) / 2.0


def expected_ratio_discrete(p: float, horizon: int) -> float:
    """Sum of gr over r = 0..horizon divided by the sum of 1 - gr."""
    _check_p(p, allow_one=False)
    if horizon < 0:
        raise DomainError("horizon must be non-negative")
    ones = sum(success_after_rotations(p, r) for r in range(horizon + 1))
    zeros = (horizon + 1) - ones
    if zeros == 0.0:
        return math.inf
    return ones / zeros


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def expected_ratio_integral(p: float, g: float, tol: float = 1e-10) -> float:
    """Continuous-horizon ratio by quadrature of the success law over ``[0, Rn]``."""
    horizon = rotations_to_reach(p, g)
    if horizon == 0.0:
        return math.tan(math.asin(math.sqrt(p))) ** 2
    theta = math.asin(math.sqrt(p))

    def gr(r):
        return math.sin((2 * r + 1) * theta) ** 2

    ones = adaptive_simpson(gr, 0.0, horizon, tol)
    zeros = horizon - ones
    return ones / zeros


def expected_ratio_closed(theta: float, X: float) -> float:
    """Closed-form ratio between start angle ``theta`` and end angle ``X``.

    At ``X == theta`` numerator and denominator both vanish; the limit is
    ``tan(X)**2``, used whenever the angles are within ``1e-9``.
    """
    if not (0.0 <= theta <= math.pi / 2 and 0.0 <= X <= math.pi / 2):
        raise DomainError("angles must lie in [0, pi/2]")
    if X < theta:
        raise DomainError(f"end angle X={X!r} below start angle theta={theta!r}")
    if X - theta < LIMIT_TOL:
        return math.tan(X) ** 2
    num = 2 * X - math.sin(2 * X) - (2 * theta - math.sin(2 * theta))
    den = 2 * X + math.sin(2 * X) - (2 * theta + math.sin(2 * theta))
    return num / den


def expected_ratio_from_probabilities(p: float, g: float) -> float:
    """The closed form written in terms of ``p`` and ``g`` directly."""
    return expected_ratio_closed(math.asin(math.sqrt(p)), math.asin(math.sqrt(g)))


@dataclass(frozen=True)
class RatioPrediction:
    theta: float
    X: float
    ratio: float

    def __post_init__(self):
        if self.ratio < 0 or not (0 <= self.theta <= math.pi / 4 + 1e-15):
            raise DomainError("invalid ratio prediction")


@dataclass(frozen=True)
class Table1Cell:
    case: str
    p: float
    g: float
    prediction: RatioPrediction
    printed: float

    @property
    def rounded(self) -> float:
        return round(self.prediction.ratio, 4)

    @property
    def delta(self) -> float:
        return abs(self.prediction.ratio - self.printed)

    @property
    def matches_printed(self) -> bool:
        return self.delta <= PRINTED_MATCH_TOL


@dataclass(frozen=True)
class Table1Grid:
    rows: tuple[tuple[Table1Cell, ...], ...] = field(default_factory=tuple)

    def cells(self):
        for row in self.rows:
            yield from row

    def cell(self, case: str, g: float) -> Table1Cell:
        i = CASE_LABELS.index(case)
        j = TARGET_SUCCESS.index(g)
        return self.rows[i][j]

    def discrepancies(self) -> list[Table1Cell]:
        return [c for c in self.cells() if not c.matches_printed]


def table1() -> Table1Grid:
    rows = []
    for label, theta, p, printed in zip(CASE_LABELS, CASE_THETAS, CASE_P, PRINTED_TABLE):
        row = []
        for g, X, value in zip(TARGET_SUCCESS, TARGET_ANGLES, printed):
            pred = RatioPrediction(theta, X, expected_ratio_closed(theta, X))
            row.append(Table1Cell(label, p, g, pred, value))
        rows.append(tuple(row))
    return Table1Grid(tuple(rows))


def recommended_set_val() -> float:
    return 1.0
