"""Canonical entropy construction and cross-system calibration.

The entropy of a state is the largest fraction of a high reference state that
can be converted, together with the complementary fraction of a low reference
state, into the given state.  Scanning that fraction over a rational grid
gives exact table values; against a lazy oracle relation the supremum is
located by bisection instead.
"""

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    CalibratorError,
    ComparabilityError,
    DegenerateTableError,
    NoReferencePairError,
)
from .rational import format_rational
from .relation import (
    STRICTLY_PRECEDES,
    Relation,
    accessible_signed,
    classify,
    _query,
)
from .states import signed_sides, single

ORACLE_RESOLUTION = Fraction(1, 2 ** 20)


@dataclass
class EntropyTable:
    """Entropy values for the states of one space, normalized to [0, 1]
    at the two reference states."""

    space_id: str
    values: dict
    ref_low: str
    ref_high: str
    lambda_resolution: Fraction


def _mixture_query(rel, space_id, x0, x1, lam, target_state):
    """Is ((1-lam) X0, lam X1) below `target_state`?  lam may leave [0, 1]."""
    left = [(1 - lam, space_id, x0), (lam, space_id, x1)]
    right = [(Fraction(1), space_id, target_state)]
    return accessible_signed(rel, left, right)


def construct_entropy(
    rel,
    space_id,
    ref_low,
    ref_high,
    resolution=None,
    lambda_lo=Fraction(-1),
    lambda_hi=Fraction(2),
    mode=None,
    allow_constant=False,
    check_comparability=True,
):
    """Build the entropy table of a space from its closed relation.

    mode "grid" scans multiples of `resolution` in [lambda_lo, lambda_hi] and
    keeps the largest admissible one; mode "bisect" bisects down to
    `resolution`.  Explicit relations default to a 1/128 grid scan,
    oracle-backed relations to bisection at 2^-20.  Negative fractions and
    fractions above one are handled by moving the negative part to the other
    side of the query.
    """
    if mode is None:
        mode = "grid" if isinstance(rel, Relation) else "bisect"
    if resolution is None:
        resolution = Fraction(1, 128) if mode == "grid" else ORACLE_RESOLUTION
    x0 = single(space_id, ref_low)
    x1 = single(space_id, ref_high)
    refs = classify(rel, x0, x1)
    if refs != STRICTLY_PRECEDES:
        if allow_constant:
            space = rel.spaces[space_id]
            return EntropyTable(
                space_id, {st: Fraction(0) for st in space.state_ids},
                ref_low, ref_high, Fraction(resolution),
            )
        raise NoReferencePairError(
            "no reference pair: %s must strictly precede %s (got %s)"
            % (ref_low, ref_high, refs)
        )

    resolution = Fraction(resolution)
    space = rel.spaces[space_id]
    values = {}
    for st in space.state_ids:
        if mode == "grid":
            values[st] = _sup_on_grid(
                rel, space_id, ref_low, ref_high, st,
                resolution, Fraction(lambda_lo), Fraction(lambda_hi),
                check_comparability,
            )
        else:
            values[st] = _sup_by_bisection(
                rel, space_id, ref_low, ref_high, st,
                resolution, Fraction(lambda_lo), Fraction(lambda_hi),
            )
    return EntropyTable(space_id, values, ref_low, ref_high, resolution)


def _sup_on_grid(rel, space_id, x0, x1, st, resolution, lo, hi, check_cmp):
    best = None
    failed = []
    k = -int(-lo / resolution)  # ceil
    lam = k * resolution
    while lam <= hi:
        state_known = True
        if isinstance(rel, Relation):
            lhs, rhs = signed_sides(
                [(1 - lam, space_id, x0), (lam, space_id, x1)],
                [(Fraction(1), space_id, st)],
            )
            state_known = rel.in_universe(lhs) and rel.in_universe(rhs)
        if state_known:
            if _mixture_query(rel, space_id, x0, x1, lam, st):
                if best is None or lam > best:
                    best = lam
            else:
                failed.append(lam)
        lam += resolution
    if best is None:
        raise ComparabilityError((
            "no reference mixture in the lambda window [%s, %s]" % (lo, hi),
            "%s.%s" % (space_id, st),
        ))
    if check_cmp:
        for lam in failed:
            if lam < best:
                continue
            # the mixture must at least be comparable the other way round
            if not accessible_signed(
                rel,
                [(Fraction(1), space_id, st)],
                [(1 - lam, space_id, x0), (lam, space_id, x1)],
            ):
                raise ComparabilityError(
                    ("((1-%s)%s, %s %s)" % (lam, x0, lam, x1), st)
                )
    return best


def _sup_by_bisection(rel, space_id, x0, x1, st, resolution, lo, hi):
    if not _mixture_query(rel, space_id, x0, x1, lo, st):
        raise ComparabilityError((
            "reference mixture at the window floor lambda=%s" % lo,
            "%s.%s" % (space_id, st),
        ))
    if _mixture_query(rel, space_id, x0, x1, hi, st):
        return float(hi)
    # invariant: lo admissible, hi not
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if _mixture_query(rel, space_id, x0, x1, mid, st):
            lo = mid
        else:
            hi = mid
    return float(lo)


def compound_entropy(tables, state, multipliers=None):
    """Scale-weighted entropy sum of a compound state under given tables."""
    total = 0
    for sp, st, lam in state.parts:
        a = 1 if multipliers is None else multipliers[sp]
        total += a * lam * tables[sp].values[st]
    return total


@dataclass
class PrincipleViolation:
    kind: str
    left: object
    right: object
    margin: float


@dataclass
class PrincipleReport:
    """Outcome of checking every fact against the entropy tables."""

    facts_checked: int = 0
    skipped_scale_mismatch: int = 0
    max_parts_seen: int = 0
    violations: list = field(default_factory=list)
    entries: list = field(default_factory=list)

    @property
    def holds(self):
        return not self.violations

    def to_json(self):
        return {
            "facts_checked": self.facts_checked,
            "skipped_scale_mismatch": self.skipped_scale_mismatch,
            "max_parts_seen": self.max_parts_seen,
            "violations": len(self.violations),
            "inequalities": [
                {"left": str(l), "right": str(r), "kind": k, "margin": m}
                for l, r, k, m in self.entries
            ],
        }


def verify_entropy_principle(rel, tables, multipliers=None, resolution=None,
                             record_all=True):
    """Check monotonicity of weighted entropy sums over all facts.

    Facts whose per-space scale totals differ on the two sides are outside
    the additivity contract and are skipped (counted in the report).  A fact
    violates when the entropy sum drops by more than the grid tolerance; an
    equivalence violates when the sums differ by more than it.  With
    record_all the report keeps every checked inequality with its margin.
    """
    if resolution is None:
        resolution = max(
            (t.lambda_resolution for t in tables.values()), default=Fraction(0)
        )
    for sp in rel.spaces:
        if sp not in tables:
            raise DegenerateTableError("no entropy table for space %r" % sp)
    report = PrincipleReport()
    for left, right in sorted(rel.facts, key=lambda p: (str(p[0]), str(p[1]))):
        if left.total_scale_by_space() != right.total_scale_by_space():
            report.skipped_scale_mismatch += 1
            continue
        report.max_parts_seen = max(report.max_parts_seen, len(left), len(right))
        s_left = compound_entropy(tables, left, multipliers)
        s_right = compound_entropy(tables, right, multipliers)
        margin = s_right - s_left
        scale = sum(lam for _sp, _st, lam in left.parts) + sum(
            lam for _sp, _st, lam in right.parts
        )
        amax = 1 if multipliers is None else max(abs(a) for a in multipliers.values())
        tol = resolution * scale * amax
        report.facts_checked += 1
        equivalent = (right, left) in rel.facts
        kind = "equivalence" if equivalent else "monotonicity"
        if record_all:
            report.entries.append((left, right, kind, float(margin)))
        if equivalent:
            if abs(margin) > tol:
                report.violations.append(
                    PrincipleViolation("equivalence", left, right, float(margin))
                )
        elif margin < -tol:
            report.violations.append(
                PrincipleViolation("monotonicity", left, right, float(margin))
            )
    return report


def fit_affine(table1, table2):
    """Least-squares affine map table1 -> table2: returns (a, b, max_residual).

    Accepts EntropyTable objects or plain state->value mappings; computation
    stays in exact rationals when every value is rational.
    """
    v1 = table1.values if isinstance(table1, EntropyTable) else dict(table1)
    v2 = table2.values if isinstance(table2, EntropyTable) else dict(table2)
    if set(v1) != set(v2):
        raise CalibratorError("tables cover different state sets")
    keys = sorted(v1)
    exact = all(
        isinstance(v, (int, Fraction)) for v in list(v1.values()) + list(v2.values())
    )
    xs = [v1[k] if exact else float(v1[k]) for k in keys]
    ys = [v2[k] if exact else float(v2[k]) for k in keys]
    n = len(keys)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    var = sum((x - mean_x) ** 2 for x in xs)
    if var == 0:
        raise DegenerateTableError(
            "table for %s is constant; affine fit skipped" % getattr(
                table1, "space_id", "?"
            )
        )
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    a = cov / var
    b = mean_y - a * mean_x
    max_residual = max(abs(a * x + b - y) for x, y in zip(xs, ys))
    return a, b, max_residual


def find_calibrators(rel, space1, space2):
    """Search for states X0 << X1 in space1 and Y0 << Y1 in space2 with
    (X0, Y1) equivalent to (X1, Y0); the first quadruple in declared order."""
    states1 = rel.spaces[space1].state_ids
    states2 = rel.spaces[space2].state_ids
    strict1 = [
        (a, b) for a in states1 for b in states1
        if classify(rel, single(space1, a), single(space1, b)) == STRICTLY_PRECEDES
    ]
    strict2 = [
        (c, d) for c in states2 for d in states2
        if classify(rel, single(space2, c), single(space2, d)) == STRICTLY_PRECEDES
    ]
    for x0, x1 in strict1:
        for y0, y1 in strict2:
            left = single(space1, x0).combine(single(space2, y1))
            right = single(space1, x1).combine(single(space2, y0))
            if _query(rel, left, right) and _query(rel, right, left):
                return x0, x1, y0, y1
    raise CalibratorError(
        "no calibrator quadruple between %r and %r in the declared universe"
        % (space1, space2)
    )


@dataclass
class CalibrationResult:
    """Multiplicative entropy constants per space, first space gauged to 1."""

    a: dict
    residual: float


def calibrate_multiplicative(tables, calibrators):
    """Fix the ratio of multiplicative constants from calibrator quadruples.

    Each calibrator is (space1, space2, X0, X1, Y0, Y1) with (X0, Y1)
    equivalent to (X1, Y0); the constants then satisfy
    a1*(S1(X1)-S1(X0)) = a2*(S2(Y1)-S2(Y0)).  The first declared space gets
    a = 1; over-determined systems report their worst inconsistency.
    """
    a = {}
    first = next(iter(tables))
    a[first] = Fraction(1)
    residual = 0.0
    pending = list(calibrators)
    progress = True
    while pending and progress:
        progress = False
        remaining = []
        for cal in pending:
            s1, s2, x0, x1, y0, y1 = cal
            d1 = tables[s1].values[x1] - tables[s1].values[x0]
            d2 = tables[s2].values[y1] - tables[s2].values[y0]
            if d1 == 0 or d2 == 0:
                raise CalibratorError(
                    "degenerate calibrator between %r and %r" % (s1, s2)
                )
            if s1 in a and s2 in a:
                residual = max(residual, abs(float(a[s1] * d1 - a[s2] * d2)))
            elif s1 in a:
                a[s2] = a[s1] * d1 / d2
            elif s2 in a:
                a[s1] = a[s2] * d2 / d1
            else:
                remaining.append(cal)
                continue
            progress = True
        pending = remaining
    if pending:
        raise CalibratorError(
            "calibrator chain does not reach the gauged space %r" % first
        )
    for sp, val in a.items():
        if val <= 0:
            raise CalibratorError(
                "non-positive multiplicative constant for %r" % sp
            )
    return CalibrationResult(a=a, residual=residual)


def entropy_table_csv(tables):
    """Render tables as CSV with header space,state,S,resolution."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["space", "state", "S", "resolution"])
    items = tables.values() if isinstance(tables, dict) else [tables]
    for table in items:
        res = format_rational(table.lambda_resolution)
        for st in sorted(table.values):
            val = table.values[st]
            text = format_rational(val) if isinstance(val, (int, Fraction)) else repr(val)
            writer.writerow([table.space_id, st, text, res])
    return buf.getvalue()
