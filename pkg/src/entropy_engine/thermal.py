"""Thermal join, equilibrium splitting, temperature and heat-flow checks.

Two simple systems coupled so that only the total energy is conserved form a
new simple system.  Splitting that join back into two states is done by
maximizing the total entropy over the energy partition; two states are in
thermal equilibrium when the maximizer reproduces their own energies, which
for smooth concave oracles coincides with equal temperature.
"""

import math
from dataclasses import dataclass, field

from .errors import DomainError, SplitBoundaryError, TemperatureSignError
from .simple import StatePoint, point

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class ThermalJoin:
    """The simple system obtained by thermally coupling two models."""

    left: object
    right: object

    def energy_interval(self, U, V1, V2):
        """Open admissible interval for the left share of the total energy."""
        lo = max(self.left.domain.lo[0], U - self.right.domain.hi[0])
        hi = min(self.left.domain.hi[0], U - self.right.domain.lo[0])
        if lo >= hi:
            raise DomainError(
                "total energy %g has no admissible partition at V1=%s V2=%s"
                % (U, V1, V2)
            )
        return lo, hi

    def contains(self, U, V1, V2):
        try:
            self.energy_interval(U, V1, V2)
        except DomainError:
            return False
        v1_ok = self.left.domain.contains(
            (0.5 * (self.left.domain.lo[0] + self.left.domain.hi[0]),) + tuple(V1)
        )
        v2_ok = self.right.domain.contains(
            (0.5 * (self.right.domain.lo[0] + self.right.domain.hi[0]),) + tuple(V2)
        )
        return v1_ok and v2_ok


@dataclass
class TemperatureValue:
    T: float
    step: float


def temperature(model, X, h_rel=1e-6):
    """1/T as the energy derivative of the entropy oracle, central differences.

    Raises when the stencil leaves the domain or the result is not positive.
    """
    if model.entropy is None:
        raise DomainError("temperature needs an entropy oracle")
    model.require_interior(X)
    h = h_rel * max(1.0, abs(X.U))
    for u in (X.U - h, X.U + h):
        if not model.domain.contains((u,) + tuple(X.V)):
            raise DomainError(
                "temperature stencil leaves the domain at %s" % (X,)
            )
    ds_du = (model.entropy(X.U + h, X.V) - model.entropy(X.U - h, X.V)) / (2.0 * h)
    if ds_du <= 0.0:
        raise TemperatureSignError(
            "non-positive temperature at %s in %s" % (X, model.name)
        )
    return TemperatureValue(T=1.0 / ds_du, step=h)


@dataclass
class SplitResult:
    """Equilibrium partition of a joined state; alternatives list any other
    local maximizers found (a flagged degeneracy for non-concave oracles)."""

    X1: StatePoint
    X2: StatePoint
    total_entropy: float
    alternatives: list = field(default_factory=list)

    @property
    def degenerate(self):
        return bool(self.alternatives)

    def __iter__(self):
        return iter((self.X1, self.X2))


def _golden_max(f, a, b, tol):
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
    return 0.5 * (a + b)


def thermal_split(join, U, V1, V2, tol_rel=1e-10, scan_points=33):
    """Split the joined state (U, V1, V2) into the entropy-maximizing pair.

    A coarse scan brackets every local maximizer; each bracket is refined by
    golden-section search and polished by bisecting the derivative sign.  The
    partition tolerance is tol_rel relative to the total energy.  A maximizer
    pressed against the admissible boundary raises SplitBoundaryError.
    """
    m1, m2 = join.left, join.right
    if m1.entropy is None or m2.entropy is None:
        raise DomainError("thermal split needs entropy oracles on both sides")
    V1 = tuple(float(v) for v in V1)
    V2 = tuple(float(v) for v in V2)
    lo, hi = join.energy_interval(U, V1, V2)
    width = hi - lo
    edge = 1e-9 * width
    lo, hi = lo + edge, hi - edge
    tol = tol_rel * max(abs(U), 1.0)

    def total(u1):
        return m1.entropy(u1, V1) + m2.entropy(U - u1, V2)

    # coarse scan for local maxima brackets
    grid = [lo + k * (hi - lo) / (scan_points - 1) for k in range(scan_points)]
    values = [total(u) for u in grid]
    brackets = []
    for k in range(len(grid)):
        left_ok = k == 0 or values[k] >= values[k - 1]
        right_ok = k == len(grid) - 1 or values[k] >= values[k + 1]
        if left_ok and right_ok:
            a = grid[max(k - 1, 0)]
            b = grid[min(k + 1, len(grid) - 1)]
            brackets.append((a, b))

    # the derivative stencil must stay well above the float noise floor of
    # the entropy values, or the sign bisection dissolves into noise
    h = max(1e-5 * width, 1e3 * tol)

    def deriv(u):
        return total(u + h) - total(u - h)

    candidates = []
    for a, b in brackets:
        da = max(a, lo + h)
        db = min(b, hi - h)
        if da < db and deriv(da) > 0.0 > deriv(db):
            x_lo, x_hi = da, db
            while x_hi - x_lo > tol:
                mid = 0.5 * (x_lo + x_hi)
                if deriv(mid) > 0.0:
                    x_lo = mid
                else:
                    x_hi = mid
            u_star = 0.5 * (x_lo + x_hi)
        else:
            u_star = _golden_max(total, a, b, max(tol, 1e-13))
        candidates.append((total(u_star), u_star))

    if not candidates:
        raise SplitBoundaryError("no interior entropy maximizer found")
    candidates.sort(reverse=True)
    best_val, best_u = candidates[0]
    if best_u - lo <= 2.0 * edge + tol or hi - best_u <= 2.0 * edge + tol:
        raise SplitBoundaryError(
            "entropy maximizer sits on the boundary of the admissible "
            "energy interval [%g, %g]" % (lo, hi)
        )
    alternatives = []
    value_tol = 1e-9 * max(1.0, abs(best_val))
    for val, u in candidates[1:]:
        if abs(val - best_val) <= value_tol and abs(u - best_u) > 10.0 * tol:
            alternatives.append(point(u, V1))
    return SplitResult(
        X1=point(best_u, V1),
        X2=point(U - best_u, V2),
        total_entropy=best_val,
        alternatives=alternatives,
    )


def in_thermal_equilibrium(model1, X1, model2, X2, tol=1e-9):
    """True when re-splitting the thermal join reproduces the given energies."""
    join = ThermalJoin(model1, model2)
    U = X1.U + X2.U
    split = thermal_split(join, U, X1.V, X2.V)
    return abs(split.X1.U - X1.U) <= tol * max(abs(U), 1.0)


@dataclass
class FlowReport:
    T1: float
    T2: float
    dU1: float
    ok: bool
    note: str = ""


def check_energy_flow(model1, X1, model2, X2, tol=1e-9):
    """Energy must flow from the hotter system to the colder one.

    Splits the join of the two states and compares each side's energy change
    against the initial temperature ordering; equal temperatures must move
    essentially no energy.
    """
    t1 = temperature(model1, X1).T
    t2 = temperature(model2, X2).T
    U = X1.U + X2.U
    split = thermal_split(ThermalJoin(model1, model2), U, X1.V, X2.V)
    du1 = split.X1.U - X1.U
    scale = max(abs(U), 1.0)
    t_scale = max(t1, t2)
    if abs(t1 - t2) <= tol * t_scale:
        ok = abs(du1) <= 1e-6 * scale
        note = "already in equilibrium"
    elif t1 > t2:
        ok = du1 < tol * scale
        note = "hot left side must lose energy"
    else:
        ok = du1 > -tol * scale
        note = "cold left side must gain energy"
    return FlowReport(T1=t1, T2=t2, dU1=du1, ok=ok, note=note)


@dataclass
class ZerothLawReport:
    checked: int
    non_equilibrium: int
    violations: list
    undecided: int = 0

    @property
    def holds(self):
        return not self.violations


def check_zeroth_law(triples, tol=1e-9):
    """Transitivity of thermal equilibrium over (model, state) triples.

    Triples whose first two pairs are not in equilibrium exercise nothing and
    are only counted; a violation is equilibrium of (1,2) and (2,3) without
    equilibrium of (1,3).  Pairs whose equilibrium split has no interior
    solution inside the finite domains cannot be decided and are counted
    separately, never raised.
    """
    checked = 0
    non_eq = 0
    undecided = 0
    violations = []
    for (m1, x1), (m2, x2), (m3, x3) in triples:
        try:
            e12 = in_thermal_equilibrium(m1, x1, m2, x2, tol)
            e23 = in_thermal_equilibrium(m2, x2, m3, x3, tol)
        except (SplitBoundaryError, DomainError):
            undecided += 1
            continue
        if not (e12 and e23):
            non_eq += 1
            continue
        try:
            e13 = in_thermal_equilibrium(m1, x1, m3, x3, tol)
        except (SplitBoundaryError, DomainError):
            undecided += 1
            continue
        checked += 1
        if not e13:
            violations.append(((m1.name, x1), (m2.name, x2), (m3.name, x3)))
    return ZerothLawReport(checked, non_eq, violations, undecided)


def isotherm_state(model, V, T_target, tol=1e-12):
    """State of the model with work coordinates V and temperature T_target.

    Bisects the energy; returns None when the temperature range at V does not
    bracket the target (the model cannot reach it there).
    """
    V = tuple(float(v) for v in V)
    lo, hi = model.domain.lo[0], model.domain.hi[0]
    pad = 1e-4 * (hi - lo) + 2e-6 * max(1.0, abs(hi))
    lo, hi = lo + pad, hi - pad

    def t_at(u):
        return temperature(model, StatePoint(u, V)).T

    t_lo, t_hi = t_at(lo), t_at(hi)
    if not (min(t_lo, t_hi) <= T_target <= max(t_lo, t_hi)):
        return None
    increasing = t_hi >= t_lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
        if (t_at(mid) < T_target) == increasing:
            lo = mid
        else:
            hi = mid
    return StatePoint(0.5 * (lo + hi), V)


def isotherm_samples(model, T_target, v_grid):
    """States with temperature T_target along a grid of work coordinates."""
    out = []
    for v in v_grid:
        state = isotherm_state(model, (v,) if isinstance(v, (int, float)) else v,
                               T_target)
        if state is not None:
            out.append(state)
    return out


@dataclass
class TransversalityReport:
    found: bool
    below: StatePoint = None
    above: StatePoint = None
    temperature: float = 0.0
    probes: int = 0


def check_transversality(model, X, T_probe=None, n_probes=17, margin=1e-9,
                         v_window=None):
    """Find isothermal states strictly on both sides of X's adiabat.

    Walks the isotherm through the probe temperature (X's own by default)
    across the work-coordinate window (the whole domain by default) and looks
    for entropies strictly below and strictly above the entropy of X.  Not
    finding a pair is reported, not raised: it is evidence of a state space
    splitting into pieces, or of too small a probe window.
    """
    if model.entropy is None:
        raise DomainError("transversality check needs an entropy oracle")
    model.require_interior(X)
    if T_probe is None:
        T_probe = temperature(model, X).T
    s_x = model.entropy(X.U, X.V)
    if v_window is not None:
        lo, hi = v_window
    else:
        lo, hi = model.domain.lo[1], model.domain.hi[1]
    pad = 1e-3 * (hi - lo)
    below = above = None
    probes = 0
    for k in range(n_probes):
        v = lo + pad + k * (hi - lo - 2 * pad) / (n_probes - 1)
        state = isotherm_state(model, (v,), T_probe)
        if state is None:
            continue
        probes += 1
        s = model.entropy(state.U, state.V)
        gap = margin * max(1.0, abs(s_x))
        if s < s_x - gap and below is None:
            below = state
        elif s > s_x + gap and above is None:
            above = state
        if below and above:
            return TransversalityReport(True, below, above, T_probe, probes)
    return TransversalityReport(False, below, above, T_probe, probes)
