"""Finite adiabatic-accessibility relations and their closure.

The engine stores a relation as an explicit set of ordered fact pairs between
compound states and saturates it under the structural rules: reflexivity,
transitivity, consistency (facts compose side by side), scaling invariance
over a finite rational grid, splitting/recombination of parts, and the
cancellation law.  Closure is bounded by the grid and by a maximum part count,
which keeps it decidable; a fact budget guards against blow-up.

OracleRelation is the second backend: it answers the same queries lazily from
a per-state entropy assignment and is used to generate ground-truth relations
over grids far too large to materialize.
"""

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .errors import (
    ClosureBudgetError,
    CompositionMismatchError,
    RelationSpecError,
    UnclosedRelationError,
    UnknownStateError,
)
from .rational import parse_rational
from .states import (
    CompoundState,
    check_membership,
    compound,
    make_space,
    signed_sides,
    single,
)

EQUIVALENT = "equivalent"
STRICTLY_PRECEDES = "strictly_precedes"
STRICTLY_FOLLOWS = "strictly_follows"
INCOMPARABLE = "incomparable"

DEFAULT_BUDGET = 10 ** 6


def dyadic_grid(max_denominator=128, upper=Fraction(1)):
    """All dyadic rationals p/2^k in (0, upper] with 2^k <= max_denominator.

    The default scale grid: exact, decidable, and fine enough for 1/128
    resolution entropy sweeps.
    """
    grid = set()
    q = 1
    while q <= max_denominator:
        p = 1
        while Fraction(p, q) <= upper:
            grid.add(Fraction(p, q))
            p += 1
        q *= 2
    return frozenset(grid)


@dataclass(frozen=True)
class EpsilonFamily:
    """A stability family: facts (X, eps*Z0) < (Y, eps*Z1) for shrinking eps."""

    X: CompoundState
    Y: CompoundState
    Z0: CompoundState
    Z1: CompoundState
    epsilons: tuple


@dataclass
class Relation:
    """An accessibility relation over declared state spaces.

    facts is a set of ordered (CompoundState, CompoundState) pairs; universe
    is the set of compound states appearing in them.  After close() the
    relation is immutable by convention and all queries are pure.
    """

    spaces: dict
    facts: set
    lambda_grid: frozenset
    closed: bool = False
    epsilon_families: tuple = ()
    successors: dict = field(default_factory=dict, repr=False)
    predecessors: dict = field(default_factory=dict, repr=False)

    @property
    def universe(self):
        return set(self.successors)

    def in_universe(self, state):
        return state in self.successors


def _index_fact(rel, pair):
    left, right = pair
    rel.successors.setdefault(left, set()).add(right)
    rel.successors.setdefault(right, set())
    rel.predecessors.setdefault(right, set()).add(left)
    rel.predecessors.setdefault(left, set())


def build_relation(spaces, facts, lambda_grid=None):
    """Assemble an unclosed relation from declared spaces, facts and grid.

    The result contains exactly the given facts plus a reflexive fact for
    every declared single state and every state mentioned in a fact.  With
    no grid given, the dyadics with denominator up to 128 are used.
    """
    if lambda_grid is None:
        lambda_grid = dyadic_grid()
    space_map = {}
    comp_len = None
    for sp in spaces:
        if sp.space_id in space_map:
            raise RelationSpecError("duplicate space id %r" % sp.space_id)
        if comp_len is None:
            comp_len = len(sp.composition)
        elif len(sp.composition) != comp_len:
            raise RelationSpecError(
                "space %r has %d element amounts, expected %d"
                % (sp.space_id, len(sp.composition), comp_len)
            )
        space_map[sp.space_id] = sp

    grid = frozenset(Fraction(g) for g in lambda_grid)
    if any(g <= 0 for g in grid):
        raise RelationSpecError("lambda grid entries must be positive")
    if Fraction(1) not in grid:
        raise RelationSpecError("lambda grid must contain 1")

    rel = Relation(spaces=space_map, facts=set(), lambda_grid=grid)
    for sp in space_map.values():
        for st in sp.state_ids:
            x = single(sp.space_id, st)
            rel.facts.add((x, x))
            _index_fact(rel, (x, x))
    for left, right in facts:
        check_membership(space_map, left)
        check_membership(space_map, right)
        if left.composition(space_map) != right.composition(space_map):
            raise CompositionMismatchError(
                "fact %s -> %s does not conserve element content"
                % (left, right)
            )
        for state in (left, right):
            if not rel.in_universe(state):
                rel.facts.add((state, state))
                _index_fact(rel, (state, state))
        rel.facts.add((left, right))
        _index_fact(rel, (left, right))
    return rel


def _scaled_pair(pair, lam, grid):
    """Scale both sides of a fact by lam; None when a part leaves the grid."""
    out = []
    for state in pair:
        parts = []
        for sp, st, mu in state.parts:
            prod = mu * lam
            if prod not in grid:
                return None
            parts.append((sp, st, prod))
        out.append(CompoundState(tuple(sorted(parts))))
    return tuple(out)


def _split_variants(state, grid, max_parts):
    """All one-part splits and merges of `state` allowed by grid and size."""
    variants = []
    parts = state.parts
    if len(parts) + 1 <= max_parts:
        for i, (sp, st, mu) in enumerate(parts):
            for lam in grid:
                if lam >= 1:
                    continue
                a, b = mu * lam, mu * (1 - lam)
                if a in grid and b in grid:
                    rest = parts[:i] + parts[i + 1:]
                    variants.append(CompoundState(
                        tuple(sorted(rest + ((sp, st, a), (sp, st, b))))
                    ))
    if len(parts) >= 2:
        for i, j in combinations(range(len(parts)), 2):
            si, sj = parts[i], parts[j]
            if si[0] == sj[0] and si[1] == sj[1]:
                merged = si[2] + sj[2]
                if merged in grid:
                    rest = tuple(p for k, p in enumerate(parts) if k not in (i, j))
                    variants.append(CompoundState(
                        tuple(sorted(rest + ((si[0], si[1], merged),)))
                    ))
    return variants


def _sub_multisets(items):
    """Nonempty proper-or-full sub-multisets of a small part tuple."""
    subs = set()
    n = len(items)
    for r in range(1, n + 1):
        for combo in combinations(range(n), r):
            subs.add(tuple(items[k] for k in combo))
    return subs


def _remove_parts(state, sub):
    remaining = list(state.parts)
    for p in sub:
        remaining.remove(p)
    if not remaining:
        return None
    return CompoundState(tuple(sorted(remaining)))


def _cancelled_pairs(pair):
    """Facts implied by the cancellation law: drop a common part bundle."""
    left, right = pair
    common = set(_sub_multisets(left.parts)) & set(_sub_multisets(right.parts))
    out = []
    for sub in common:
        new_left = _remove_parts(left, sub)
        new_right = _remove_parts(right, sub)
        if new_left is not None and new_right is not None:
            out.append((new_left, new_right))
    return out


def close(rel, max_parts=3, budget=DEFAULT_BUDGET):
    """Saturate the relation under the structural rules.

    Returns a new, closed relation.  Generated compound states are restricted
    to at most max_parts parts with scales inside the lambda grid; rule
    applications that would leave those bounds are skipped.  Raises
    ClosureBudgetError when the fact count exceeds `budget`.
    """
    out = Relation(
        spaces=dict(rel.spaces),
        facts=set(),
        lambda_grid=rel.lambda_grid,
        epsilon_families=tuple(rel.epsilon_families),
    )
    grid = rel.lambda_grid
    queue = deque()
    size_buckets = {}
    seen_states = set()

    def add_fact(pair):
        if pair in out.facts:
            return
        out.facts.add(pair)
        if len(out.facts) > budget:
            raise ClosureBudgetError(budget, len(out.facts))
        _index_fact(out, pair)
        size_buckets.setdefault((len(pair[0]), len(pair[1])), []).append(pair)
        queue.append(pair)
        for state in pair:
            ensure_state(state)

    def ensure_state(state):
        if state in seen_states:
            return
        seen_states.add(state)
        add_fact((state, state))
        for variant in _split_variants(state, grid, max_parts):
            add_fact((state, variant))
            add_fact((variant, state))

    for left, right in rel.facts:
        add_fact((left, right))

    while queue:
        left, right = queue.popleft()
        # transitivity through both endpoints
        for nxt in list(out.successors.get(right, ())):
            add_fact((left, nxt))
        for prev in list(out.predecessors.get(left, ())):
            add_fact((prev, right))
        # scaling invariance over the grid
        for lam in grid:
            if lam == 1:
                continue
            scaled = _scaled_pair((left, right), lam, grid)
            if scaled is not None:
                add_fact(scaled)
        # consistency: compose with every size-compatible fact
        for (ls, rs), bucket in list(size_buckets.items()):
            if len(left) + ls > max_parts or len(right) + rs > max_parts:
                continue
            for other_left, other_right in list(bucket):
                add_fact((left.combine(other_left), right.combine(other_right)))
        # cancellation law
        for pair in _cancelled_pairs((left, right)):
            add_fact(pair)

    out.closed = True
    return out


def accessible(rel, x, y):
    """Membership query: is (x, y) a fact of the closed relation?"""
    if not rel.closed:
        raise UnclosedRelationError(
            "accessible() on an unclosed relation would give false negatives"
        )
    return y in rel.successors.get(x, ())


def accessible_signed(rel, left, right):
    """Query with signed scales, normalized via the side-swap convention."""
    lhs, rhs = signed_sides(left, right)
    return _query(rel, lhs, rhs)


def _query(rel, x, y):
    if isinstance(rel, Relation):
        return accessible(rel, x, y)
    return rel.accessible(x, y)


def classify(rel, x, y):
    """One of equivalent / strictly_precedes / strictly_follows / incomparable."""
    fwd = _query(rel, x, y)
    back = _query(rel, y, x)
    if fwd and back:
        return EQUIVALENT
    if fwd:
        return STRICTLY_PRECEDES
    if back:
        return STRICTLY_FOLLOWS
    return INCOMPARABLE


def adiabats(rel, space_id):
    """Partition the unscaled states of a space into mutual-accessibility classes.

    Classes are ordered by their first member in the declared state order,
    which also fixes the canonical representative.
    """
    if space_id not in rel.spaces:
        raise UnknownStateError("unknown space %r" % space_id)
    order = rel.spaces[space_id].state_ids
    seen = set()
    classes = []
    for st in order:
        if st in seen:
            continue
        x = single(space_id, st)
        cls = [st]
        seen.add(st)
        for other in order:
            if other in seen:
                continue
            y = single(space_id, other)
            if _query(rel, x, y) and _query(rel, y, x):
                cls.append(other)
                seen.add(other)
        classes.append(cls)
    return classes


@dataclass
class CHResult:
    holds: bool
    witness: tuple = None
    pairs_checked: int = 0
    universe_size: int = 0


def check_comparison_hypothesis(rel, space_ids=None, universe=None):
    """Scan a universe of compound states for an incomparable pair.

    Only pairs with equal per-space scale totals are required to be
    comparable (states of different total content never are).  Returns the
    first incomparable pair as a witness on failure.
    """
    if universe is None:
        universe = sorted(rel.universe, key=str)
        if space_ids is not None:
            wanted = set(space_ids)
            universe = [
                s for s in universe
                if all(sp in wanted for sp, _st, _lam in s.parts)
            ]
    else:
        universe = list(universe)
    by_signature = {}
    for state in universe:
        sig = tuple(sorted(state.total_scale_by_space().items()))
        by_signature.setdefault(sig, []).append(state)
    checked = 0
    for group in by_signature.values():
        for x, y in combinations(group, 2):
            checked += 1
            if not _query(rel, x, y) and not _query(rel, y, x):
                return CHResult(False, (x, y), checked, len(universe))
    return CHResult(True, None, checked, len(universe))


@dataclass
class AxiomReport:
    name: str
    checked: int
    violations: list

    @property
    def holds(self):
        return not self.violations


def check_reflexivity(rel):
    viol = [s for s in rel.universe if (s, s) not in rel.facts]
    return AxiomReport("reflexivity", len(rel.universe), viol)


def check_transitivity(rel):
    viol = []
    checked = 0
    for left, right in rel.facts:
        for nxt in rel.successors.get(right, ()):
            checked += 1
            if (left, nxt) not in rel.facts:
                viol.append((left, right, nxt))
    return AxiomReport("transitivity", checked, viol)


def check_consistency(rel, max_parts=3, universe_only=False):
    viol = []
    checked = 0
    buckets = {}
    for pair in rel.facts:
        buckets.setdefault((len(pair[0]), len(pair[1])), []).append(pair)
    for (l1, r1), bucket1 in buckets.items():
        for (l2, r2), bucket2 in buckets.items():
            if l1 + l2 > max_parts or r1 + r2 > max_parts:
                continue
            for p1 in bucket1:
                for p2 in bucket2:
                    combined = (p1[0].combine(p2[0]), p1[1].combine(p2[1]))
                    if universe_only and not (
                        rel.in_universe(combined[0]) and rel.in_universe(combined[1])
                    ):
                        continue
                    checked += 1
                    if combined not in rel.facts:
                        viol.append((p1, p2))
    return AxiomReport("consistency", checked, viol)


def check_scaling_invariance(rel, universe_only=False):
    viol = []
    checked = 0
    for pair in rel.facts:
        for lam in rel.lambda_grid:
            if lam == 1:
                continue
            scaled = _scaled_pair(pair, lam, rel.lambda_grid)
            if scaled is None:
                continue
            if universe_only and not (
                rel.in_universe(scaled[0]) and rel.in_universe(scaled[1])
            ):
                continue
            checked += 1
            if scaled not in rel.facts:
                viol.append((pair, lam))
    return AxiomReport("scaling_invariance", checked, viol)


def check_splitting(rel, max_parts=3, universe_only=False):
    viol = []
    checked = 0
    for state in rel.universe:
        for variant in _split_variants(state, rel.lambda_grid, max_parts):
            if universe_only and not rel.in_universe(variant):
                continue
            checked += 1
            if (state, variant) not in rel.facts or (variant, state) not in rel.facts:
                viol.append((state, variant))
    return AxiomReport("splitting_recombination", checked, viol)


def check_cancellation(rel, universe_only=False):
    """Verify the cancellation law on every fact with a shared part bundle."""
    viol = []
    checked = 0
    for pair in rel.facts:
        for reduced in _cancelled_pairs(pair):
            if universe_only and not (
                rel.in_universe(reduced[0]) and rel.in_universe(reduced[1])
            ):
                continue
            checked += 1
            if reduced not in rel.facts:
                viol.append((pair, reduced))
    return AxiomReport("cancellation", checked, viol)


def check_stability(rel, families=None):
    """Flag epsilon families whose limit fact is missing from the relation.

    A family asserts (X, eps Z0) < (Y, eps Z1) for every listed eps; if all
    those facts are present, the limit fact X < Y must have been declared too.
    """
    if families is None:
        families = rel.epsilon_families
    viol = []
    checked = 0
    for fam in families:
        prem = True
        for eps in fam.epsilons:
            left = fam.X.combine(fam.Z0.scale(eps))
            right = fam.Y.combine(fam.Z1.scale(eps))
            if (left, right) not in rel.facts:
                prem = False
                break
        if not prem:
            continue
        checked += 1
        if (fam.X, fam.Y) not in rel.facts:
            viol.append(fam)
    return AxiomReport("stability", checked, viol)


def run_axiom_scan(rel, max_parts=3, universe_only=False):
    """Run every structural scanner plus stability; returns reports by name.

    With universe_only=True, rule results falling outside the relation's own
    universe are skipped; use it for relations materialized on a hand-picked
    universe rather than produced by close().
    """
    reports = {}
    reports["reflexivity"] = check_reflexivity(rel)
    reports["transitivity"] = check_transitivity(rel)
    reports["consistency"] = check_consistency(rel, max_parts, universe_only)
    reports["scaling_invariance"] = check_scaling_invariance(rel, universe_only)
    reports["splitting_recombination"] = check_splitting(
        rel, max_parts, universe_only
    )
    reports["cancellation"] = check_cancellation(rel, universe_only)
    rep = check_stability(rel)
    reports[rep.name] = rep
    return reports


class OracleRelation:
    """Accessibility decided lazily from a per-state entropy assignment.

    A pair is a fact when per-space scale totals agree on both sides and the
    scale-weighted entropy sum does not decrease.  The relation is closed by
    construction; atol > 0 admits float-valued oracles.
    """

    def __init__(self, spaces, sigma, lambda_grid=(Fraction(1),), atol=0):
        self.spaces = {sp.space_id: sp for sp in spaces}
        self.sigma = dict(sigma)
        self.lambda_grid = frozenset(Fraction(g) for g in lambda_grid)
        self.atol = atol
        self.closed = True
        self._memo = {}

    def _weights(self, state):
        cached = self._memo.get(state)
        if cached is not None:
            return cached
        totals = state.total_scale_by_space()
        value = 0.0 if self.atol else Fraction(0)
        for sp, st, lam in state.parts:
            value += (float(lam) if self.atol else lam) * self.sigma[(sp, st)]
        cached = (tuple(sorted(totals.items())), value)
        self._memo[state] = cached
        return cached

    def in_universe(self, state):
        return all((sp, st) in self.sigma for sp, st, _lam in state.parts)

    def accessible(self, x, y):
        tx, vx = self._weights(x)
        ty, vy = self._weights(y)
        if tx != ty:
            return False
        return vx <= vy + self.atol


def relation_from_oracle(spaces, sigma, universe, lambda_grid=(Fraction(1),), atol=0):
    """Materialize the oracle relation on an explicit universe of states.

    Every ordered pair inside `universe` that the entropy assignment admits
    becomes a fact; the result is closed under the structural rules restricted
    to that universe, so it is returned with the closed flag set.
    """
    oracle = OracleRelation(spaces, sigma, lambda_grid, atol)
    rel = Relation(
        spaces=dict(oracle.spaces),
        facts=set(),
        lambda_grid=frozenset(Fraction(g) for g in lambda_grid),
    )
    universe = list(universe)
    for x in universe:
        for y in universe:
            if oracle.accessible(x, y):
                rel.facts.add((x, y))
                _index_fact(rel, (x, y))
    rel.closed = True
    return rel


def _parse_compound(doc):
    return compound([
        (parse_rational(p["lambda"]), p["space"], p["state"]) for p in doc
    ])


def relation_from_json(doc):
    """Load a relation instance from its JSON document form."""
    try:
        spaces = [
            make_space(
                s["id"],
                [parse_rational(c) for c in s["composition"]],
                s["states"],
            )
            for s in doc["spaces"]
        ]
        facts = [
            (_parse_compound(l), _parse_compound(r)) for l, r in doc.get("facts", [])
        ]
        grid = [parse_rational(g) for g in doc.get("lambda_grid", ["1"])]
        families = tuple(
            EpsilonFamily(
                X=_parse_compound(f["X"]),
                Y=_parse_compound(f["Y"]),
                Z0=_parse_compound(f["Z0"]),
                Z1=_parse_compound(f["Z1"]),
                epsilons=tuple(parse_rational(e) for e in f["epsilons"]),
            )
            for f in doc.get("epsilon_families", [])
        )
    except KeyError as exc:
        raise RelationSpecError("missing relation field %s" % exc) from exc
    rel = build_relation(spaces, facts, grid)
    rel.epsilon_families = families
    return rel
