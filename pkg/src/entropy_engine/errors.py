"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class RelationSpecError(EngineError):
    """Malformed relation input: bad lambda, bad grid, inconsistent spaces."""


class UnknownStateError(EngineError):
    """A state or space id is not declared."""


class CompositionMismatchError(EngineError):
    """A declared fact relates states with different total element content."""


class UnclosedRelationError(EngineError):
    """Query against a relation that has not been closed."""


class ClosureBudgetError(EngineError):
    """Closure exceeded the configured fact budget (combinatorial blow-up)."""

    def __init__(self, budget, facts):
        super().__init__(
            "closure exceeded the fact budget of %d (reached %d facts); "
            "shrink the lambda grid or max_parts" % (budget, facts)
        )
        self.budget = budget
        self.facts = facts


class NoReferencePairError(EngineError):
    """No strictly ordered reference pair exists for the entropy construction."""


class ComparabilityError(EngineError):
    """A pair of states that must be comparable is not."""

    def __init__(self, witness):
        super().__init__("incomparable pair encountered: %s vs %s" % witness)
        self.witness = witness


class DegenerateTableError(EngineError):
    """An entropy table is constant; an affine fit is meaningless."""


class CalibratorError(EngineError):
    """No valid calibrator quadruple exists, or a calibrator is degenerate."""


class DomainError(EngineError):
    """A state lies outside (or on the boundary of) a model domain."""


class IntegrationError(EngineError):
    """Adiabat integration failed: path left the domain or step underflow."""


class TemperatureSignError(EngineError):
    """Computed temperature is not positive (bad model or oracle)."""


class SplitBoundaryError(EngineError):
    """The entropy-maximizing energy partition sits on the admissible boundary."""


class InfeasibleConstantsError(EngineError):
    """The additive-constant difference constraints admit no solution."""

    def __init__(self, cycle, total):
        super().__init__(
            "infeasible constraint system: cycle %s has total bound %s < 0"
            % (" -> ".join(str(n) for n in cycle), total)
        )
        self.cycle = cycle
        self.total = total


class InputFormatError(EngineError):
    """An instance file does not parse or does not match its schema."""
