"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A configuration value is outside its allowed range."""


class InputError(ValueError):
    """Runtime input violates a precondition (shape, dtype, value range)."""


class ContractError(ValueError):
    """Two pieces of internal state disagree (count/shape bookkeeping)."""


class DegenerateScorerError(ValueError):
    """Node scoring weights have zero norm."""


class TrainingDiverged(RuntimeError):
    """A loss term became non-finite during training."""

    def __init__(self, term, step):
        super().__init__(f"non-finite loss term '{term}' at step {step}")
        self.term = term
        self.step = step
