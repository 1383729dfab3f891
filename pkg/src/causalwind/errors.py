class ParameterError(ValueError):
    """An input violates a documented parameter constraint."""


class ScheduleError(ParameterError):
    pass


class OutOfHorizonError(ValueError):
    pass


class SimulationDiverged(ArithmeticError):
    def __init__(self, step_index: int, message: str = "non-finite state"):
        super().__init__(f"{message} at step {step_index}")
        self.step_index = step_index


class UndefinedScoreError(ValueError):
    """Silhouette requested for a labelling with fewer than two clusters."""


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
