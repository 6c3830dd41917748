"""Exception hierarchy shared across modules."""


class ScreenEvalError(ValueError):
    """Base class for data and configuration errors (CLI exit code 1)."""


class DatasetError(ScreenEvalError):
    pass


class UndefinedMetricError(ScreenEvalError):
    """A metric has a zero denominator, usually because a class is absent."""

    def __init__(self, metric: str, detail: str = ""):
        self.metric = metric
        msg = f"undefined metric: {metric}"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class ConfigError(ScreenEvalError):
    pass
