"""Exception types shared across the toolkit."""


class TractwiseError(Exception):
    """Base class for all toolkit errors."""

    code = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_json(self):
        return {"code": self.code, "message": self.message, "context": self.context}


class ConfigError(TractwiseError):
    code = "config_error"


class MissingColumnError(TractwiseError):
    code = "missing_column"


class NameCollisionError(TractwiseError):
    code = "name_collision"


class DuplicateKeyError(TractwiseError):
    code = "duplicate_key"


class EmptyJoinError(TractwiseError):
    code = "empty_join"


class DegenerateDataError(TractwiseError):
    """Zero-variance input where a spread is required (never silently scored)."""

    code = "degenerate_data"


class EmptyGroupError(TractwiseError):
    code = "empty_group"


class RankDeficiencyError(TractwiseError):
    code = "rank_deficiency"


class WidthMismatchError(TractwiseError):
    code = "width_mismatch"
