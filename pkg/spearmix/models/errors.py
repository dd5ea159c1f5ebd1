"""
Exception types
"""
from typing import Optional, Union


class RankingFormatError(ValueError):
    """Invalid ranking, ordering or partial-ranking matrix"""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[Union[int, str]] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class AugmentationCapacityError(ValueError):
    """Too many missing entries for exhaustive augmentation"""

    def __init__(self, n_missing: int, limit: int, row: Optional[int] = None):
        self.n_missing = n_missing
        self.limit = limit
        where = f" in row {row}" if row is not None else ""
        super().__init__(
            f"{n_missing} missing entries{where} exceed the augmentation limit of {limit}; "
            "fit with the Monte Carlo EM instead (mc_em=True)"
        )


class DegenerateComponentError(ValueError):
    """A mixture component lost all its mass during the M-step"""

    def __init__(self, components, message: Optional[str] = None):
        self.components = list(components)
        labels = ", ".join(str(g + 1) for g in self.components)
        super().__init__(message or f"empty mixture component(s): {labels}")


class IncompatibleOptionsError(ValueError):
    """Option combination not supported"""
