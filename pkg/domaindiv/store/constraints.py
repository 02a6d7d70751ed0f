"""
domaindiv.store.constraints introduces the type hints that mark record fields
as constrained columns in the bound table.
"""
from typing import Annotated, TypeVar

from ..errors import DataError

T = TypeVar('T')


class ConstraintFailedError(DataError):
    """
    This exception is raised when the database rejects a record because of a constraint.
    """
    pass


"""
Record fields hinted with this type are bound to a NOT NULL UNIQUE column.
"""
Unique = Annotated[T, "unique"]


"""
Record fields hinted with this type are part of the PRIMARY KEY of the table.
"""
Primary = Annotated[T, "primary"]
