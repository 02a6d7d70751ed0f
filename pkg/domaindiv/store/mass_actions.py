"""
This module inserts many records at once, in a single transaction.
"""
import sqlite3 as sql
from typing import Sequence, TypeVar

from .commons import _get_fields, _get_table_name, connect
from .constraints import ConstraintFailedError

T = TypeVar('T')


class HeterogeneousCollectionError(TypeError):
    """
    :raise : if the passed collection holds records of more than one class.
    """
    pass


def create_many(objects: Sequence[T]) -> None:
    """
    Insert the records of many objects of the same record class.

    :param objects: Objects decorated with ``@record``; an empty sequence is a no-op.
    """
    if not objects:
        return
    class_ = type(objects[0])
    if any(type(obj) is not class_ for obj in objects):
        raise HeterogeneousCollectionError("Collection is not homogeneous.")
    table_name = _get_table_name(class_)
    field_names = [f.name for f in _get_fields(class_)]
    placeholders = ', '.join(["?"] * len(field_names))
    rows = [[getattr(obj, name) for name in field_names] for obj in objects]
    with connect(class_) as con:
        try:
            con.executemany(f"INSERT INTO {table_name}({', '.join(field_names)}) "
                            f"VALUES ({placeholders});", rows)
        except sql.IntegrityError as e:
            con.rollback()
            raise ConstraintFailedError(f"{table_name}: {e}") from e
        con.commit()
