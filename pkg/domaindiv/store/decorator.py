"""
Defines the ``record`` decorator that binds a dataclass to a table of the model file.
"""
import sqlite3 as sql
from dataclasses import is_dataclass
from typing import Callable, Type, TypeVar

from .commons import RecordClass, _assert_is_record, _get_fields, \
    _get_instance_key, _get_key_condition, _get_table_name, connect, Key
from .constraints import ConstraintFailedError

T = TypeVar("T")


def _create_entry(self) -> None:
    """
    Insert the record corresponding to this object.
    """
    class_: RecordClass = type(self)
    table_name: str = _get_table_name(self)
    field_names = [f.name for f in _get_fields(class_)]
    field_values = [getattr(self, f) for f in field_names]
    cols = ', '.join(field_names)
    placeholders = ', '.join(["?"] * len(field_values))
    with connect(class_) as conn:
        try:
            conn.execute(f"INSERT INTO {table_name}({cols}) VALUES ({placeholders});",
                         field_values)
        except sql.IntegrityError as e:
            raise ConstraintFailedError(f"{table_name}: {e}") from e
        conn.commit()


def remove_from(class_: RecordClass, key: Key) -> None:
    _assert_is_record(class_)
    condition, values = _get_key_condition(class_, key)
    with connect(class_) as conn:
        conn.execute(f"DELETE FROM {_get_table_name(class_)} WHERE {condition};", values)
        conn.commit()


def remove_all(class_: RecordClass) -> None:
    _assert_is_record(class_)
    with connect(class_) as conn:
        conn.execute(f"DELETE FROM {_get_table_name(class_)};")
        conn.commit()


def _remove_entry(self) -> None:
    """
    Remove the record of this object.
    """
    remove_from(type(self), _get_instance_key(self))


def record(table_name: str) -> Callable[[Type[T]], Type[T]]:
    """Bind a dataclass to a table. This adds ``create_entry()`` and ``remove_entry()`` to the
    class; the database is chosen later with :func:`domaindiv.store.commons.bound`.

    :param table_name: Name of the table.
    :return: A class decorator.
    """

    def _wrap(class_: Type[T]) -> Type[T]:
        if not is_dataclass(class_):
            raise TypeError(f"@record expects a dataclass, got <{class_.__name__}>.")
        class_.__record_table__ = table_name
        class_.connection = None
        # fail at import time on unsupported field types
        _get_fields(class_)
        class_.create_entry = _create_entry
        class_.remove_entry = _remove_entry
        return class_

    return _wrap

