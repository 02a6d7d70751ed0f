import dataclasses
import sqlite3 as sql
import threading
from contextlib import contextmanager
from enum import Enum
from inspect import isclass
from typing import Any, Dict, Iterator, List, Tuple, Type, Union

from .constraints import Primary, Unique

PythonType = type
PrimitiveType = Union[type(None), int, float, str, bytes]
Key = Union[PrimitiveType, Tuple[PrimitiveType, ...]]
RecordClass = Type[Any]

# guards the class-level connection slot of bound record classes
_binding_lock = threading.RLock()


class SQLType(Enum):
    NULL = "NULL"
    INTEGER = "INTEGER"
    REAL = "REAL"
    TEXT = "TEXT"
    BLOB = "BLOB"

    def __str__(self):
        return self.value


@dataclasses.dataclass
class SQLField:
    name: str
    py_type: PythonType
    sql_type: str

    @property
    def primary(self) -> bool:
        return self.py_type in primary_types


TypesTable = Dict[PythonType, str]

primitive_types: TypesTable = {
    type(None): str(SQLType.NULL),
    int: str(SQLType.INTEGER),
    float: str(SQLType.REAL),
    str: str(SQLType.TEXT),
    bytes: str(SQLType.BLOB)
}

unique_types: TypesTable = {
    Unique[key]: f"{value} NOT NULL UNIQUE" for key, value in primitive_types.items()
}
primary_types: TypesTable = {
    Primary[key]: f"{value} NOT NULL" for key, value in primitive_types.items()
}
type_table: TypesTable = {**primitive_types, **unique_types, **primary_types}


def _convert_type(type_: PythonType) -> str:
    """
    Given a Python type, return the column declaration of its SQLite equivalent.

    >>> _convert_type(int)
    'INTEGER'
    """
    try:
        return type_table[type_]
    except KeyError:
        raise TypeError(f"Type {type_} has no SQLite column equivalent.")


def _assert_is_record(class_: type) -> None:
    if not getattr(class_, '__record_table__', None):
        raise TypeError(f"Given class <{class_.__name__}> is not decorated with @record.")


def _get_table_name(obj_or_class: Union[type, object]) -> str:
    class_: type = obj_or_class if isclass(obj_or_class) else type(obj_or_class)
    _assert_is_record(class_)
    return class_.__record_table__


def _get_fields(class_: RecordClass) -> List[SQLField]:
    _assert_is_record(class_)
    return [SQLField(f.name, f.type, _convert_type(f.type)) for f in dataclasses.fields(class_)]


def _get_primary_key(class_: RecordClass) -> List[SQLField]:
    return [f for f in _get_fields(class_) if f.primary]


def _validate_key(class_: RecordClass, key: Key) -> Tuple[PrimitiveType, ...]:
    primary_key = _get_primary_key(class_)
    if not isinstance(key, tuple):
        key = (key,)
    if len(key) != len(primary_key):
        raise ValueError(f"Class <{class_.__name__}> has a key {len(primary_key)} fields long, "
                         f"a key of {len(key)} fields was given instead.")
    for i, value in enumerate(key):
        if type(value) not in primitive_types:
            raise ValueError(f"Key must contain only primitive types. Value of type "
                             f"<{type(value).__name__}> found in position {i}.")
    return key


def _get_key_condition(class_: RecordClass, key: Key) -> Tuple[str, Tuple[PrimitiveType, ...]]:
    """
    Build a ``WHERE`` clause matching the primary key, with its placeholder values.
    """
    key = _validate_key(class_, key)
    condition = " AND ".join(f"{k.name} = ?" for k in _get_primary_key(class_))
    return condition, key


def _get_instance_key(self) -> Tuple[PrimitiveType, ...]:
    return tuple(getattr(self, k.name) for k in _get_primary_key(type(self)))


def _create_table(class_: RecordClass, cursor: sql.Cursor) -> None:
    """
    Create the table bound to a record class, if missing.

    :param class_: A record class.
    :param cursor: Cursor on the target database.
    """
    fields = _get_fields(class_)
    primary = [f.name for f in fields if f.primary]
    if not primary:
        raise TypeError(f"Record class <{class_.__name__}> declares no Primary field.")
    columns = ", ".join(f"{f.name} {f.sql_type}" for f in fields)
    cursor.execute(f"CREATE TABLE IF NOT EXISTS {_get_table_name(class_)} "
                   f"({columns}, PRIMARY KEY ({', '.join(primary)}));")


def table_exists(conn: sql.Connection, table_name: str) -> bool:
    cur = conn.execute("SELECT count(*) FROM sqlite_master WHERE type = 'table' AND name = ?;",
                       (table_name,))
    return bool(cur.fetchone()[0])


@contextmanager
def bound(conn: sql.Connection, *classes: RecordClass,
          create: bool = True) -> Iterator[sql.Connection]:
    """
    Bind record classes to an open connection for the duration of the block.

    :param conn: Open SQLite connection.
    :param classes: Record classes to bind.
    :param create: Create the missing tables.
    """
    with _binding_lock:
        for class_ in classes:
            _assert_is_record(class_)
        previous = [class_.connection for class_ in classes]
        try:
            for class_ in classes:
                class_.connection = conn
                if create:
                    _create_table(class_, conn.cursor())
            yield conn
        finally:
            for class_, old in zip(classes, previous):
                class_.connection = old


@contextmanager
def connect(class_: RecordClass) -> Iterator[sql.Connection]:
    _assert_is_record(class_)
    if class_.connection is None:
        raise RuntimeError(f"Record class <{class_.__name__}> is not bound to a database.")
    yield class_.connection
