import sqlite3 as sql
from typing import Any, Sequence, Tuple

from .commons import RecordClass, Key, _assert_is_record, _get_fields, _get_key_condition, \
    _get_primary_key, _get_table_name, connect


def _convert_record_to_object(class_: RecordClass, record: Sequence[Any]) -> Any:
    field_names = [f.name for f in _get_fields(class_)]
    return class_(**dict(zip(field_names, record)))


def _select(class_: RecordClass, condition: str = "", values: Sequence[Any] = ()) -> tuple:
    _assert_is_record(class_)
    table_name = _get_table_name(class_)
    order = ", ".join(k.name for k in _get_primary_key(class_))
    where = f" WHERE {condition}" if condition else ""
    with connect(class_) as con:
        try:
            cur = con.execute(f"SELECT * FROM {table_name}{where} ORDER BY {order};", values)
        except sql.OperationalError as e:
            raise KeyError(f"Table {table_name} cannot be read: {e}")
        records = cur.fetchall()
    return tuple(_convert_record_to_object(class_, r) for r in records)


def is_fetchable(class_: RecordClass, key: Key) -> bool:
    """
    Check if a record with the given primary key exists.
    """
    condition, values = _get_key_condition(class_, key)
    return bool(_select(class_, condition, values))


def fetch_from(class_: RecordClass, key: Key) -> Any:
    """
    Fetch the record with the given primary key.

    :param class_: Record class.
    :param key: Primary key of the record.
    :return: The fetched object.
    """
    condition, values = _get_key_condition(class_, key)
    found = _select(class_, condition, values)
    if not found:
        raise KeyError(f"An object with key {key} of type {class_.__name__} does not exist.")
    return found[0]


def fetch_where(class_: RecordClass, field: str, value: Any) -> tuple:
    """
    Fetch the records whose ``field`` equals ``value``, ordered by primary key.
    """
    if field not in {f.name for f in _get_fields(class_)}:
        raise ValueError(f"<{class_.__name__}> has no field '{field}'.")
    return _select(class_, f"{field} = ?", (value,))


def fetch_all(class_: RecordClass) -> Tuple[Any, ...]:
    """
    Fetch all the records of a class, ordered by primary key.
    """
    return _select(class_)
