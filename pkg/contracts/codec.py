"""
Canonical wire encoding for messages
Sorted keys, no insignificant whitespace, UTF-8
"""

from typing import Any, Union

import orjson
from pydantic import BaseModel

from config import MessageKinds
from errors import MessageParseError

CANONICAL = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def _plain(msg: Any) -> Any:
    if isinstance(msg, BaseModel):
        to_wire = getattr(msg, "to_wire", None)
        return to_wire() if to_wire else msg.model_dump(mode="json")
    return msg


def serialize(msg: Any) -> bytes:
    """Canonical bytes; structurally equal messages give identical bytes"""
    return orjson.dumps(_plain(msg), option=CANONICAL)


def parse(data: Union[bytes, str], kind: str) -> Any:
    """
    Decode wire bytes into a candidate message of the given kind.

    The result is not checked against the schema; run it through
    validate() for that.

    Raises:
        MessageParseError: Unknown kind or malformed text, with the byte offset
    """
    if kind not in MessageKinds.ALL:
        raise MessageParseError(f"Unknown message kind '{kind}'")
    try:
        return orjson.loads(data)
    except orjson.JSONDecodeError as e:
        raise MessageParseError(f"Malformed {kind} message: {e.msg}", offset=e.pos) from e


def token_count(msg: Any) -> int:
    """Whitespace-delimited chunks of the canonical serialization"""
    return len(serialize(msg).split())
