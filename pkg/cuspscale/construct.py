"""Typed construction of configuration objects from TOML or JSON data.

Supported annotations: bool, str, int, float (ints accepted), complex
(`[re, im]` pairs or a plain number), Path, `list[X]`, `tuple[X, ...]` and
fixed tuples, `dict[str, X]`, `Optional[X]` and other unions, Enums (names
matched case-insensitively, `-` standing in for `_`) and dataclasses, whose
absent fields take their defaults.
"""

from dataclasses import is_dataclass
from enum import Enum
import json
from pathlib import Path
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import types
import typing
from typing import Any, Optional, Type, TypeVar, Union, cast

from .errors import ConfigError, InputError

T = TypeVar("T")

UNIONS = (Union, types.UnionType)


def construct(annot: Any, data: Any) -> Any:
    try:
        return _construct(annot, data)
    except (AssertionError, ValueError, TypeError) as e:
        raise InputError(str(annot), data) from e


def _number(data: Any) -> bool:
    return isinstance(data, (int, float)) and not isinstance(data, bool)


def _scalar(annot: Any, data: Any) -> Any:
    if annot is bool or annot is str:
        assert isinstance(data, annot)
        return data
    if annot is int:
        assert isinstance(data, int) and not isinstance(data, bool)
        return data
    if annot is float:
        assert _number(data)
        return float(data)
    if annot is complex:
        if _number(data):
            return complex(data)
        assert isinstance(data, list) and len(data) == 2
        re, im = (construct(float, x) for x in data)
        return complex(re, im)
    if annot is Path:
        assert isinstance(data, str)
        return Path(data)
    raise ValueError(f"Not a scalar annotation: {annot}")


def _enum(annot: Type[Enum], data: Any) -> Enum:
    assert isinstance(data, str)
    key = data.lower().replace("-", "_")
    for option in annot:
        if option.name.lower() == key:
            return option
    raise ValueError(f"`{data}` is not one of {[str(o) for o in annot]}")


def _dataclass(annot: Any, data: Any) -> Any:
    assert isinstance(data, dict)
    hints = typing.get_type_hints(annot)
    unknown = sorted(set(data) - set(hints))
    if unknown:
        raise ValueError(f"Unknown keys {unknown} for {annot.__name__}")
    return annot(**{k: construct(hints[k], v) for k, v in data.items()})


def _construct(annot: Any, data: Any) -> Any:
    if annot is Any:
        return data
    if annot in (bool, str, int, float, complex, Path):
        return _scalar(annot, data)

    origin, args = typing.get_origin(annot), typing.get_args(annot)
    if origin is list:
        assert isinstance(data, list)
        return [construct(args[0], x) for x in data]
    if origin is tuple:
        assert isinstance(data, list)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(construct(args[0], x) for x in data)
        assert len(args) == len(data)
        return tuple(construct(a, x) for a, x in zip(args, data))
    if origin is dict:
        assert args[0] is str and isinstance(data, dict)
        return {k: construct(args[1], v) for k, v in data.items()}
    if origin in UNIONS:
        if data is None and types.NoneType in args:
            return None
        for option in args:
            if option is types.NoneType:
                continue
            try:
                return _construct(option, data)
            except (AssertionError, ValueError, InputError):
                continue
        raise ValueError("None of the choices in type union match data.")

    if isinstance(annot, type) and issubclass(annot, Enum):
        return _enum(annot, data)
    if is_dataclass(annot):
        return _dataclass(annot, data)
    raise ValueError(f"Couldn't construct {annot} from {data!r}")


def read_data(path: Path, section: Optional[str] = None) -> Any:
    """Decode a `.toml` or `.json` file, descending into `section`; the
    section string may contain periods for deeper nesting."""
    if not path.exists():
        raise ConfigError(f"File not found: {path}")
    match path.suffix:
        case ".toml":
            with open(path, "rb") as f:
                data: Any = tomllib.load(f)
        case ".json":
            with open(path, "rb") as f:
                data = json.load(f)
        case _:
            raise ConfigError(f"Unrecognized file format: {path}")

    for key in section.split(".") if section else []:
        if not isinstance(data, dict) or key not in data:
            raise ConfigError(f"Data file `{path}` should contain section `{section}`.")
        data = data[key]
    return data


def read_from_file(data_type: Type[T], path: Path, section: Optional[str] = None) -> T:
    """Read an object of `data_type` from `path`.

    ```python
    read_from_file(ModelSurface, Path("./models/parabolic_cylinder.toml"))
    ```
    """
    return cast(T, construct(data_type, read_data(path, section)))
