from pathlib import Path
from typing import Optional

import pytest

from cuspscale.construct import construct, read_from_file
from cuspscale.errors import ConfigError, InputError
from cuspscale.geometry import End, ModelSurface, WarpKind


def test_construct_path():
    assert isinstance(construct(Path, "hello.toml"), Path)
    assert construct(Optional[Path], None) is None
    assert construct(Optional[float], 3) == 3.0


def test_construct_enum():
    assert construct(WarpKind, "hyperbolic-funnel") is WarpKind.HYPERBOLIC_FUNNEL
    assert construct(End, "CUSP") is End.CUSP
    with pytest.raises(InputError):
        construct(End, "collar")


def test_construct_complex():
    assert construct(complex, [1.5, -2]) == complex(1.5, -2)
    assert construct(complex, 3) == complex(3, 0)
    assert construct(tuple[float, float], [1, 2]) == (1.0, 2.0)


def test_construct_dataclass():
    m = construct(ModelSurface, {"n": 2, "funnel": {"kind": "hyperbolic-funnel", "shift": 2.0}})
    assert m.funnel.kind is WarpKind.HYPERBOLIC_FUNNEL
    assert m.cusp.kind is WarpKind.CONSTANT_ONE
    with pytest.raises(InputError):
        construct(ModelSurface, {"n": 2, "genus": 1})
    with pytest.raises(InputError):
        construct(ModelSurface, {"n": "two"})


def test_read_from_file(tmp_path):
    path = tmp_path / "model.toml"
    path.write_text('theta = 0.4\n[cross_section]\ncircle_length = 2.0\n')
    m = read_from_file(ModelSurface, path)
    assert m.theta == 0.4 and m.cross_section.circle_length == 2.0

    with pytest.raises(ConfigError):
        read_from_file(ModelSurface, tmp_path / "missing.toml")
    with pytest.raises(ConfigError):
        read_from_file(ModelSurface, path, "surface")
