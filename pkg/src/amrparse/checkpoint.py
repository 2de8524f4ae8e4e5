"""Binary checkpoint format.

Layout: magic ``S2G1``, format version (u32), length-prefixed config
text, length-prefixed JSON block (vocabularies plus pre/post tables),
then the named parameter tensors as (name, rank, extents, row-major
little-endian float64 data).  All integers are little-endian u64 unless
noted.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .config import Config, parse_config, render_config
from .embedding import Vocabularies
from .model import ParserModel
from .prepost import Tables

MAGIC = b"S2G1"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _write_block(fh, data: bytes):
    fh.write(struct.pack("<Q", len(data)))
    fh.write(data)


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError("truncated checkpoint")
    return data


def _read_block(fh) -> bytes:
    (n,) = struct.unpack("<Q", _read_exact(fh, 8))
    return _read_exact(fh, n)


def save_checkpoint(path, model: ParserModel, tables: Tables) -> None:
    side = {"vocabularies": model.vocabs.to_dict(), "tables": tables.to_dict()}
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        _write_block(fh, render_config(model.cfg).encode("utf-8"))
        _write_block(fh, json.dumps(side, sort_keys=True).encode("utf-8"))
        names = sorted(model.params)
        fh.write(struct.pack("<Q", len(names)))
        for name in names:
            arr = np.ascontiguousarray(model.params[name].data, dtype="<f8")
            _write_block(fh, name.encode("utf-8"))
            fh.write(struct.pack("<Q", arr.ndim))
            for extent in arr.shape:
                fh.write(struct.pack("<Q", extent))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> tuple:
    """Returns (ParserModel, Tables)."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"no such checkpoint: {path}")
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise CheckpointError("bad magic; not a checkpoint file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        cfg = parse_config(_read_block(fh).decode("utf-8"), base=Config())
        side = json.loads(_read_block(fh).decode("utf-8"))
        vocabs = Vocabularies.from_dict(side["vocabularies"])
        tables = Tables.from_dict(side["tables"])
        (count,) = struct.unpack("<Q", _read_exact(fh, 8))
        params = {}
        for _ in range(count):
            name = _read_block(fh).decode("utf-8")
            (rank,) = struct.unpack("<Q", _read_exact(fh, 8))
            shape = tuple(struct.unpack("<Q", _read_exact(fh, 8))[0] for _ in range(rank))
            n_values = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(_read_exact(fh, 8 * n_values), dtype="<f8")
            params[name] = ad.Tensor(data.reshape(shape).copy(), requires_grad=True)
        if fh.read(1):
            raise CheckpointError("trailing bytes after parameters")
    return ParserModel(cfg, vocabs, params), tables
