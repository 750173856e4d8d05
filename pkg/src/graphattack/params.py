"""Named-tensor parameter stores and their binary checkpoint format.

Checkpoint layout (version ``ntc1``): an ascii header per tensor
(``tensor <name> <dims...>``) followed by raw little-endian float64 bytes,
plus ``meta <key> <value>`` lines for small string metadata. Round-trips
are bit-exact.
"""

from __future__ import annotations

import numpy as np

_MAGIC = b"ntc1\n"


class ParamStore:
    """Ordered mapping of names to float64 tensors with fixed shapes."""

    def __init__(self, tensors=None):
        self._tensors = {}
        for name, arr in (tensors or {}).items():
            self._tensors[name] = np.ascontiguousarray(arr, dtype=np.float64)

    def __getitem__(self, name):
        return self._tensors[name]

    def __setitem__(self, name, arr):
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        if name in self._tensors and self._tensors[name].shape != arr.shape:
            raise ValueError(f"shape of {name!r} is fixed at {self._tensors[name].shape}")
        self._tensors[name] = arr

    def __contains__(self, name):
        return name in self._tensors

    def __iter__(self):
        return iter(self._tensors)

    def __len__(self):
        return len(self._tensors)

    def items(self):
        return self._tensors.items()

    def names(self):
        return list(self._tensors)

    def copy(self):
        return ParamStore({k: v.copy() for k, v in self._tensors.items()})

    def zeros_like(self):
        return ParamStore({k: np.zeros_like(v) for k, v in self._tensors.items()})

    def allclose(self, other, **kw):
        return self.names() == other.names() and all(
            np.allclose(v, other[k], **kw) for k, v in self.items()
        )


def save_params(path, params, meta=None):
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        for key, value in (meta or {}).items():
            line = f"meta {key} {value}"
            if "\n" in line:
                raise ValueError("meta entries must be single-line")
            fh.write(line.encode() + b"\n")
        for name, arr in params.items():
            dims = " ".join(str(d) for d in arr.shape)
            fh.write(f"tensor {name} {dims}".encode() + b"\n")
            fh.write(arr.astype("<f8").tobytes(order="C"))
        fh.write(b"end\n")


def load_params(path):
    """Returns (ParamStore, meta dict)."""
    tensors = {}
    meta = {}
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        while True:
            line = b""
            while not line.endswith(b"\n"):
                ch = fh.read(1)
                if not ch:
                    raise ValueError("truncated checkpoint")
                line += ch
            parts = line.decode().split()
            if parts[0] == "end":
                break
            if parts[0] == "meta":
                meta[parts[1]] = line.decode().split(None, 2)[2].rstrip("\n")
            elif parts[0] == "tensor":
                name = parts[1]
                shape = tuple(int(d) for d in parts[2:])
                count = int(np.prod(shape)) if shape else 1
                raw = fh.read(count * 8)
                if len(raw) != count * 8:
                    raise ValueError("truncated tensor payload")
                tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            else:
                raise ValueError(f"unknown checkpoint record: {parts[0]!r}")
    return ParamStore(tensors), meta
