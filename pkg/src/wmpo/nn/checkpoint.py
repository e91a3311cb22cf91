"""Binary checkpoint container for parameter stores.

Layout (little-endian): magic ``WMPOCKPT``, version u16, entry count u32,
then per entry: name length u32, UTF-8 name, rank u32, dims u32 each, raw
float64 values. Optimizer and EMA state ride along under reserved name
prefixes so a resumed run continues bit-identically.
"""

from __future__ import annotations

import struct

import numpy as np

from .optim import ParamStore

MAGIC = b"WMPOCKPT"
VERSION = 1

OPT_M = "opt.m:"
OPT_V = "opt.v:"
EMA = "ema:"
META = "meta:"
STEP_KEY = "opt.step"
RESERVED = (OPT_M, OPT_V, EMA, META, STEP_KEY)


class CheckpointError(ValueError):
    pass


def _write_entry(f, name: str, arr: np.ndarray) -> None:
    raw = name.encode("utf-8")
    f.write(struct.pack("<I", len(raw)))
    f.write(raw)
    f.write(struct.pack("<I", arr.ndim))
    for d in arr.shape:
        f.write(struct.pack("<I", d))
    f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise CheckpointError(f"truncated checkpoint while reading {what} at offset {f.tell()}")
    return buf


def _read_entry(f) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<I", _read_exact(f, 4, "name length"))
    name = _read_exact(f, name_len, "name").decode("utf-8")
    (rank,) = struct.unpack("<I", _read_exact(f, 4, f"rank of {name!r}"))
    dims = [struct.unpack("<I", _read_exact(f, 4, f"dims of {name!r}"))[0] for _ in range(rank)]
    count = int(np.prod(dims)) if dims else 1
    raw = _read_exact(f, count * 8, f"values of {name!r}")
    arr = np.frombuffer(raw, dtype="<f8").reshape(dims)
    return name, arr.copy()


def save_checkpoint(path, store: ParamStore, meta: dict[str, float] | None = None) -> None:
    entries: list[tuple[str, np.ndarray]] = []
    for name, p in store.params.items():
        entries.append((name, p.data))
    for name in store.params:
        entries.append((OPT_M + name, store.m[name]))
        entries.append((OPT_V + name, store.v[name]))
    if store.ema is not None:
        for name in store.params:
            entries.append((EMA + name, store.ema[name]))
        entries.append((META + "ema_decay", np.asarray(store.ema_decay)))
    entries.append((STEP_KEY, np.asarray(float(store.step_count))))
    for key, value in (meta or {}).items():
        entries.append((META + key, np.asarray(float(value))))

    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", VERSION))
        f.write(struct.pack("<I", len(entries)))
        for name, arr in entries:
            _write_entry(f, name, arr)


def load_checkpoint(path) -> tuple[ParamStore, dict[str, float]]:
    """Rebuild a ParamStore (with optimizer/EMA state) plus the meta scalars."""
    with open(path, "rb") as f:
        magic = _read_exact(f, len(MAGIC), "magic")
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}")
        (version,) = struct.unpack("<H", _read_exact(f, 2, "version"))
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        (count,) = struct.unpack("<I", _read_exact(f, 4, "entry count"))
        raw_entries = dict(_read_entry(f) for _ in range(count))
        if f.read(1):
            raise CheckpointError("trailing bytes after final entry")

    meta = {name[len(META):]: float(arr.reshape(()))
            for name, arr in raw_entries.items() if name.startswith(META)}
    ema_decay = meta.pop("ema_decay", None)

    store = ParamStore(ema_decay=ema_decay)
    for name, arr in raw_entries.items():
        if name.startswith(RESERVED):
            continue
        store.add(name, arr)
        for prefix, slot in ((OPT_M, store.m), (OPT_V, store.v)):
            state = raw_entries.get(prefix + name)
            if state is not None:
                if state.shape != arr.shape:
                    raise CheckpointError(f"optimizer state shape mismatch for {name!r}")
                slot[name] = state
        if store.ema is not None:
            shadow = raw_entries.get(EMA + name)
            if shadow is not None:
                store.ema[name] = shadow
    if STEP_KEY in raw_entries:
        store.step_count = int(raw_entries[STEP_KEY].reshape(()))
    return store, meta
