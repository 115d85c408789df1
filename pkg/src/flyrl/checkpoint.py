"""Binary learner checkpoints.

Layout (all integers little-endian)::

    magic     8 bytes  b"FLYRLCK\\0"
    version   uint32
    hdr_len   uint64
    header    JSON (config echo, counters, RNG states, array manifest)
    arrays    raw little-endian array data, in manifest order
    crc32     uint32 over everything above

Loading validates the whole file before touching the learner, so a failed
load never leaves partial state behind.
"""
from __future__ import annotations

import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import (CheckpointError, CheckpointVersionError, CorruptCheckpointError,
                     TruncatedCheckpointError)
from .td3 import NET_NAMES, TD3

MAGIC = b"FLYRLCK\0"
VERSION = 1
_PRE = struct.Struct("<8sIQ")
_CRC = struct.Struct("<I")


def _le(a):
    a = np.ascontiguousarray(a)
    return a.astype(a.dtype.newbyteorder("<"), copy=False)


def learner_arrays(agent: TD3, include_buffer=True):
    arrays = {}
    for name in NET_NAMES:
        for i, p in enumerate(agent.networks()[name].params):
            arrays[f"{name}/{i}"] = p
    for name, opt in agent.optimizers().items():
        for i, (m, v) in enumerate(zip(opt.m, opt.v)):
            arrays[f"adam/{name}/m{i}"] = m
            arrays[f"adam/{name}/v{i}"] = v
    buf = agent.buffer
    if include_buffer and buf._alloc:
        for f in ("s", "a", "r", "s2", "d"):
            arrays[f"buffer/{f}"] = getattr(buf, f)
    return arrays


def save_checkpoint(path, agent: TD3, config_text: str = "", counters: dict | None = None,
                    include_buffer=True, extra_rng: dict | None = None):
    """Write atomically: a temporary file is renamed over ``path``."""
    arrays = learner_arrays(agent, include_buffer)
    manifest, blobs, offset = [], [], 0
    for name, a in arrays.items():
        data = _le(a).tobytes()
        manifest.append({"name": name, "dtype": _le(a).dtype.str, "shape": list(a.shape),
                         "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    buf = agent.buffer
    header = {
        "config": config_text,
        "counters": counters or {},
        "learner": {"iteration": agent.iteration, "env_steps": agent.env_steps,
                    "obs_dim": agent.obs_dim, "act_dim": agent.act_dim,
                    "adam_t": {n: o.t for n, o in agent.optimizers().items()},
                    "buffer": {"alloc": buf._alloc, "size": buf.size, "ptr": buf.ptr,
                               "total": buf.total, "included": include_buffer and buf._alloc > 0}},
        "rng": agent.rngs.get_state(),
        "extra_rng": extra_rng or {},
        "arrays": manifest,
    }
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    body = _PRE.pack(MAGIC, VERSION, len(hdr)) + hdr + b"".join(blobs)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(body)
        fh.write(_CRC.pack(zlib.crc32(body) & 0xFFFFFFFF))
    os.replace(tmp, path)


def read_checkpoint(path):
    """Parse and verify a checkpoint; returns ``(header, arrays)``."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from None
    if len(raw) < _PRE.size:
        if MAGIC.startswith(raw[:len(MAGIC)]):
            raise TruncatedCheckpointError(f"{path}: file ends inside the preamble")
        raise CorruptCheckpointError(f"{path}: not a checkpoint (bad magic)")
    magic, version, hlen = _PRE.unpack_from(raw)
    if magic != MAGIC:
        raise CorruptCheckpointError(f"{path}: not a checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointVersionError(f"{path}: format version {version}, expected {VERSION}")
    hend = _PRE.size + hlen
    if len(raw) < hend:
        raise TruncatedCheckpointError(f"{path}: file ends inside the header")
    try:
        header = json.loads(raw[_PRE.size:hend].decode("utf-8"))
        manifest = header["arrays"]
        data_len = sum(int(m["nbytes"]) for m in manifest)
    except (ValueError, KeyError, TypeError) as e:
        raise CorruptCheckpointError(f"{path}: unreadable header ({e})") from None
    end = hend + data_len
    if len(raw) < end + _CRC.size:
        raise TruncatedCheckpointError(f"{path}: expected {end + _CRC.size} bytes, got {len(raw)}")
    if len(raw) > end + _CRC.size:
        raise CorruptCheckpointError(f"{path}: trailing bytes after checksum")
    (crc,) = _CRC.unpack_from(raw, end)
    if crc != zlib.crc32(raw[:end]) & 0xFFFFFFFF:
        raise CorruptCheckpointError(f"{path}: checksum mismatch")
    arrays = {}
    for m in manifest:
        start = hend + int(m["offset"])
        a = np.frombuffer(raw, dtype=np.dtype(m["dtype"]), count=int(np.prod(m["shape"])),
                          offset=start).reshape(m["shape"])
        arrays[m["name"]] = a.astype(a.dtype.newbyteorder("="))
    return header, arrays


def load_checkpoint(path, agent: TD3):
    """Restore ``agent`` in place; returns the header (config echo, counters)."""
    header, arrays = read_checkpoint(path)
    lh = header["learner"]
    if (lh["obs_dim"], lh["act_dim"]) != (agent.obs_dim, agent.act_dim):
        raise CheckpointError("checkpoint observation/action sizes do not match the learner")
    nets = agent.networks()
    staged = {}
    for name in NET_NAMES:
        n = len(nets[name].params)
        try:
            staged[name] = [arrays[f"{name}/{i}"] for i in range(n)]
        except KeyError:
            raise CheckpointError(f"checkpoint lacks parameters for {name}") from None
        for p, q in zip(nets[name].params, staged[name]):
            if p.shape != q.shape:
                raise CheckpointError(f"{name}: network layout differs from the checkpoint")
    try:
        adam = {name: ([np.array(arrays[f"adam/{name}/m{i}"]) for i in range(len(o.m))],
                       [np.array(arrays[f"adam/{name}/v{i}"]) for i in range(len(o.v))],
                       int(lh["adam_t"][name]))
                for name, o in agent.optimizers().items()}
        b = lh["buffer"]
        bufs = ({f: np.array(arrays[f"buffer/{f}"], dtype=agent.buffer.dtype)
                 for f in ("s", "a", "r", "s2", "d")} if b["included"] else None)
    except KeyError as e:
        raise CorruptCheckpointError(f"checkpoint lacks entry {e}") from None
    # everything validated; now mutate
    for name in NET_NAMES:
        nets[name].set_params(staged[name])
    for name, opt in agent.optimizers().items():
        opt.m, opt.v, opt.t = adam[name]
    agent.iteration = int(lh["iteration"])
    agent.env_steps = int(lh["env_steps"])
    buf = agent.buffer
    if bufs is not None:
        for f, a in bufs.items():
            setattr(buf, f, a)
        buf._alloc = int(b["alloc"])
        buf.size, buf.ptr, buf.total = int(b["size"]), int(b["ptr"]), int(b["total"])
    agent.rngs.set_state(header["rng"])
    return header
