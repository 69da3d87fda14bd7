"""File formats: spectral field binaries, trajectory folders, CSV/JSON outputs.

Field container layout (documented contract, version 1):

    bytes 0..5    magic  b"PHNLS\\x00"
    bytes 6..9    little-endian uint32 header length H
    bytes 10..    H bytes of UTF-8 JSON header with keys
                  {"version", "endianness", "Lx", "Nx", "K", "quad_nodes",
                   "dtype"}
    then          Nx*K little-endian complex128 values (two float64 each),
                  row-major c[j, k] with j in FFT order.

CSV numbers use Python's shortest round-trip repr (17 significant digits
when needed), so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import os
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument, ShapeError
from .spectral import BasisSpec, SpectralField, Trajectory, make_spec

__all__ = [
    "write_field",
    "read_field",
    "write_trajectory",
    "read_trajectory",
    "write_csv",
    "read_csv",
    "write_json",
    "format_float",
]

_MAGIC = b"PHNLS\x00"
_FORMAT_VERSION = 1


@lru_cache(maxsize=32)
def _cached_spec(Lx: float, Nx: int, K: int, n: int) -> BasisSpec:
    return make_spec(Lx=Lx, Nx=Nx, K=K, quad_nodes=n)


def write_field(path, field: SpectralField) -> None:
    spec = field.spec
    header = {
        "version": _FORMAT_VERSION,
        "endianness": "little",
        "Lx": spec.Lx,
        "Nx": spec.Nx,
        "K": spec.K,
        "quad_nodes": spec.basis.rule.n,
        "dtype": "complex128",
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        fh.write(np.ascontiguousarray(field.c, dtype="<c16").tobytes())


def read_field(path) -> SpectralField:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise InvalidArgument(f"{path} is not a spectral field container")
        hlen = int.from_bytes(fh.read(4), "little")
        header = json.loads(fh.read(hlen).decode())
        if header.get("version") != _FORMAT_VERSION:
            raise InvalidArgument(f"unsupported container version {header.get('version')}")
        spec = _cached_spec(header["Lx"], header["Nx"], header["K"], header["quad_nodes"])
        raw = fh.read()
    c = np.frombuffer(raw, dtype="<c16")
    if c.size != spec.Nx * spec.K:
        raise ShapeError(f"payload holds {c.size} values, expected {spec.Nx * spec.K}")
    return SpectralField(spec, c.reshape(spec.Nx, spec.K).astype(complex))


def write_trajectory(directory, traj: Trajectory, manifest_extra: dict | None = None) -> None:
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "format_version": _FORMAT_VERSION,
        "t0": traj.t0,
        "dt": traj.dt,
        "frames": traj.nframes,
        "frame_pattern": "frame_{:06d}.sfb",
    }
    if manifest_extra:
        manifest.update(manifest_extra)
    for i in range(traj.nframes):
        write_field(os.path.join(directory, f"frame_{i:06d}.sfb"), traj.frame(i))
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_trajectory(directory) -> Trajectory:
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    frames = []
    spec = None
    for i in range(manifest["frames"]):
        f = read_field(os.path.join(directory, manifest["frame_pattern"].format(i)))
        spec = f.spec
        frames.append(f.c)
    return Trajectory(spec, manifest["t0"], manifest["dt"], np.stack(frames))


def format_float(x) -> str:
    """Shortest decimal that round-trips the float64 exactly."""
    return repr(float(x))


def write_csv(path, columns: dict) -> None:
    """Write named columns (equal-length 1D arrays) deterministically."""
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ShapeError("CSV columns must have equal length")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(length):
            fh.write(",".join(format_float(a[i]) for a in arrays) + "\n")


def read_csv(path) -> dict:
    with open(path) as fh:
        names = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return {
        name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(names)
    }


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
