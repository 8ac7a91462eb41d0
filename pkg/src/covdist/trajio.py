"""Binary trajectory files and CSV tables with metadata headers.

Binary layout (little endian)::

    offset  size  field
    0       4     magic b"CVTJ"
    4       4     format version (u32)
    8       4     channel tag (u32): 0 velocity, 1 position, 2 dipole
    12      8     particle count (u64)
    20      8     frame count (u64)
    28      8     dt (f64), integrator timestep
    36      8     sample stride (u64), integrator steps per frame
    44      20    reserved, zero
    64      ...   frames: float64[frames][particles][3]
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .timeseries import Channel

MAGIC = b"CVTJ"
VERSION = 1
HEADER = struct.Struct("<4sIIQQdQ20x")
assert HEADER.size == 64


@dataclass(frozen=True)
class TrajectoryHeader:
    channel: Channel
    n_particles: int
    n_frames: int
    dt: float
    sample_stride: int = 1
    version: int = VERSION

    @property
    def frame_interval(self) -> float:
        return self.dt * self.sample_stride

    def pack(self) -> bytes:
        return HEADER.pack(MAGIC, self.version, int(self.channel), self.n_particles,
                           self.n_frames, self.dt, self.sample_stride)

    @classmethod
    def unpack(cls, raw: bytes) -> "TrajectoryHeader":
        if len(raw) < HEADER.size:
            raise FormatError("truncated header", position="byte 0")
        magic, version, chan, n_part, n_frames, dt, stride = HEADER.unpack(raw[: HEADER.size])
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}", position="byte 0")
        if version != VERSION:
            raise FormatError(f"unsupported format version {version}", position="byte 4")
        try:
            channel = Channel(chan)
        except ValueError:
            raise FormatError(f"unknown channel tag {chan}", position="byte 8") from None
        if n_part < 1:
            raise FormatError("particle count must be positive", position="byte 12")
        if not (np.isfinite(dt) and dt > 0):
            raise FormatError(f"invalid dt {dt}", position="byte 28")
        if stride < 1:
            raise FormatError("sample stride must be positive", position="byte 36")
        return cls(channel, n_part, n_frames, dt, stride, version)


class TrajectoryWriter:
    """Append frames to a binary trajectory; the frame count is patched on close."""

    def __init__(self, path, channel, n_particles: int, dt: float, sample_stride: int = 1):
        self.path = os.fspath(path)
        self.header = TrajectoryHeader(Channel.parse(channel), n_particles, 0, dt, sample_stride)
        self._fh = open(self.path, "wb")
        self._fh.write(self.header.pack())
        self.n_frames = 0

    def write(self, frame: np.ndarray):
        frame = np.ascontiguousarray(frame, dtype="<f8")
        if frame.shape != (self.header.n_particles, 3):
            raise ValueError(f"frame shape {frame.shape} != ({self.header.n_particles}, 3)")
        self._fh.write(frame.tobytes())
        self.n_frames += 1

    def close(self):
        if self._fh.closed:
            return
        self._fh.seek(0)
        h = self.header
        self._fh.write(TrajectoryHeader(h.channel, h.n_particles, self.n_frames, h.dt,
                                        h.sample_stride).pack())
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_trajectory(path, frames: np.ndarray, channel, dt: float, sample_stride: int = 1):
    frames = np.asarray(frames, dtype=np.float64)
    with TrajectoryWriter(path, channel, frames.shape[1], dt, sample_stride) as w:
        for f in frames:
            w.write(f)


def read_header(path) -> TrajectoryHeader:
    with open(path, "rb") as fh:
        return TrajectoryHeader.unpack(fh.read(HEADER.size))


def read_trajectory(source, mmap: bool = False):
    """Return ``(header, frames)`` with frames shaped (n_frames, n_particles, 3).

    ``source`` is a path or raw bytes. With ``mmap=True`` the frames are a
    read-only memory map instead of an in-memory copy.
    """
    if isinstance(source, (bytes, bytearray, memoryview)):
        raw = bytes(source)
        header = TrajectoryHeader.unpack(raw)
        body = raw[HEADER.size:]
        size = len(body)
    else:
        header = read_header(source)
        size = os.path.getsize(source) - HEADER.size
        body = None
    if header.n_frames == 0:
        raise FormatError("no records", position="byte 20")
    frame_bytes = header.n_particles * 3 * 8
    expected = header.n_frames * frame_bytes
    if size < expected:
        raise FormatError(
            f"file holds {size // frame_bytes} complete frames, header declares {header.n_frames}",
            position=f"frame {size // frame_bytes}")
    shape = (header.n_frames, header.n_particles, 3)
    if body is not None:
        frames = np.frombuffer(body, dtype="<f8", count=3 * header.n_particles * header.n_frames)
        frames = frames.reshape(shape).astype(np.float64)
    elif mmap:
        frames = np.memmap(source, dtype="<f8", mode="r", offset=HEADER.size, shape=shape)
    else:
        with open(source, "rb") as fh:
            fh.seek(HEADER.size)
            frames = np.fromfile(fh, dtype="<f8", count=3 * header.n_particles * header.n_frames)
        frames = frames.reshape(shape)
    if not mmap:
        bad = np.argwhere(~np.isfinite(frames))
        if bad.size:
            f, p, _ = bad[0]
            raise FormatError("non-finite value", position=f"frame {f}, particle {p}")
    return header, frames


# ---------------------------------------------------------------------------
# CSV tables with "# key: value" metadata lines

def _fmt(v) -> str:
    # repr is the shortest string that parses back to the same double
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, columns, rows, meta=None):
    """Write a CSV table; floats are printed so that they parse back exactly."""
    with open(path, "w", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {value}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_table(path, label_column=False):
    """Return ``(meta, columns, rows)``; cells that parse as floats are floats.

    With ``label_column`` the first cell of each row is kept as a string.
    """
    meta, columns, rows = {}, None, []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif columns is None:
                columns = line.split(",")
            else:
                cells = line.split(",")
                if len(cells) != len(columns):
                    raise FormatError(f"expected {len(columns)} fields, got {len(cells)}",
                                      position=f"line {lineno}")
                row = [_parse_cell(c) for c in cells]
                if label_column:
                    row[0] = cells[0]
                rows.append(row)
    if columns is None:
        raise FormatError("no records")
    return meta, columns, rows


def _parse_cell(cell: str):
    try:
        return float(cell)
    except ValueError:
        return cell


def write_matrix(path, matrix: np.ndarray, labels=None, meta=None):
    """Square or rectangular matrix; first column holds row labels."""
    matrix = np.asarray(matrix)
    labels = list(labels) if labels is not None else [str(i) for i in range(matrix.shape[0])]
    cols = ["label"] + (labels if matrix.shape[0] == matrix.shape[1] and len(labels) == matrix.shape[1]
                        else [f"c{j}" for j in range(matrix.shape[1])])
    write_table(path, cols, ([lab, *row] for lab, row in zip(labels, matrix)), meta)


def read_matrix(path):
    """Return ``(meta, labels, matrix)`` from :func:`write_matrix` output."""
    meta, _, rows = read_table(path, label_column=True)
    labels = [r[0] for r in rows]
    return meta, labels, np.array([r[1:] for r in rows], dtype=np.float64)
