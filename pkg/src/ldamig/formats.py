"""Binary and text file formats: projection matrices and IQ cubes.

``MIGW1`` projection file::

    b"MIGW1" | N:u32 | M:u32 | measure:u8 | W (N*M complex, f64 re/im, column-major) | seed:u64

All integers and floats are little-endian. Measure tags are 0 airm, 1 lem,
2 jbld, 3 skld.

``MIGIQ1`` IQ cube::

    b"MIGIQ1" | P:u32 | C:u32 | P*C complex (f32 re/im), pulse-major

so sample ``(p, c)`` sits at flat index ``p * C + c``. Small cubes may also
be stored as CSV with columns ``pulse,cell,re,im``.
"""
import csv
import io
import struct
from pathlib import Path

import numpy as np

from .lda import Projection
from .measures import Measure

W_MAGIC = b"MIGW1"
IQ_MAGIC = b"MIGIQ1"
MEASURE_TAGS = {Measure.AIRM: 0, Measure.LEM: 1, Measure.JBLD: 2, Measure.SKLD: 3}
_TAG_MEASURES = {v: k for k, v in MEASURE_TAGS.items()}


class FormatError(ValueError):
    pass


def projection_to_bytes(proj):
    W = np.asarray(proj.W, dtype=np.complex128)
    N, M = W.shape
    seed = int(proj.train_meta.get("seed", 0)) & 0xFFFFFFFFFFFFFFFF
    head = W_MAGIC + struct.pack("<IIB", N, M, MEASURE_TAGS[proj.measure])
    body = W.astype("<c16").tobytes(order="F")
    return head + body + struct.pack("<Q", seed)


def projection_from_bytes(data):
    data = bytes(data)
    if data[:5] != W_MAGIC:
        raise FormatError("not a MIGW1 file")
    N, M, tag = struct.unpack_from("<IIB", data, 5)
    if tag not in _TAG_MEASURES:
        raise FormatError(f"unknown measure tag {tag}")
    start = 5 + 9
    stop = start + 16 * N * M
    if len(data) != stop + 8:
        raise FormatError(f"MIGW1 size mismatch: expected {stop + 8} bytes, got {len(data)}")
    W = np.frombuffer(data[start:stop], dtype="<c16").reshape((N, M), order="F")
    (seed,) = struct.unpack_from("<Q", data, stop)
    return Projection(W.astype(np.complex128), _TAG_MEASURES[tag], {"seed": seed})


def save_projection(proj, path):
    Path(path).write_bytes(projection_to_bytes(proj))


def load_projection(path):
    return projection_from_bytes(Path(path).read_bytes())


def write_iq(cube, path):
    """Write a (pulses, cells) complex cube as MIGIQ1."""
    cube = np.asarray(cube)
    if cube.ndim != 2:
        raise FormatError("IQ cube must be 2-D (pulses, cells)")
    P, C = cube.shape
    body = np.ascontiguousarray(cube, dtype="<c8").tobytes()
    Path(path).write_bytes(IQ_MAGIC + struct.pack("<II", P, C) + body)


def read_iq(path):
    """Read a MIGIQ1 file into a complex128 array of shape (pulses, cells)."""
    data = Path(path).read_bytes()
    if data[:6] != IQ_MAGIC:
        raise FormatError("not a MIGIQ1 file")
    P, C = struct.unpack_from("<II", data, 6)
    body = data[14:]
    if len(body) != 8 * P * C:
        raise FormatError(f"MIGIQ1 size mismatch: {P}x{C} needs {8 * P * C} bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<c8").reshape(P, C).astype(np.complex128)


def write_iq_csv(cube, path):
    cube = np.asarray(cube)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pulse", "cell", "re", "im"])
        for (p, c), v in np.ndenumerate(cube):
            w.writerow([p, c, repr(float(v.real)), repr(float(v.imag))])


def read_iq_csv(path):
    """Read a ``pulse,cell,re,im`` CSV; every (pulse, cell) must appear once."""
    text = Path(path).read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise FormatError("empty IQ CSV")
    missing = {"pulse", "cell", "re", "im"} - set(rows[0])
    if missing:
        raise FormatError(f"IQ CSV lacks columns {sorted(missing)}")
    p = np.array([int(r["pulse"]) for r in rows])
    c = np.array([int(r["cell"]) for r in rows])
    v = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
    P, C = p.max() + 1, c.max() + 1
    if len(rows) != P * C or len(set(zip(p, c))) != P * C:
        raise FormatError("IQ CSV does not cover every (pulse, cell) exactly once")
    cube = np.empty((P, C), dtype=complex)
    cube[p, c] = v
    return cube


def load_iq(path):
    """Dispatch on the file signature: MIGIQ1 binary or CSV."""
    with open(path, "rb") as fh:
        head = fh.read(6)
    return read_iq(path) if head == IQ_MAGIC else read_iq_csv(path)


def cube_to_samples(cube, N, stride=None):
    """Cut each range cell's pulse train into length-N sample vectors.

    Returns an array of shape (cells, windows, N), windows taken every
    ``stride`` pulses (default ``N``, non-overlapping).
    """
    cube = np.asarray(cube)
    P = cube.shape[0]
    stride = stride or N
    if P < N:
        raise FormatError(f"cube has {P} pulses, fewer than N={N}")
    starts = np.arange(0, P - N + 1, stride)
    idx = starts[:, None] + np.arange(N)[None, :]
    return np.transpose(cube[idx], (2, 0, 1))
