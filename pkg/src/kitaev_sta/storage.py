"""Binary container for many-body states and spectrum tables.

Layout (all little-endian)::

    offset  size  field
    0       4     magic b"KSTA"
    4       2     version (uint16, = 1)
    6       1     kind (uint8): 0 = state, 1 = spectrum
    7       1     dtype (uint8): 0 = complex64, 1 = complex128
    8       2     n_sites (uint16)
    10      1     boundary (uint8): 0 = PBC, 1 = OBC
    11      1     parity (uint8): 0 = even, 1 = odd, 2 = mixed
    12      8     mu (float64)
    20      4     n_rows (uint32)
    24      4     n_cols (uint32)
    28      ...   payload

State payload: ``n_rows`` amplitudes (n_rows = 2^N, n_cols = 1).

Spectrum payload, in order: ``n_cols`` eigenvalues (float64), ``n_cols`` parity
codes (uint8), ``n_rows`` basis indices (uint64), then the eigenvector matrix
of shape (n_rows, n_cols) in row-major order. Column ``j`` is the eigenvector
of eigenvalue ``j``; row ``i`` refers to basis index ``basis[i]``.
"""
import struct

import numpy as np

from .ed import ManyBodyState, SpectrumTable
from .model import Boundary

MAGIC = b"KSTA"
VERSION = 1
_HEADER = struct.Struct("<4sHBBHBBdII")
_DTYPES = {0: np.dtype("<c8"), 1: np.dtype("<c16")}
_BOUNDARY = {Boundary.PBC: 0, Boundary.OBC: 1}
_PARITY = {"even": 0, "odd": 1, "mixed": 2}


class ContainerError(ValueError):
    pass


def _dtype_code(single):
    return 0 if single else 1


def save_state(path, state: ManyBodyState, mu=float("nan"), boundary=Boundary.PBC, single=False):
    code = _dtype_code(single)
    amps = state.amplitudes.astype(_DTYPES[code])
    header = _HEADER.pack(MAGIC, VERSION, 0, code, state.n_sites, _BOUNDARY[Boundary(boundary)],
                          _PARITY[state.parity], float(mu), amps.size, 1)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(amps.tobytes())


def save_spectrum(path, spec: SpectrumTable, single=False):
    code = _dtype_code(single)
    n_rows, n_cols = spec.eigenvectors.shape
    parities = set(spec.parities.tolist())
    parity = parities.pop() if len(parities) == 1 else "mixed"
    boundary = Boundary(spec.boundary) if spec.boundary is not None else Boundary.PBC
    header = _HEADER.pack(MAGIC, VERSION, 1, code, spec.n_sites, _BOUNDARY[boundary],
                          _PARITY[parity], float(spec.mu), n_rows, n_cols)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asarray(spec.eigenvalues, dtype="<f8").tobytes())
        fh.write(np.array([_PARITY[p] for p in spec.parities], dtype="u1").tobytes())
        fh.write(np.asarray(spec.basis_indices, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(spec.eigenvectors, dtype=_DTYPES[code]).tobytes())


def _read_header(buf):
    if len(buf) < _HEADER.size:
        raise ContainerError("file too short for header")
    magic, version, kind, code, n, bnd, par, mu, rows, cols = _HEADER.unpack_from(buf)
    if magic != MAGIC or version != VERSION or code not in _DTYPES:
        raise ContainerError("not a version-1 KSTA container")
    boundary = {v: k for k, v in _BOUNDARY.items()}[bnd]
    parity = {v: k for k, v in _PARITY.items()}[par]
    return dict(kind=kind, dtype=_DTYPES[code], n_sites=n, boundary=boundary,
                parity=parity, mu=mu, n_rows=rows, n_cols=cols)


def load(path):
    """Read a container; returns ``(object, header_dict)``."""
    with open(path, "rb") as fh:
        buf = fh.read()
    h = _read_header(buf)
    off = _HEADER.size
    rows, cols, dt = h["n_rows"], h["n_cols"], h["dtype"]
    if h["kind"] == 0:
        amps = np.frombuffer(buf, dtype=dt, count=rows, offset=off).astype(complex)
        if dt.itemsize == 8:
            # single precision: restore the norm lost to rounding
            amps = amps / np.linalg.norm(amps)
        return ManyBodyState(amps, h["n_sites"], h["parity"]), h
    vals = np.frombuffer(buf, dtype="<f8", count=cols, offset=off)
    off += 8 * cols
    pars = np.frombuffer(buf, dtype="u1", count=cols, offset=off)
    off += cols
    basis = np.frombuffer(buf, dtype="<u8", count=rows, offset=off).astype(np.int64)
    off += 8 * rows
    vecs = np.frombuffer(buf, dtype=dt, count=rows * cols, offset=off).reshape(rows, cols)
    names = np.array(["even", "odd", "mixed"])[pars]
    spec = SpectrumTable(vals.copy(), vecs.astype(complex), names, basis, h["n_sites"],
                         h["mu"], h["boundary"])
    return spec, h
