"""Binary snapshot format for spectral fields.

Layout (little-endian throughout):

* magic bytes ``RNS1``
* grid size M as uint32
* component count as uint8
* coefficients component-major, frequency axes in standard FFT order,
  each coefficient stored as two float64 values (re, im).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import GridSpec, SpectralField

MAGIC = b"RNS1"


def write_snapshot(path: str | Path, field: SpectralField) -> None:
    """Serialize a spectral field; output is byte-reproducible."""
    coeffs = field.coeffs
    ncomp = coeffs.shape[0]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", field.grid.size))
        fh.write(struct.pack("<B", ncomp))
        for c in range(ncomp):
            flat = np.ascontiguousarray(coeffs[c]).ravel()
            inter = np.empty(2 * flat.size, dtype="<f8")
            inter[0::2] = flat.real
            inter[1::2] = flat.imag
            fh.write(inter.tobytes())


def read_snapshot(path: str | Path) -> SpectralField:
    """Read a field written by write_snapshot; the hermitian flag is re-derived."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}; expected {MAGIC!r}")
        (m,) = struct.unpack("<I", fh.read(4))
        (ncomp,) = struct.unpack("<B", fh.read(1))
        if ncomp != 3:
            raise ValueError(f"expected 3 components, found {ncomp}")
        grid = GridSpec(int(m))
        coeffs = np.empty((ncomp, m, m, m), dtype=np.complex128)
        per_comp = 2 * m**3
        for c in range(ncomp):
            inter = np.frombuffer(fh.read(8 * per_comp), dtype="<f8")
            if inter.size != per_comp:
                raise ValueError("truncated snapshot file")
            coeffs[c] = (inter[0::2] + 1j * inter[1::2]).reshape(m, m, m)
    field = SpectralField(grid, coeffs, hermitian=True)
    if not field.is_hermitian():
        field = SpectralField(grid, coeffs, hermitian=False)
    return field
