"""Self-describing text format for synthesized pulses.

The file is a JSON document.  Every float is written with 17 significant
digits so that reading it back reproduces the numbers bit for bit, and
writing a file that was just read produces identical bytes.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import PulseEnvelope, make_uniform_grid

__all__ = [
    "FORMAT_NAME",
    "FORMAT_VERSION",
    "PulseFile",
    "PulseFileError",
    "dumps",
    "loads",
    "read_pulse_file",
    "write_pulse_file",
    "atomic_write_text",
]

FORMAT_NAME = "mspulse-pulse"
FORMAT_VERSION = 1


class PulseFileError(ValueError):
    """Malformed or unsupported pulse file."""


@dataclass(frozen=True, eq=False)
class PulseFile:
    loops: int
    tau_s: float
    delta_rad_per_s: float
    c: float
    n: int
    omega_rad_per_s: np.ndarray
    orientation: int
    provenance: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @classmethod
    def from_pulse(cls, pulse: PulseEnvelope, provenance: dict | None = None) -> "PulseFile":
        return cls(
            loops=int(pulse.loops),
            tau_s=float(pulse.tau),
            delta_rad_per_s=float(pulse.delta),
            c=float(pulse.c),
            n=int(pulse.grid.n),
            omega_rad_per_s=np.array(pulse.omega, dtype=float),
            orientation=int(pulse.orientation),
            provenance=dict(provenance or {}),
        )

    def to_pulse(self) -> PulseEnvelope:
        grid = make_uniform_grid(self.tau_s, self.n)
        return PulseEnvelope(
            grid,
            self.omega_rad_per_s,
            self.delta_rad_per_s,
            self.loops,
            c=self.c,
            orientation=self.orientation,
        )


def _fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise PulseFileError(f"cannot serialize non-finite value {x}")
    return f"{x:.16e}"


def _emit(value, indent: int) -> str:
    pad = "  " * indent
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _fmt_float(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        inner = ",\n".join(pad + "  " + _emit(v, indent + 1) for v in value)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = ",\n".join(
            pad + "  " + json.dumps(str(k)) + ": " + _emit(v, indent + 1) for k, v in value.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    raise PulseFileError(f"cannot serialize {type(value).__name__}")


def dumps(pf: PulseFile) -> str:
    doc = {
        "format": FORMAT_NAME,
        "format_version": pf.format_version,
        "loops": pf.loops,
        "tau_s": float(pf.tau_s),
        "delta_rad_per_s": float(pf.delta_rad_per_s),
        "c": float(pf.c),
        "n": pf.n,
        "orientation": pf.orientation,
        "provenance": pf.provenance,
        "omega_rad_per_s": np.asarray(pf.omega_rad_per_s, dtype=float),
    }
    return _emit(doc, 0) + "\n"


def loads(text: str) -> PulseFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PulseFileError(f"not a pulse file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise PulseFileError("missing or wrong 'format' marker")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise PulseFileError(f"unsupported format_version {version!r}")
    try:
        omega = np.array(doc["omega_rad_per_s"], dtype=float)
        pf = PulseFile(
            loops=int(doc["loops"]),
            tau_s=float(doc["tau_s"]),
            delta_rad_per_s=float(doc["delta_rad_per_s"]),
            c=float(doc["c"]),
            n=int(doc["n"]),
            omega_rad_per_s=omega,
            orientation=int(doc["orientation"]),
            provenance=doc.get("provenance", {}),
            format_version=version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PulseFileError(f"bad pulse file field: {exc}") from exc
    if omega.shape != (pf.n,):
        raise PulseFileError(f"expected {pf.n} amplitudes, found {omega.size}")
    return pf


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_pulse_file(pf: PulseFile, path) -> None:
    atomic_write_text(path, dumps(pf))


def read_pulse_file(path) -> PulseFile:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
