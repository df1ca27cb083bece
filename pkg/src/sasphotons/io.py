"""Event-stream files, CSV tables and the experiment configuration file.

Event stream formats
--------------------
CSV
    Header line ``pulse_index,channel`` then one record per line, channel
    written as ``S`` or ``aS``.

Binary (``.bin``)
    16-byte header: the 8 ASCII bytes ``SASEVT01`` followed by the record
    count as a little-endian uint64.  Then ``count`` packed 9-byte records:
    pulse index as little-endian uint64 and one channel byte (0 = S, 1 = aS).

Neither format stores the pulse count or repetition rate; ``simulate``
writes them to a ``summary.json`` next to the stream.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import physics
from .constants import FS_TO_S, MHZ_TO_HZ, MW_TO_W
from .montecarlo import CHANNEL_NAMES, ChannelProbabilities, EventStream

MAGIC = b"SASEVT01"
HEADER_SIZE = 16
RECORD_DTYPE = np.dtype([("pulse", "<u8"), ("channel", "u1")])
assert RECORD_DTYPE.itemsize == 9

STREAM_CSV_HEADER = ["pulse_index", "channel"]
SPECTRUM_CSV_HEADER = ["shift_cm1", "intensity_cps"]
SPECTRAL_COLUMNS = ["shift_cm1", "corr_rate_cps", "uncertainty_cps"]
APERTURE_COLUMNS = ["radius_mm", "intensity"]
POWER_COLUMNS = ["power_w", "rate_cps", "uncertainty_cps"]
XSECTION_COLUMNS = ["a_raman_sq", "rate_cps", "uncertainty_cps"]


class DataError(ValueError):
    """Malformed input file."""


# -- event streams -----------------------------------------------------------

def write_stream_bin(stream: EventStream, path) -> None:
    rec = np.empty(len(stream), dtype=RECORD_DTYPE)
    rec["pulse"] = stream.pulses
    rec["channel"] = stream.channels
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(np.uint64(len(stream)).astype("<u8").tobytes())
        f.write(rec.tobytes())


def write_stream_csv(stream: EventStream, path, chunk: int = 1 << 18) -> None:
    names = np.array(CHANNEL_NAMES)
    with open(path, "w", newline="") as f:
        f.write(",".join(STREAM_CSV_HEADER) + "\n")
        for i in range(0, len(stream), chunk):
            p = stream.pulses[i:i + chunk]
            c = names[stream.channels[i:i + chunk]]
            f.write("".join(f"{a},{b}\n" for a, b in zip(p.tolist(), c.tolist())))


def write_stream(stream: EventStream, path, fmt: str) -> None:
    if fmt == "csv":
        write_stream_csv(stream, path)
    elif fmt == "bin":
        write_stream_bin(stream, path)
    else:
        raise ValueError(f"unknown stream format {fmt!r}")


def stream_format(path) -> str:
    with open(path, "rb") as f:
        head = f.read(len(MAGIC))
    return "bin" if head == MAGIC else "csv"


def _iter_bin(path, chunk_records: int):
    with open(path, "rb") as f:
        header = f.read(HEADER_SIZE)
        if len(header) != HEADER_SIZE or header[:8] != MAGIC:
            raise DataError(f"{path}: not a SASEVT01 stream")
        count = int(np.frombuffer(header[8:], dtype="<u8")[0])
        size = Path(path).stat().st_size
        if size != HEADER_SIZE + count * RECORD_DTYPE.itemsize:
            raise DataError(f"{path}: header says {count} records but file size is {size} bytes")
        remaining = count
        while remaining:
            n = min(chunk_records, remaining)
            rec = np.fromfile(f, dtype=RECORD_DTYPE, count=n)
            if np.any(rec["channel"] > 1):
                raise DataError(f"{path}: invalid channel code")
            yield rec["pulse"].astype(np.int64), rec["channel"].copy()
            remaining -= n


def _iter_csv(path, chunk_records: int):
    codes = {name: i for i, name in enumerate(CHANNEL_NAMES)}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != STREAM_CSV_HEADER:
            raise DataError(f"{path}:1: expected header 'pulse_index,channel'")
        pulses, chans = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                p, c = row
                pulses.append(int(p))
                chans.append(codes[c.strip()])
            except (ValueError, KeyError):
                raise DataError(f"{path}:{lineno}: malformed record {','.join(row)!r}") from None
            if len(pulses) >= chunk_records:
                yield np.array(pulses, np.int64), np.array(chans, np.uint8)
                pulses, chans = [], []
        if pulses:
            yield np.array(pulses, np.int64), np.array(chans, np.uint8)


def iter_stream_chunks(path, chunk_records: int = 1 << 20) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (pulses, channels) chunks from either stream format, checking order."""
    reader = _iter_bin if stream_format(path) == "bin" else _iter_csv
    last = -1
    for pulses, channels in reader(path, chunk_records):
        keys = pulses * 2 + channels
        if keys.size and (keys[0] <= last or np.any(np.diff(keys) <= 0)):
            raise DataError(f"{path}: records not strictly sorted by (pulse, channel)")
        if keys.size:
            last = int(keys[-1])
        yield pulses, channels


def read_stream(path, n_pulses: int | None = None, rep_rate: float = 76e6) -> EventStream:
    parts = list(iter_stream_chunks(path))
    pulses = np.concatenate([p for p, _ in parts]) if parts else np.empty(0, np.int64)
    channels = np.concatenate([c for _, c in parts]) if parts else np.empty(0, np.uint8)
    if n_pulses is None:
        n_pulses = int(pulses[-1]) + 1 if pulses.size else 0
    try:
        return EventStream(pulses, channels, n_pulses, rep_rate)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


# -- numeric tables ----------------------------------------------------------

def read_table(path, columns: list[str]) -> np.ndarray:
    """Read a headed numeric CSV with exactly ``columns``; errors carry line numbers."""
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != columns:
            raise DataError(f"{path}:1: expected header {','.join(columns)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(columns):
                raise DataError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value in {','.join(row)!r}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_table(path, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if not isinstance(v, str) else v for v in row])


def read_spectrum(path) -> physics.Spectrum:
    data = read_table(path, SPECTRUM_CSV_HEADER)
    try:
        return physics.Spectrum(data[:, 0], data[:, 1])
    except physics.ConfigError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_spectrum(spectrum: physics.Spectrum, path) -> None:
    write_table(path, SPECTRUM_CSV_HEADER, zip(spectrum.shifts, spectrum.intensities))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


# -- configuration -----------------------------------------------------------

# section -> key -> (target field, converter)
_SCHEMA = {
    "laser": {
        "wavelength_nm": ("wavelength", float),
        "pulse_width_fs": ("pulse_width", lambda v: float(v) * FS_TO_S),
        "rep_rate_mhz": ("rep_rate", lambda v: float(v) * MHZ_TO_HZ),
        "power_mw": ("power", lambda v: float(v) * MW_TO_W),
    },
    "material": {
        "preset": ("preset", str),
        "name": ("name", str),
        "spectrum_csv": ("spectrum_csv", str),
        "temperature_k": ("temperature", float),
        "cutoff_1st_cm1": ("cutoff_1st", float),
        "cutoff_2nd_cm1": ("cutoff_2nd", float),
        "stokes_area_1st_cps_cm1": ("area_1st", float),
        "stokes_area_2nd_cps_cm1": ("area_2nd", float),
        "coupling_c1_ev_cm_s": ("c1", float),
        "coupling_c2_ev_cm_s": ("c2", float),
    },
    "collection": {
        "mono_resolution_cm1": ("mono_resolution", float),
        "stokes_center_cm1": ("stokes_center", float),
        "efficiency_s": ("detection_efficiency_s", float),
        "efficiency_as": ("detection_efficiency_as", float),
        "accumulation_time_s": ("accumulation_time", float),
        "dark_rate_s_cps": ("dark_rate_s", float),
        "dark_rate_as_cps": ("dark_rate_as", float),
    },
    "simulation": {
        "n_pulses": ("n_pulses", int),
        "seed": ("seed", int),
        "max_delay_pulses": ("max_delay", int),
        "workers": ("workers", int),
        "p_s": ("p_s", float),
        "p_as": ("p_as", float),
        "p_pair": ("p_pair", float),
    },
    "outputs": {
        "directory": ("directory", str),
        "format": ("format", str),
    },
}


@dataclass
class SimulationConfig:
    n_pulses: int = 1_000_000
    seed: int = 0
    max_delay: int = 50
    workers: int = 1
    overrides: dict[str, float] = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    laser: physics.LaserConfig = field(default_factory=physics.LaserConfig)
    material: physics.MaterialModel = field(default_factory=physics.diamond)
    collection: physics.CollectionConfig = field(default_factory=physics.CollectionConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output_dir: str = "out"
    output_format: str = "csv"

    def probabilities(self) -> ChannelProbabilities:
        from .montecarlo import derive_probabilities

        derived = derive_probabilities(self.laser, self.material, self.collection)
        o = self.simulation.overrides
        return ChannelProbabilities(
            p_s=o.get("p_s", derived.p_s),
            p_as=o.get("p_as", derived.p_as),
            p_pair=o.get("p_pair", derived.p_pair),
        )


def _parse_sections(cp: configparser.ConfigParser, source: str) -> dict[str, dict]:
    out = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise physics.ConfigError(f"{source}: unknown section [{section}]")
        values = {}
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise physics.ConfigError(f"{source}: unknown key '{key}' in [{section}]")
            target, conv = _SCHEMA[section][key]
            try:
                values[target] = conv(raw.strip())
            except ValueError:
                raise physics.ConfigError(f"{source}: bad value for {section}.{key}: {raw!r}") from None
        out[section] = values
    return out


def _build_material(values: dict, base_dir: Path) -> physics.MaterialModel:
    preset = values.get("preset")
    if preset is not None and preset not in physics.MATERIALS:
        raise physics.ConfigError(f"unknown material preset {preset!r}; known: {sorted(physics.MATERIALS)}")
    base = physics.MATERIALS[preset]() if preset else None
    if "spectrum_csv" in values:
        p = Path(values["spectrum_csv"])
        spectrum = read_spectrum(p if p.is_absolute() else base_dir / p)
    elif base is not None:
        spectrum = base.spectrum
    else:
        raise physics.ConfigError("material needs either a preset or spectrum_csv")

    cutoffs = [b.shift_hi for b in base.bands] if base else []
    areas = [base.stokes_area_1st, base.stokes_area_2nd][: len(cutoffs)] if base else []
    couplings = [base.coupling_c1, base.coupling_c2][: len(cutoffs)] if base else []
    for i, (ck, ak, cc) in enumerate((("cutoff_1st", "area_1st", "c1"), ("cutoff_2nd", "area_2nd", "c2"))):
        if ck in values or ak in values or cc in values:
            while len(cutoffs) <= i:
                cutoffs.append(math.nan)
                areas.append(0.0)
                couplings.append(0.0)
            cutoffs[i] = values.get(ck, cutoffs[i])
            areas[i] = values.get(ak, areas[i])
            couplings[i] = values.get(cc, couplings[i])
    if any(math.isnan(c) for c in cutoffs):
        raise physics.ConfigError("every configured band needs its cutoff")
    return physics.make_material(
        values.get("name", base.name if base else "custom"),
        spectrum,
        temperature=values.get("temperature", base.temperature if base else 295.0),
        cutoffs=cutoffs,
        areas=areas,
        couplings=couplings,
    )


def load_config(path=None) -> ExperimentConfig:
    """Load an INI experiment config; unknown sections or keys are rejected."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as f:
            cp.read_file(f)
    except configparser.Error as exc:
        raise physics.ConfigError(f"{path}: {exc}") from None
    sections = _parse_sections(cp, str(path))

    laser = physics.LaserConfig(**{**physics.LaserConfig().__dict__, **sections.get("laser", {})})
    mat_values = sections.get("material", {"preset": "diamond"})
    if not mat_values:
        mat_values = {"preset": "diamond"}
    material = _build_material(mat_values, path.parent)
    collection = physics.CollectionConfig(**{**physics.CollectionConfig().__dict__,
                                             **sections.get("collection", {})})
    sim_values = dict(sections.get("simulation", {}))
    overrides = {k: sim_values.pop(k) for k in ("p_s", "p_as", "p_pair") if k in sim_values}
    simulation = SimulationConfig(**sim_values, overrides=overrides)
    if simulation.n_pulses < 1:
        raise physics.ConfigError("simulation.n_pulses must be >= 1")
    if simulation.max_delay < 1:
        raise physics.ConfigError("simulation.max_delay_pulses must be >= 1")
    outputs = sections.get("outputs", {})
    fmt = outputs.get("format", "csv")
    if fmt not in ("csv", "bin"):
        raise physics.ConfigError(f"outputs.format must be csv or bin, got {fmt!r}")
    return ExperimentConfig(laser, material, collection, simulation,
                            output_dir=outputs.get("directory", "out"), output_format=fmt)
