"""Plain-text formats for fields, trajectories and observations.

Field::

    d=<dim>
    p1 ... pd coeff            # one line per mode, lexicographic order

Trajectory: consecutive field records, each preceded by ``t=<time>``.

Observations::

    grid=<n1> ... <nd>
    final:
    <one value per design point, lexicographic point order>
    source:
    <time nodes on one row>
    <one row per design point, one column per node>
    coefficient:               # optional, observed diffusion path
    <time nodes on one row>
    <values on one row>

Floats are written with ``repr`` so every value round-trips exactly.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator

import numpy as np

from .noise import CoefficientPath, GridObservations
from .spectral import DesignGrid, SpectralField, Trajectory


class FormatError(ValueError):
    pass


def _num(x) -> str:
    return repr(float(x))


def _row(values) -> str:
    return " ".join(_num(v) for v in values)


def _lines(text: str) -> list[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


# --- fields ------------------------------------------------------------------


def format_field(f: SpectralField) -> str:
    out = [f"d={f.dim}"]
    for p in f.modes():
        out.append(" ".join(str(c) for c in p) + " " + _num(f[p]))
    return "\n".join(out) + "\n"


def _parse_field_lines(lines: list[str], start: int) -> tuple[SpectralField, int]:
    head = lines[start]
    if not head.startswith("d="):
        raise FormatError(f"expected 'd=<dim>' header, got {head!r}")
    try:
        dim = int(head[2:])
    except ValueError:
        raise FormatError(f"bad dimension header {head!r}") from None
    coeffs = {}
    i = start + 1
    while i < len(lines) and not lines[i].startswith(("d=", "t=")):
        parts = lines[i].split()
        if len(parts) != dim + 1:
            raise FormatError(f"line {lines[i]!r}: expected {dim} indices and a coefficient")
        try:
            p = tuple(int(c) for c in parts[:dim])
            value = float(parts[dim])
        except ValueError:
            raise FormatError(f"unparsable line {lines[i]!r}") from None
        if p in coeffs:
            raise FormatError(f"mode {p} listed twice")
        coeffs[p] = value
        i += 1
    return SpectralField(dim, coeffs), i


def parse_field(text: str) -> SpectralField:
    lines = _lines(text)
    if not lines:
        raise FormatError("empty field file")
    field_, end = _parse_field_lines(lines, 0)
    if end != len(lines):
        raise FormatError("trailing content after field record")
    return field_


# --- trajectories ------------------------------------------------------------


def format_trajectory(traj: Trajectory) -> str:
    chunks = []
    for m, t in enumerate(traj.times):
        chunks.append(f"t={_num(t)}\n" + format_field(traj.field(m)))
    return "".join(chunks)


def _records(lines: list[str]) -> Iterator[tuple[float, SpectralField]]:
    i = 0
    while i < len(lines):
        if not lines[i].startswith("t="):
            raise FormatError(f"expected 't=<time>', got {lines[i]!r}")
        t = float(lines[i][2:])
        field_, i = _parse_field_lines(lines, i + 1)
        yield t, field_


def parse_trajectory(text: str) -> Trajectory:
    records = list(_records(_lines(text)))
    if not records:
        raise FormatError("empty trajectory file")
    dims = {f.dim for _, f in records}
    if len(dims) != 1:
        raise FormatError("records of mixed dimension")
    modes = tuple(sorted(set().union(*(f.modes() for _, f in records))))
    times = np.array([t for t, _ in records])
    if np.any(np.diff(times) <= 0):
        raise FormatError("time stamps must increase")
    values = np.array([f.values(modes) for _, f in records]).reshape(len(records), len(modes))
    return Trajectory(dims.pop(), times, modes, values)


# --- observations ------------------------------------------------------------


def format_observations(obs: GridObservations) -> str:
    out = ["grid=" + " ".join(str(n) for n in obs.grid.counts), "final:"]
    out += [_num(v) for v in obs.final_data]
    out += ["source:", _row(obs.time_nodes)]
    out += [_row(r) for r in np.asarray(obs.source_paths).reshape(obs.grid.size, -1)]
    if obs.coefficient is not None:
        out += ["coefficient:", _row(obs.coefficient.time_nodes), _row(obs.coefficient.values)]
    return "\n".join(out) + "\n"


def parse_observations(text: str) -> GridObservations:
    lines = _lines(text)
    if not lines or not lines[0].startswith("grid="):
        raise FormatError("observations must start with 'grid=<n1> ... <nd>'")
    grid = DesignGrid(tuple(int(c) for c in lines[0][5:].split()))
    blocks: dict[str, list[str]] = {}
    current = None
    for ln in lines[1:]:
        if ln.endswith(":") and ln[:-1] in ("final", "source", "coefficient"):
            current = ln[:-1]
            if current in blocks:
                raise FormatError(f"block {current!r} appears twice")
            blocks[current] = []
        elif current is None:
            raise FormatError(f"content before the first block: {ln!r}")
        else:
            blocks[current].append(ln)
    for name in ("final", "source"):
        if name not in blocks:
            raise FormatError(f"missing {name!r} block")
    final = np.array([float(v) for v in blocks["final"]])
    if final.size != grid.size:
        raise FormatError(f"final block has {final.size} values, grid has {grid.size} points")
    src = blocks["source"]
    nodes = np.array([float(v) for v in src[0].split()])
    rows = [[float(v) for v in r.split()] for r in src[1:]]
    if len(rows) != grid.size or any(len(r) != nodes.size for r in rows):
        raise FormatError(f"source block must hold {grid.size} rows of {nodes.size} values")
    coefficient = None
    if "coefficient" in blocks:
        cb = blocks["coefficient"]
        if len(cb) != 2:
            raise FormatError("coefficient block needs a node row and a value row")
        coefficient = CoefficientPath(
            np.array([float(v) for v in cb[0].split()]), np.array([float(v) for v in cb[1].split()])
        )
    return GridObservations(grid, final, nodes, np.array(rows).reshape(grid.size, nodes.size), coefficient)


# --- files -------------------------------------------------------------------


def write_text(path, text: str) -> None:
    Path(path).write_text(text)


def read_field(path) -> SpectralField:
    return parse_field(Path(path).read_text())


def read_trajectory(path) -> Trajectory:
    return parse_trajectory(Path(path).read_text())


def read_observations(path) -> GridObservations:
    return parse_observations(Path(path).read_text())
