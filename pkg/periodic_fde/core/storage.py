"""Plain-text solution and matrix files.

Solution file layout (whitespace separated, '#' starts a comment):

    degree <m>
    family <gauss_legendre|chebyshev2>
    n_y <n_y>
    breakpoints <t_0> ... <t_L>
    mu <T> <p_1> ... <p_np>
    alpha <a_1> ... <a_ny>
    values
    <t_k> <v_1(t_k)> ... <v_ny(t_k)>     (one row per global node, m*L rows)

Floats are written with 17 significant digits.
"""

import logging
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from periodic_fde.core.mesh import Mesh, NodeFamily, mesh_from_breakpoints
from periodic_fde.core.polynomials import ExtendedVector, PeriodicPiecewisePolynomial
from periodic_fde.utils.helpers import format_float

logger = logging.getLogger(__name__)

HEADER_KEYS = ("degree", "family", "n_y", "breakpoints", "mu", "alpha")


def _join(values: np.ndarray) -> str:
    return " ".join(format_float(value) for value in np.ravel(values))


def write_solution(path: Union[str, Path], x: ExtendedVector) -> Path:
    """Serialize an extended vector whose v is a PeriodicPiecewisePolynomial."""
    if not isinstance(x.v, PeriodicPiecewisePolynomial):
        raise TypeError("Only continuous periodic piecewise polynomials can be serialized")

    mesh = x.v.mesh
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    lines: List[str] = [
        "# periodic piecewise polynomial solution",
        f"degree {mesh.degree}",
        f"family {mesh.family.value}",
        f"n_y {x.v.n_y}",
        f"breakpoints {_join(mesh.breakpoints)}",
        f"mu {_join(x.mu)}",
        f"alpha {_join(x.alpha)}",
        "values",
    ]
    for k, t in enumerate(mesh.global_nodes):
        lines.append(f"{format_float(t)} {_join(x.v.values[:, k])}")

    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote solution ({mesh!r}) to {path}")
    return path


def read_solution(path: Union[str, Path]) -> ExtendedVector:
    path = Path(path)
    header: Dict[str, List[str]] = {}
    rows: List[List[float]] = []
    in_values = False

    try:
        for raw in path.read_text(encoding="utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if in_values:
                rows.append([float(token) for token in line.split()])
                continue
            key, *fields = line.split()
            if key == "values":
                in_values = True
            else:
                header[key] = fields
    except (OSError, ValueError) as e:
        logger.error(f"Failed to read solution file {path}: {e}")
        raise

    missing = [key for key in HEADER_KEYS if key not in header]
    if missing:
        raise ValueError(f"Solution file {path} is missing header keys: {', '.join(missing)}")

    mesh: Mesh = mesh_from_breakpoints(
        [float(value) for value in header["breakpoints"]],
        int(header["degree"][0]),
        NodeFamily.parse(header["family"][0]),
    )
    n_y = int(header["n_y"][0])
    table = np.array(rows, dtype=float)
    if table.shape != (mesh.n_nodes, n_y + 1):
        raise ValueError(f"Solution file {path}: expected {mesh.n_nodes} rows of {n_y + 1} columns, got {table.shape}")

    v = PeriodicPiecewisePolynomial(mesh, table[:, 1:].T)
    return ExtendedVector(v, [float(a) for a in header["alpha"]], [float(value) for value in header["mu"]])


def write_matrix(path: Union[str, Path], matrix: np.ndarray) -> Path:
    """Row-major plain-text matrix with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.atleast_2d(matrix), fmt="%.17g")
    return path


def read_matrix(path: Union[str, Path]) -> np.ndarray:
    return np.loadtxt(path, ndmin=2)
