"""Reading and writing the 2D g2o text format.

Only ``VERTEX_SE2`` and ``EDGE_SE2`` records are understood; other tags are
skipped with a warning.  The 3x3 information matrix of an edge is reduced to
the isotropic model used everywhere else in the package::

    tau   = (I11 + I22) / 2
    kappa = I33

Off-diagonal information entries are discarded, so a parse/write cycle on a
file with correlated noise is lossy in those entries only.
"""

import io
import logging

import numpy as np

from .graph import EdgeKind, GraphValidationError, PoseGraph, RelativeMeasurement, TrajectoryEstimate

logger = logging.getLogger(__name__)


class G2oParseError(ValueError):
    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


def _as_lines(source):
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _floats(fields, lineno, tag):
    try:
        return [float(v) for v in fields]
    except ValueError as exc:
        raise G2oParseError(f"malformed numeric field in {tag} record: {exc}", lineno) from None


def _ident(token, lineno, tag):
    try:
        return int(token)
    except ValueError:
        raise G2oParseError(f"malformed vertex id {token!r} in {tag} record", lineno) from None


def _read_records(stream):
    vertices = []  # (raw id, x, y, theta, lineno)
    edges = []  # (raw i, raw j, dx, dy, dth, info[6], lineno)
    for lineno, line in enumerate(_as_lines(stream), start=1):
        fields = line.split()
        if not fields or fields[0].startswith("#"):
            continue
        tag = fields[0]
        if tag == "VERTEX_SE2":
            if len(fields) < 5:
                raise G2oParseError("VERTEX_SE2 needs 4 fields: id x y theta", lineno)
            vid = _ident(fields[1], lineno, tag)
            x, y, th = _floats(fields[2:5], lineno, tag)
            vertices.append((vid, x, y, th, lineno))
        elif tag == "EDGE_SE2":
            if len(fields) < 12:
                raise G2oParseError(
                    "EDGE_SE2 needs 11 fields: i j dx dy dtheta I11 I12 I13 I22 I23 I33", lineno
                )
            i = _ident(fields[1], lineno, tag)
            j = _ident(fields[2], lineno, tag)
            vals = _floats(fields[3:12], lineno, tag)
            edges.append((i, j, vals[0], vals[1], vals[2], vals[3:], lineno))
        else:
            logger.warning("line %d: skipping unsupported record %s", lineno, tag)
    return vertices, edges


def parse_g2o(stream):
    """Parse a g2o 2D file into a :class:`PoseGraph`.

    Parameters
    ----------
    stream : iterable of str or str
        Open text file, list of lines, or the whole file contents.

    Returns
    -------
    graph : PoseGraph
    initial : TrajectoryEstimate or None
        Vertex poses from ``VERTEX_SE2`` records, if any were present.
    """
    vertices, raw_edges = _read_records(stream)
    if not vertices and not raw_edges:
        raise GraphValidationError("no vertices in input")

    if vertices:
        index = {}
        for vid, *_rest, lineno in vertices:
            if vid in index:
                raise G2oParseError(f"duplicate vertex id {vid}", lineno)
            index[vid] = len(index)
    else:
        ids = sorted({e[0] for e in raw_edges} | {e[1] for e in raw_edges})
        index = {vid: k for k, vid in enumerate(ids)}

    edges = []
    seen_loops = set()
    for i, j, dx, dy, dth, info, lineno in raw_edges:
        if i not in index or j not in index:
            missing = i if i not in index else j
            raise G2oParseError(f"edge references unknown vertex {missing}", lineno)
        a, b = index[i], index[j]
        if a == b:
            raise G2oParseError(f"self-loop on vertex {i}", lineno)
        I11, _I12, _I13, I22, _I23, I33 = info
        kind = EdgeKind.ODOMETRY if abs(a - b) == 1 else EdgeKind.LOOP_CLOSURE
        if kind is EdgeKind.LOOP_CLOSURE:
            if (a, b) in seen_loops:
                logger.warning("line %d: dropping duplicate loop closure (%d, %d)", lineno, i, j)
                continue
            seen_loops.add((a, b))
        try:
            edges.append(
                RelativeMeasurement(a, b, dth, (dx, dy), kappa=I33, tau=0.5 * (I11 + I22), kind=kind)
            )
        except GraphValidationError as exc:
            raise G2oParseError(str(exc), lineno) from None

    graph = PoseGraph(len(index), edges)
    initial = None
    if vertices:
        initial = TrajectoryEstimate(
            np.array([v[3] for v in vertices]), np.array([[v[1], v[2]] for v in vertices])
        )
    return graph, initial


def read_g2o(path):
    with open(path) as fh:
        return parse_g2o(fh)


def parse_trajectory(stream):
    """Read a trajectory stored as ``VERTEX_SE2`` records (edges are ignored)."""
    vertices, _ = _read_records(stream)
    if not vertices:
        raise GraphValidationError("no VERTEX_SE2 records in trajectory input")
    return TrajectoryEstimate(
        np.array([v[3] for v in vertices]), np.array([[v[1], v[2]] for v in vertices])
    )


def read_trajectory(path):
    with open(path) as fh:
        return parse_trajectory(fh)


def _vertex_lines(estimate):
    for k in range(len(estimate)):
        x, y = (float(v) for v in estimate.t[k])
        yield f"VERTEX_SE2 {k} {x!r} {y!r} {float(estimate.theta[k])!r}\n"


def write_g2o(graph, estimate=None, stream=None):
    """Serialize a graph (and optionally vertex poses) to g2o text.

    Floats are written with ``repr`` so a parse of the output reproduces the
    graph exactly.  Returns the text when ``stream`` is None.
    """
    out = io.StringIO() if stream is None else stream
    if estimate is not None:
        if len(estimate) != graph.num_vertices:
            raise ValueError(
                f"estimate has {len(estimate)} poses for a graph of {graph.num_vertices} vertices"
            )
        out.writelines(_vertex_lines(estimate))
    for e in graph.edges:
        dx, dy = e.dt
        out.write(
            f"EDGE_SE2 {e.i} {e.j} {dx!r} {dy!r} {e.dtheta!r} "
            f"{e.tau!r} 0.0 0.0 {e.tau!r} 0.0 {e.kappa!r}\n"
        )
    if stream is None:
        return out.getvalue()
    return None


def write_trajectory(estimate, stream=None):
    out = io.StringIO() if stream is None else stream
    out.writelines(_vertex_lines(estimate))
    if stream is None:
        return out.getvalue()
    return None
