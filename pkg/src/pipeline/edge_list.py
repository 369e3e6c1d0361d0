# src/pipeline/edge_list.py

"""
Plain-text edge lists.

Format (UTF-8): lines starting with '#' are comments, the first other line is
``n <int>``, and every following line is ``<i> <j>`` with distinct node ids in
[0, n). Either order is accepted on read; the writer emits i < j, sorted.
"""

import logging
from pathlib import Path

import numpy as np

from src.simulation.generate_network import Graph
from src.simulation.pair_index import num_pairs, pair_to_index
from src.utils.errors import DuplicateEdgeError, FormatError

logger = logging.getLogger(__name__)


def _parse_int(token, line_no):
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"line {line_no}: expected an integer, got '{token}'", line=line_no) from None


def parse_edge_list(text):
    """
    Parse edge-list content into a Graph.

    Parameters:
    -----------
    text : str or bytes
        Edge-list content

    Returns:
    --------
    Graph with the declared n (isolated nodes kept)
    """
    if isinstance(text, bytes):
        try:
            text = text.decode('utf-8')
        except UnicodeDecodeError as e:
            raise FormatError(f"edge list is not UTF-8: {e}") from e

    n = None
    adjacency = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        tokens = line.split()

        if n is None:
            if len(tokens) != 2 or tokens[0] != 'n':
                raise FormatError(f"line {line_no}: expected header 'n <int>', got '{line}'", line=line_no)
            n = _parse_int(tokens[1], line_no)
            if n < 2:
                raise FormatError(f"line {line_no}: n must be at least 2, got {n}", line=line_no)
            adjacency = np.zeros(num_pairs(n), dtype=bool)
            continue

        if len(tokens) != 2:
            raise FormatError(f"line {line_no}: expected '<i> <j>', got '{line}'", line=line_no)
        i, j = (_parse_int(tok, line_no) for tok in tokens)
        if not (0 <= i < n and 0 <= j < n):
            raise FormatError(f"line {line_no}: node id out of range [0, {n})", line=line_no)
        if i == j:
            raise FormatError(f"line {line_no}: self-loop on node {i}", line=line_no)
        i, j = min(i, j), max(i, j)
        t = pair_to_index(i, j, n)
        if adjacency[t]:
            raise DuplicateEdgeError(f"line {line_no}: duplicate edge ({i}, {j})", line=line_no)
        adjacency[t] = True

    if n is None:
        raise FormatError("missing header 'n <int>'")
    return Graph.from_adjacency(n, adjacency)


def write_edge_list(graph):
    """Canonical content: header, then 'i j' (i < j) in lexicographic order."""
    lines = [f"n {graph.n}"]
    lines.extend(f"{i} {j}" for i, j in graph.edges())
    return '\n'.join(lines) + '\n'


def read_edge_list(path):
    """Read and parse an edge-list file."""
    path = Path(path)
    try:
        content = path.read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read edge list {path}: {e}") from e
    graph = parse_edge_list(content)
    logger.debug("read %s: n=%d, %d edges", path, graph.n, graph.num_edges)
    return graph


def save_edge_list(graph, path):
    """Write the canonical form; bytes do not depend on the platform."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_edge_list(graph).encode('utf-8'))
    return path
