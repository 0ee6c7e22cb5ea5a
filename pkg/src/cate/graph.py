"""Single-relation directed graph over canonical node ids.

The edge label is implicit: every edge reads "head is subsumed by tail".
Nodes get dense indices in insertion order; ``top`` and ``bot`` are always
indices 0 and 1.
"""

from __future__ import annotations

from typing import Iterable, TextIO


class UnregisteredNodeError(IndexError):
    pass


class MalformedGraphError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class Graph:
    def __init__(self):
        self.nodes: list[str] = []
        self.index: dict[str, int] = {}
        self.edges: set[tuple[int, int]] = set()
        self.intern("top")
        self.intern("bot")

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.index

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self) -> str:
        return f"Graph(|V|={len(self.nodes)}, |E|={len(self.edges)})"

    @property
    def top(self) -> int:
        return 0

    @property
    def bot(self) -> int:
        return 1

    def intern(self, node_id: str) -> int:
        idx = self.index.get(node_id)
        if idx is None:
            idx = len(self.nodes)
            self.nodes.append(node_id)
            self.index[node_id] = idx
        return idx

    def add_edge(self, h: int, t: int) -> bool:
        """Insert ``h -> t``; returns True if the edge is new."""
        n = len(self.nodes)
        if not (0 <= h < n and 0 <= t < n):
            raise UnregisteredNodeError(f"edge ({h}, {t}) references a node outside 0..{n - 1}")
        if (h, t) in self.edges:
            return False
        self.edges.add((h, t))
        return True

    def add_edge_ids(self, head: str, tail: str) -> bool:
        return self.add_edge(self.intern(head), self.intern(tail))

    def has_edge_ids(self, head: str, tail: str) -> bool:
        h, t = self.index.get(head), self.index.get(tail)
        return h is not None and t is not None and (h, t) in self.edges

    def edge_ids(self, edges: Iterable[tuple[int, int]] | None = None) -> set[tuple[str, str]]:
        """Edges as (head id, tail id) pairs."""
        if edges is None:
            edges = self.edges
        return {(self.nodes[h], self.nodes[t]) for h, t in edges}

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.nodes = list(self.nodes)
        g.index = dict(self.index)
        g.edges = set(self.edges)
        return g

    def remove_edges(self, edges: Iterable[tuple[int, int]]) -> int:
        """Drop edges (used to remove test pairs from training graphs)."""
        before = len(self.edges)
        self.edges.difference_update(edges)
        return before - len(self.edges)

    # ------------------------------------------------------------------ TSV

    def write_tsv(self, fh: TextIO) -> None:
        fh.write("# nodes\n")
        for i, node in enumerate(self.nodes):
            fh.write(f"{i}\t{node}\n")
        fh.write("# edges\n")
        for h, t in self.sorted_edges():
            fh.write(f"{h}\t{t}\n")

    def to_tsv(self) -> str:
        import io

        buf = io.StringIO()
        self.write_tsv(buf)
        return buf.getvalue()

    @classmethod
    def read_tsv(cls, data: str | bytes | TextIO) -> "Graph":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        lines = data.splitlines() if isinstance(data, str) else data.read().splitlines()
        g = cls.__new__(cls)
        g.nodes, g.index, g.edges = [], {}, set()
        section = None
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            if line.startswith("#"):
                section = line[1:].strip()
                if section not in ("nodes", "edges"):
                    raise MalformedGraphError(f"unknown section {section!r}", lineno)
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise MalformedGraphError(f"expected 2 tab-separated columns, got {len(cols)}", lineno)
            if section == "nodes":
                try:
                    idx = int(cols[0])
                except ValueError:
                    raise MalformedGraphError(f"bad node index {cols[0]!r}", lineno) from None
                if idx != len(g.nodes):
                    raise MalformedGraphError(f"node index {idx} out of order", lineno)
                if cols[1] in g.index:
                    raise MalformedGraphError(f"duplicate node {cols[1]!r}", lineno)
                g.intern(cols[1])
            elif section == "edges":
                try:
                    h, t = int(cols[0]), int(cols[1])
                except ValueError:
                    raise MalformedGraphError("edge endpoints must be integers", lineno) from None
                try:
                    g.add_edge(h, t)
                except UnregisteredNodeError as exc:
                    raise MalformedGraphError(str(exc), lineno) from None
            else:
                raise MalformedGraphError("data before '# nodes' header", lineno)
        if g.nodes[:2] != ["top", "bot"]:
            raise MalformedGraphError("graph must start with 'top' and 'bot'", 1)
        return g


def read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return Graph.read_tsv(fh)


def write_graph(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        g.write_tsv(fh)
