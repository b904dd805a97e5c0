from .graph import Edge, EdgeKind, GraphRegistry, KnowledgeGraph, Node, NodeKind
from .snapshot import export_graph, import_graph

__all__ = [
    "Edge",
    "EdgeKind",
    "GraphRegistry",
    "KnowledgeGraph",
    "Node",
    "NodeKind",
    "export_graph",
    "import_graph",
]
