"""Categorical projection and embedding of ALC ontologies."""

from .alc import (
    Atomic,
    And,
    Axiom,
    Bottom,
    Exists,
    Forall,
    Not,
    Ontology,
    Or,
    Signature,
    Top,
    canonical_id,
    decode_id,
    parse_concept,
    parse_ontology,
    render_concept,
)
from .embedding import EmbeddingTable, TrainConfig, grid_sweep, train
from .evaluation import RankingReport, aggregate, rank_head, rank_tail
from .graph import Graph
from .projection import (
    ProjectionOptions,
    add_existential_scaffold,
    decode_axiom_edge,
    project_axiom,
    project_concept,
    project_ontology,
)
from .saturation import saturate, saturate_step

__version__ = "0.1.0"
