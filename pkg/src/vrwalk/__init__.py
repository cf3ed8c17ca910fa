"""Reinforced random-walk node embeddings.

Walks whose transitions depend on the visit history of the path (vertex reinforcement,
or divergence between successive occupation vectors), optionally mixed with
epsilon-greedy or UCB exploration, feed a skip-gram trainer; the evaluation module
scores the embeddings on link prediction and node classification.
"""

from .evaluation import (EDGE_OPERATORS, LabeledNodes, auc, edge_feature, fit_logreg,
                         link_prediction_eval, node_classification_eval, parse_labels)
from .graph import EdgeSplit, Graph, is_connected, parse_edge_list, read_edge_list, split_edges
from .sgns import EmbeddingMatrix, SgnsConfig, load_embeddings, save_embeddings, train
from .walks import Corpus, WalkConfig, WalkState, generate_corpus, generate_walk, stuck_diagnostic

__version__ = "0.1.0"

__all__ = [
    "Corpus", "EDGE_OPERATORS", "EdgeSplit", "EmbeddingMatrix", "Graph", "LabeledNodes",
    "SgnsConfig", "WalkConfig", "WalkState", "auc", "edge_feature", "fit_logreg",
    "generate_corpus", "generate_walk", "is_connected", "link_prediction_eval",
    "load_embeddings", "node_classification_eval", "parse_edge_list", "parse_labels",
    "read_edge_list", "save_embeddings", "split_edges", "stuck_diagnostic", "train",
]
