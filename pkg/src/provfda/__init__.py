"""Provenance-graph anomaly detection over host logs.

Logs become nodes of a per-user provenance graph; each node's neighborhood is
sampled with a restarting random walk and summarized either by a DFT feature
vector (``fda`` path) or by a recurrent aggregate of learned embeddings
(``gnn`` path). A cosine-threshold clusterer trained on benign data scores
new logs by distance to the nearest centroid.
"""

__version__ = "0.1.0"
