"""scikit-learn style front end for batch routing.

Each row of ``X`` is one traffic pattern: ``X[r, i]`` is the destination of
input ``i``, or -1 when that input is idle.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .banyan import WIRINGS, RouteStatus, build_topology, packets_from_permutation, route


def check_traffic(X, n_ports: int) -> np.ndarray:
    """Validate a traffic matrix and return it as an integer array."""
    X = check_array(X, dtype=np.int64, ensure_2d=True)
    if X.shape[1] != n_ports:
        raise ValueError(f"expected {n_ports} columns (one per input port), got {X.shape[1]}")
    if X.min() < -1 or X.max() >= n_ports:
        raise ValueError(f"destinations must lie in [-1, {n_ports - 1}]")
    for r, row in enumerate(X):
        active = row[row >= 0]
        if len(np.unique(active)) != len(active):
            raise ValueError(f"row {r} sends two packets to the same output")
    return X


class BanyanRouter(TransformerMixin, BaseEstimator):
    """Route traffic patterns through a Banyan fabric.

    Parameters
    ----------
    n_ports : int
        Fabric size, a power of two >= 4.
    wiring : {"omega", "butterfly"}
    mode : {"quantum", "classical"}
        Whether internal contention is resolved by fusion or blocks.
    feed_forward : bool
        Use the feed-forward success constants of fusion and fission.
    """

    def __init__(self, n_ports=8, wiring="omega", mode="quantum", feed_forward=True):
        self.n_ports = n_ports
        self.wiring = wiring
        self.mode = mode
        self.feed_forward = feed_forward

    def _check_params(self):
        if self.wiring not in WIRINGS:
            raise ValueError(f"wiring must be one of {WIRINGS}")
        if self.mode not in ("quantum", "classical"):
            raise ValueError("mode must be 'quantum' or 'classical'")

    def fit(self, X=None, y=None):
        self._check_params()
        self.topology_ = build_topology(self.n_ports, self.wiring)
        if X is not None:
            check_traffic(X, self.n_ports)
        self.n_features_in_ = self.n_ports
        return self

    def _route_rows(self, X):
        check_is_fitted(self, "topology_")
        X = check_traffic(X, self.n_ports)
        return [
            route(packets_from_permutation(row.tolist(), self.n_ports), self.mode, self.topology_,
                  ff=self.feed_forward, track_payloads=False)
            for row in X
        ]

    def predict(self, X):
        """Routing status per row ("Delivered", "BlockedClassical", ...)."""
        return np.array([r.status.value for r in self._route_rows(X)], dtype=object)

    def score_samples(self, X):
        """End-to-end heralding probability per row (0 when not deliverable)."""
        return np.array([r.success_probability for r in self._route_rows(X)])

    def transform(self, X):
        """Per-row features: delivered flag, fused segments, engaged units, success probability."""
        rows = self._route_rows(X)
        return np.array([
            [float(r.status is RouteStatus.DELIVERED), len(r.fused_segments), len(r.units),
             r.success_probability]
            for r in rows
        ])
