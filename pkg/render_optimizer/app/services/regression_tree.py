# app/services/regression_tree.py

"""
Exact greedy regression trees on squared error.

Trees are grown level by level. At each level every open node evaluates all
midpoints between consecutive distinct feature values it holds, for every
feature, using per-(node, value) residual sums. The split maximizing
s_l^2/n_l + s_r^2/n_r (equivalently minimizing the children's SSE) wins; ties
go to the lowest feature index, then the lowest threshold.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

# Relative SSE reduction below which a split does not count
MIN_RELATIVE_GAIN = 1e-12


@dataclass(frozen=True)
class FeatureBins:
    """Distinct sorted values and value codes of every feature column"""
    values: List[np.ndarray]
    codes: List[np.ndarray]

    @classmethod
    def from_features(cls, features: np.ndarray) -> "FeatureBins":
        values, codes = [], []
        for f in range(features.shape[1]):
            uniq, inverse = np.unique(features[:, f], return_inverse=True)
            values.append(uniq)
            codes.append(inverse.astype(np.int64))
        return cls(values=values, codes=codes)


@dataclass
class RegressionTree:
    """
    Flattened binary tree. Node 0 is the root; leaves have feature == -1.

    A sample goes left when features[feature] < threshold.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int
    depth: int = field(default=0)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def leaf_count(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict(self, features: np.ndarray) -> np.ndarray:
        n = features.shape[0]
        node = np.zeros(n, dtype=np.int64)
        rows = np.arange(n)
        for _ in range(self.depth):
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            go_left = features[rows, np.maximum(feat, 0)] < self.threshold[node]
            node = np.where(internal, np.where(go_left, self.left[node], self.right[node]), node)
        return self.value[node]

    def to_dict(self, node: int = 0) -> Dict[str, Any]:
        """Nested JSON-ready representation"""
        if self.feature[node] < 0:
            return {"leaf": float(self.value[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], max_depth: int) -> "RegressionTree":
        feature, threshold, left, right, value = [], [], [], [], []
        depth = 0

        def visit(node: Dict[str, Any], level: int) -> int:
            nonlocal depth
            depth = max(depth, level)
            idx = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if "leaf" in node:
                value[idx] = float(node["leaf"])
                return idx
            feature[idx] = int(node["feature"])
            threshold[idx] = float(node["threshold"])
            left[idx] = visit(node["left"], level + 1)
            right[idx] = visit(node["right"], level + 1)
            return idx

        visit(data, 0)
        return cls(
            feature=np.array(feature, dtype=np.int64),
            threshold=np.array(threshold, dtype=np.float64),
            left=np.array(left, dtype=np.int64),
            right=np.array(right, dtype=np.int64),
            value=np.array(value, dtype=np.float64),
            max_depth=max_depth,
            depth=depth,
        )


def _best_splits(bins: FeatureBins, samples: np.ndarray, local: np.ndarray, residuals: np.ndarray,
                 n_open: int, min_samples_leaf: int):
    """
    Best split of every open node.

    Returns per-node arrays (feature, threshold), feature == -1 where no
    admissible split reduces SSE.
    """
    r = residuals[samples]
    node_sum = np.bincount(local, weights=r, minlength=n_open)
    node_cnt = np.bincount(local, minlength=n_open).astype(np.float64)
    node_sq = np.bincount(local, weights=r * r, minlength=n_open)
    parent_score = node_sum * node_sum / node_cnt
    min_gain = MIN_RELATIVE_GAIN * node_sq

    best_gain = np.full(n_open, -np.inf)
    best_feature = np.full(n_open, -1, dtype=np.int64)
    best_threshold = np.zeros(n_open)

    for f, (values, codes) in enumerate(zip(bins.values, bins.codes)):
        n_values = len(values)
        if n_values < 2:
            continue
        keys = local * n_values + codes[samples]
        pairs, inverse = np.unique(keys, return_inverse=True)
        pair_sum = np.bincount(inverse, weights=r)
        pair_cnt = np.bincount(inverse).astype(np.float64)
        pair_node = pairs // n_values
        pair_value = pairs % n_values

        cum_sum = np.cumsum(pair_sum)
        cum_cnt = np.cumsum(pair_cnt)
        first = np.searchsorted(pair_node, np.arange(n_open))
        before_sum = np.where(first > 0, cum_sum[first - 1], 0.0)
        before_cnt = np.where(first > 0, cum_cnt[first - 1], 0.0)

        left_sum = cum_sum - before_sum[pair_node]
        left_cnt = cum_cnt - before_cnt[pair_node]
        right_sum = node_sum[pair_node] - left_sum
        right_cnt = node_cnt[pair_node] - left_cnt

        admissible = (left_cnt >= min_samples_leaf) & (right_cnt >= min_samples_leaf)
        safe_right = np.where(right_cnt > 0, right_cnt, 1.0)
        gain = left_sum * left_sum / left_cnt + right_sum * right_sum / safe_right - parent_score[pair_node]
        gain = np.where(admissible, gain, -np.inf)

        # first maximum within each node = lowest threshold among equals
        node_max = np.maximum.reduceat(gain, first)
        is_max = np.flatnonzero((gain == node_max[pair_node]) & admissible)
        if len(is_max) == 0:
            continue
        nodes, pick = np.unique(pair_node[is_max], return_index=True)
        chosen = is_max[pick]
        improves = (gain[chosen] > best_gain[nodes]) & (gain[chosen] > min_gain[nodes])
        nodes, chosen = nodes[improves], chosen[improves]
        best_gain[nodes] = gain[chosen]
        best_feature[nodes] = f
        # the next pair in the same node holds the next distinct value
        best_threshold[nodes] = (values[pair_value[chosen]] + values[pair_value[chosen + 1]]) / 2.0

    return best_feature, best_threshold


def fit_tree(features: np.ndarray, residuals: np.ndarray, max_depth: int, min_samples_leaf: int = 5,
             bins: Optional[FeatureBins] = None) -> RegressionTree:
    """
    Grow one regression tree on the residuals

    Args:
        features: (n, w) feature matrix
        residuals: (n,) targets for this tree
        max_depth: maximum root-to-leaf path length
        min_samples_leaf: minimum samples per child of any split
        bins: precomputed FeatureBins for ``features`` (computed when omitted)

    Returns:
        RegressionTree whose leaves predict the mean residual of their samples
    """
    residuals = np.asarray(residuals, dtype=np.float64)
    n = len(residuals)
    if bins is None:
        bins = FeatureBins.from_features(features)

    feature: List[int] = [-1]
    threshold: List[float] = [0.0]
    left: List[int] = [-1]
    right: List[int] = [-1]
    value: List[float] = [float(residuals.mean()) if n else 0.0]

    node_of = np.zeros(n, dtype=np.int64)
    open_nodes = np.array([0], dtype=np.int64)
    depth_reached = 0

    for depth in range(max_depth):
        if len(open_nodes) == 0:
            break
        counts = np.bincount(node_of, minlength=len(feature))[open_nodes]
        open_nodes = open_nodes[counts >= 2 * min_samples_leaf]
        if len(open_nodes) == 0:
            break

        lookup = np.full(len(feature), -1, dtype=np.int64)
        lookup[open_nodes] = np.arange(len(open_nodes))
        samples = np.flatnonzero(lookup[node_of] >= 0)
        local = lookup[node_of[samples]]

        split_feature, split_threshold = _best_splits(bins, samples, local, residuals, len(open_nodes), min_samples_leaf)
        splitting = np.flatnonzero(split_feature >= 0)
        if len(splitting) == 0:
            break

        child_of = np.full((len(open_nodes), 2), -1, dtype=np.int64)
        for k in splitting:
            node = int(open_nodes[k])
            feature[node] = int(split_feature[k])
            threshold[node] = float(split_threshold[k])
            for side in (0, 1):
                child_of[k, side] = len(feature)
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(0.0)
            left[node], right[node] = int(child_of[k, 0]), int(child_of[k, 1])

        moving = samples[split_feature[local] >= 0]
        moving_local = lookup[node_of[moving]]
        go_left = features[moving, split_feature[moving_local]] < split_threshold[moving_local]
        node_of[moving] = np.where(go_left, child_of[moving_local, 0], child_of[moving_local, 1])

        children = child_of[splitting].ravel()
        sums = np.bincount(node_of, weights=residuals, minlength=len(feature))
        cnts = np.bincount(node_of, minlength=len(feature))
        for child in children:
            value[child] = float(sums[child] / cnts[child])
        open_nodes = children
        depth_reached = depth + 1

    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
        max_depth=max_depth,
        depth=depth_reached,
    )
