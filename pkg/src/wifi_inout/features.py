"""Per-node neighborhood features and the size-selection regression.

Four feature families are computed over bounded-hop neighborhoods:
number of neighbor nodes, average signal strength (dBm, pooled over all
readings in the neighborhood), average APs per scan, and average
fingerprints per cluster. The default hop ranges (neighbors 2..6, the
rest 0..4) give the standard 20-component vector; the ranges stay
configurable so the regression tool below can re-derive them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import t as student_t

from .errors import DegenerateLabelsError, FormatError, RankDeficiencyError
from .graph import TransitionGraph, bfs_layers
from .model import INDOOR, OUTDOOR, FingerprintMatrix

# dBm assigned when a neighborhood pool contains no readings at all;
# weaker than any realistic reading so tree learners can still split on it
SENTINEL_DBM = -100.0

FAMILIES = ("neighbors", "power", "aps", "fps")


@dataclass(frozen=True)
class FeatureRanges:
    """Inclusive hop-bound range per family; None drops the family."""

    neighbors: Optional[Tuple[int, int]] = (2, 6)
    power: Optional[Tuple[int, int]] = (0, 4)
    aps: Optional[Tuple[int, int]] = (0, 4)
    fps: Optional[Tuple[int, int]] = (0, 4)

    def names(self) -> List[str]:
        out = []
        for family in FAMILIES:
            rng = getattr(self, family)
            if rng is None:
                continue
            for d in range(rng[0], rng[1] + 1):
                out.append(f"{family}_d{d}")
        return out

    def max_d(self) -> int:
        return max(
            rng[1] for rng in (self.neighbors, self.power, self.aps, self.fps)
            if rng is not None
        )


DEFAULT_RANGES = FeatureRanges()

# d = 0 variants for the cluster / raw-fingerprint baseline models, which
# have no meaningful graph neighborhood
BASELINE_RANGES = FeatureRanges(neighbors=None, power=(0, 0), aps=(0, 0), fps=(0, 0))


@dataclass
class FeatureTable:
    """Node feature matrix with stable column names."""

    names: List[str]
    rows: np.ndarray  # (n_nodes, n_features)

    @property
    def n_nodes(self) -> int:
        return self.rows.shape[0]

    def vector(self, node: int) -> Dict[str, float]:
        return dict(zip(self.names, (float(v) for v in self.rows[node])))


def extract_features(
    g: TransitionGraph,
    m: FingerprintMatrix,
    ranges: FeatureRanges = DEFAULT_RANGES,
) -> FeatureTable:
    """One feature row per graph node.

    For each hop bound d: neighbors = |N_x(d)|; power = mean dBm over all
    readings of all fingerprints in the pooled neighborhood clusters
    (empty fingerprints contribute no readings; an all-empty pool takes
    the sentinel); aps = total readings / total fingerprints (empties
    count in the denominator); fps = mean cluster size.
    """
    n_nodes = g.n_nodes
    # per-node aggregates over member fingerprints
    size = np.array(g.node_weight, dtype=np.float64)
    readings = np.zeros(n_nodes)
    dbm_sum = np.zeros(n_nodes)
    for x in range(n_nodes):
        for fi in g.node_members[x]:
            fp = m.fingerprints[fi]
            readings[x] += len(fp.powers)
            dbm_sum[x] += sum(fp.dbm_values())

    names = ranges.names()
    col = {name: i for i, name in enumerate(names)}
    max_d = ranges.max_d()
    rows = np.zeros((n_nodes, len(names)))

    for x in range(n_nodes):
        layers = bfs_layers(g, x, max_d)
        cnt = 0
        size_sum = 0.0
        readings_sum = 0.0
        dbm_total = 0.0
        for d in range(max_d + 1):
            if d < len(layers):
                for y in layers[d]:
                    cnt += 1
                    size_sum += size[y]
                    readings_sum += readings[y]
                    dbm_total += dbm_sum[y]
            for family, value in (
                ("neighbors", float(cnt)),
                ("power", dbm_total / readings_sum if readings_sum > 0 else SENTINEL_DBM),
                ("aps", readings_sum / size_sum),
                ("fps", size_sum / cnt),
            ):
                rng = getattr(ranges, family)
                if rng is not None and rng[0] <= d <= rng[1]:
                    rows[x, col[f"{family}_d{d}"]] = value
    return FeatureTable(names=names, rows=rows)


def neighborhood_feature_grid(
    g: TransitionGraph, m: FingerprintMatrix, max_d: int = 30
) -> FeatureTable:
    """All four families at every hop bound 0..max_d, for the selection
    regression."""
    full = FeatureRanges(
        neighbors=(0, max_d), power=(0, max_d), aps=(0, max_d), fps=(0, max_d)
    )
    return extract_features(g, m, full)


@dataclass(frozen=True)
class SelectionEntry:
    name: str
    family: str
    d: int
    coef: Optional[float]
    t_stat: Optional[float]
    p_value: Optional[float]
    selected: bool
    constant: bool = False


@dataclass
class FeatureSelectionReport:
    entries: List[SelectionEntry]
    n_nodes: int
    dof: int

    def selected_by_family(self) -> Dict[str, List[int]]:
        out: Dict[str, List[int]] = {f: [] for f in FAMILIES}
        for e in self.entries:
            if e.selected:
                out[e.family].append(e.d)
        return {f: sorted(ds) for f, ds in out.items()}


def select_neighborhood_sizes(
    table: FeatureTable,
    labels: Sequence[Optional[str]],
    alpha: float = 0.05,
) -> FeatureSelectionReport:
    """OLS of the label (indoor = 1, outdoor = 0) on every (family, d)
    feature; a feature is selected when its two-sided t-test p-value is
    <= alpha. Constant columns are dropped before the fit and reported
    unselected."""
    if len(labels) != table.n_nodes:
        raise FormatError("one label slot per node required")
    keep_rows = [i for i, lab in enumerate(labels) if lab in (INDOOR, OUTDOOR)]
    y = np.array([1.0 if labels[i] == INDOOR else 0.0 for i in keep_rows])
    if len(set(y.tolist())) < 2:
        raise DegenerateLabelsError("selection regression needs both classes")
    X = table.rows[keep_rows]

    variable = [j for j in range(X.shape[1]) if np.ptp(X[:, j]) > 0]
    Xv = X[:, variable]
    design = np.column_stack([np.ones(len(Xv)), Xv])
    n, p = design.shape
    if np.linalg.matrix_rank(design) < p:
        raise RankDeficiencyError(
            f"design is collinear after pruning constants ({p} columns, rank deficient)"
        )
    beta, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    dof = n - p
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(design.T @ design)
    se = np.sqrt(np.diag(cov))
    t_stats = beta / se
    p_values = 2.0 * student_t.sf(np.abs(t_stats), dof)

    stats = {
        variable[k]: (float(beta[k + 1]), float(t_stats[k + 1]), float(p_values[k + 1]))
        for k in range(len(variable))
    }
    entries = []
    for j, name in enumerate(table.names):
        family, d_str = name.rsplit("_d", 1)
        if j in stats:
            coef, t_val, p_val = stats[j]
            entries.append(
                SelectionEntry(name, family, int(d_str), coef, t_val, p_val,
                               selected=p_val <= alpha)
            )
        else:
            entries.append(
                SelectionEntry(name, family, int(d_str), None, None, None,
                               selected=False, constant=True)
            )
    return FeatureSelectionReport(entries=entries, n_nodes=len(keep_rows), dof=dof)


# --- feature matrix export ---------------------------------------------------

def write_features_csv(
    table: FeatureTable,
    weights: Sequence[int],
    labels: Sequence[Optional[str]],
    path,
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(table.names + ["weight", "label"])
        for x in range(table.n_nodes):
            row = [repr(float(v)) for v in table.rows[x]]
            row.append(str(int(weights[x])))
            row.append(labels[x] if labels[x] else "")
            writer.writerow(row)


def read_features_csv(path) -> Tuple[FeatureTable, List[int], List[Optional[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or header[-2:] != ["weight", "label"]:
            raise FormatError("feature CSV must end with weight,label columns")
        names = header[:-2]
        rows, weights, labels = [], [], []
        for rec in reader:
            if len(rec) != len(header):
                raise FormatError(f"feature CSV row has {len(rec)} fields, want {len(header)}")
            try:
                rows.append([float(v) for v in rec[: len(names)]])
                weights.append(int(rec[-2]))
            except ValueError as e:
                raise FormatError(f"bad feature CSV value: {e}") from e
            lab = rec[-1]
            if lab not in ("", INDOOR, OUTDOOR):
                raise FormatError(f"bad label in feature CSV: {lab!r}")
            labels.append(lab if lab else None)
    return (
        FeatureTable(names=names, rows=np.array(rows, dtype=np.float64)),
        weights,
        labels,
    )
