"""Partition comparison: contingency tables, pair tallies and similarity measures.

All sixteen measures are computed from the contingency table of the two
partitions.  Pair-counting measures (RI, ARI1, ARI2, FM, JACC) go through
``pair_counts``; information-theoretic measures use natural logarithms, so
MI, VI and ID are expressed in nats.

Degenerate conventions:

* Two single-cluster partitions agree perfectly: similarities give 1 and
  distances give 0.
* ARI1 with a zero denominator gives 1 when the partitions are identical and
  0 otherwise (two all-singleton partitions are identical).
* FM and JACC with a zero denominator give 0.
* Normalized information measures with a zero normalizer give 0.

``similarity`` re-orients every measure so that larger means more alike.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.special import gammaln
from scipy.stats import entropy as _entropy
from sklearn.metrics.cluster import contingency_matrix

from .config import get_config
from .exceptions import ComputationError, DataError
from .models import ContingencyTable, MeasureId, PairCounts, Partition

logger = logging.getLogger(__name__)

# Below this the AMI normalizer is treated as zero (every permutation gives the same MI).
_AMI_TOLERANCE = 1e-12


def _choose2(n: np.ndarray | int) -> np.ndarray | int:
    return n * (n - 1) // 2


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def contingency(a: Partition, b: Partition) -> ContingencyTable:
    """Co-occurrence counts of the clusters present in ``a`` (rows) and ``b`` (columns).

    Raises:
        DataError: If the partitions cover a different number of samples.
        ComputationError: If either side has more clusters than the
            configured ``contingency_cap``.
    """
    if a.n_samples != b.n_samples:
        raise DataError(
            f"Cannot compare partitions of {a.n_samples} and {b.n_samples} samples",
            error_code="LENGTH_MISMATCH",
            details={"n_a": a.n_samples, "n_b": b.n_samples},
        )
    cap = get_config().contingency_cap
    k_a, k_b = a.n_present, b.n_present
    if max(k_a, k_b) > cap:
        raise ComputationError(
            f"Contingency table {k_a}x{k_b} exceeds the cap of {cap} clusters",
            error_code="CONTINGENCY_CAP_EXCEEDED",
            details={"k_a": k_a, "k_b": k_b, "cap": cap},
        )
    return ContingencyTable(counts=contingency_matrix(a.labels, b.labels))


def pair_counts(table: ContingencyTable) -> PairCounts:
    """Tally the N(N-1)/2 sample pairs into the four agreement cases."""
    counts = table.counts
    n11 = int(_choose2(counts).sum())
    same_a = int(_choose2(table.row_sums).sum())
    same_b = int(_choose2(table.col_sums).sum())
    n10 = same_a - n11
    n01 = same_b - n11
    n00 = int(_choose2(table.total)) - n11 - n10 - n01
    return PairCounts(n11=n11, n00=n00, n10=n10, n01=n01)


# ---------------------------------------------------------------------------
# Information quantities
# ---------------------------------------------------------------------------


def partition_entropy(sizes: np.ndarray) -> float:
    """Entropy (nats) of a partition given its cluster sizes; 0 log 0 = 0."""
    sizes = np.asarray(sizes, dtype=np.float64)
    sizes = sizes[sizes > 0]
    if sizes.size <= 1:
        return 0.0
    return float(_entropy(sizes))


def mutual_information(table: ContingencyTable) -> float:
    """Mutual information (nats) of the joint distribution P(k, k') = N_kk' / N."""
    counts = table.counts.astype(np.float64)
    n = counts.sum()
    rows, cols = np.nonzero(counts)
    joint = counts[rows, cols] / n
    outer = (table.row_sums[rows].astype(np.float64) / n) * (table.col_sums[cols].astype(np.float64) / n)
    mi = float(np.sum(joint * (np.log(joint) - np.log(outer))))
    return max(mi, 0.0)


def expected_mutual_information(table: ContingencyTable) -> float:
    """Expected MI of two partitions with the table's margins under random permutation.

    Sums the hypergeometric distribution of every cell over its support
    ``max(1, a + b - N) .. min(a, b)``; probabilities are evaluated in log
    space with ``gammaln``.
    """
    a = table.row_sums[table.row_sums > 0].astype(np.int64)
    b = table.col_sums[table.col_sums > 0].astype(np.int64)
    n = int(table.total)
    if a.size <= 1 or b.size <= 1:
        return 0.0

    log_n_fact = gammaln(n + 1)
    gln_a = gammaln(a + 1)
    gln_b = gammaln(b + 1)
    gln_na = gammaln(n - a + 1)
    gln_nb = gammaln(n - b + 1)
    log_n = math.log(n)

    emi = 0.0
    for i, a_i in enumerate(a):
        for j, b_j in enumerate(b):
            lo = max(1, int(a_i + b_j - n))
            hi = int(min(a_i, b_j))
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1, dtype=np.float64)
            log_prob = (
                gln_a[i] + gln_b[j] + gln_na[i] + gln_nb[j]
                - log_n_fact - gammaln(nij + 1) - gammaln(a_i - nij + 1)
                - gammaln(b_j - nij + 1) - gammaln(n - a_i - b_j + nij + 1)
            )
            term = (nij / n) * (log_n + np.log(nij) - math.log(a_i) - math.log(b_j))
            emi += float(np.sum(term * np.exp(log_prob)))
    return emi


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


def _ari1(pc: PairCounts) -> float:
    numerator = 2.0 * (pc.n00 * pc.n11 - pc.n01 * pc.n10)
    denominator = float((pc.n00 + pc.n01) * (pc.n01 + pc.n11) + (pc.n00 + pc.n10) * (pc.n10 + pc.n11))
    if denominator == 0.0:
        return 1.0 if pc.n10 == 0 and pc.n01 == 0 else 0.0
    return numerator / denominator


def _ari2(table: ContingencyTable) -> float:
    """Adjusted Rand index with the expected index approximated from squared sums.

    Replaces the exact hypergeometric expectation by
    ``sum(a_i^2) * sum(b_j^2) / N^2`` for ``sum(N_kk'^2)``.
    """
    n = float(table.total)
    sq_cells = float(np.sum(table.counts.astype(np.float64) ** 2))
    sq_a = float(np.sum(table.row_sums.astype(np.float64) ** 2))
    sq_b = float(np.sum(table.col_sums.astype(np.float64) ** 2))
    expected = sq_a * sq_b / (n * n)
    denominator = 0.5 * (sq_a + sq_b) - expected
    if denominator == 0.0:
        return 1.0 if sq_cells == sq_a == sq_b else 0.0
    return (sq_cells - expected) / denominator


def _ratio(numerator: float, denominator: float) -> float:
    if denominator <= 0.0:
        return 0.0
    return min(max(numerator / denominator, 0.0), 1.0)


def _count_measure(measure: MeasureId, table: ContingencyTable) -> float:
    if measure == MeasureId.ARI2:
        return _ari2(table)
    pc = pair_counts(table)
    if measure == MeasureId.RI:
        total = pc.total
        return 1.0 if total == 0 else (pc.n00 + pc.n11) / total
    if measure == MeasureId.ARI1:
        return _ari1(pc)
    if measure == MeasureId.FM:
        return _ratio(pc.n11, math.sqrt(float(pc.n11 + pc.n10) * float(pc.n11 + pc.n01)))
    # JACC
    return _ratio(pc.n11, pc.n11 + pc.n10 + pc.n01)


def _information_measure(measure: MeasureId, table: ContingencyTable) -> float:
    h_a = partition_entropy(table.row_sums)
    h_b = partition_entropy(table.col_sums)
    h_ab = partition_entropy(table.counts.ravel())
    mi = min(mutual_information(table), h_a, h_b)

    if measure == MeasureId.MI:
        return mi
    if measure == MeasureId.AMI:
        emi = expected_mutual_information(table)
        denominator = max(h_a, h_b) - emi
        if denominator <= _AMI_TOLERANCE:
            return 1.0 if mi >= max(h_a, h_b) - _AMI_TOLERANCE else 0.0
        return min((mi - emi) / denominator, 1.0)
    if measure == MeasureId.VI:
        return max(h_ab - mi, 0.0)
    if measure == MeasureId.NVI:
        return 1.0 - _ratio(mi, h_ab)
    if measure == MeasureId.ID:
        return max(max(h_a, h_b) - mi, 0.0)
    if measure == MeasureId.NID:
        return 1.0 - _ratio(mi, max(h_a, h_b))
    if measure == MeasureId.NMI1:
        return _ratio(mi, max(h_a, h_b))
    if measure == MeasureId.NMI2:
        return _ratio(mi, min(h_a, h_b))
    if measure == MeasureId.NMI3:
        return _ratio(mi, math.sqrt(h_a * h_b))
    if measure == MeasureId.NMI4:
        return _ratio(2.0 * mi, h_a + h_b)
    # NMI5
    return _ratio(mi, h_ab)


def compare_table(measure: MeasureId | str, table: ContingencyTable) -> float:
    """Evaluate ``measure`` on a precomputed contingency table."""
    measure = MeasureId.parse(measure)
    if np.count_nonzero(table.row_sums) <= 1 and np.count_nonzero(table.col_sums) <= 1:
        return 0.0 if measure.is_dissimilarity or measure == MeasureId.MI else 1.0
    if measure.is_count_based:
        return float(_count_measure(measure, table))
    return float(_information_measure(measure, table))


def compare(measure: MeasureId | str, a: Partition, b: Partition) -> float:
    """Score the agreement of two partitions of the same samples.

    Args:
        measure: One of the sixteen ``MeasureId`` values (names are
            case-insensitive).
        a: First partition.
        b: Second partition over the same, index-aligned samples.

    Returns:
        The raw measure value in its own orientation: VI, NVI, ID and NID are
        distances, everything else a similarity.

    Raises:
        DataError: Length mismatch.
        ValueError: Unknown measure name.
    """
    return compare_table(measure, contingency(a, b))


def similarity(measure: MeasureId | str, a: Partition, b: Partition) -> float:
    """Like ``compare`` but oriented so that larger always means more similar.

    NVI and NID become ``1 - d``; VI and ID become ``-d``.
    """
    measure = MeasureId.parse(measure)
    value = compare(measure, a, b)
    if measure in (MeasureId.NVI, MeasureId.NID):
        return 1.0 - value
    if measure in (MeasureId.VI, MeasureId.ID):
        return -value
    return value
