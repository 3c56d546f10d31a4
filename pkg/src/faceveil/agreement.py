"""Rating aggregation: unanimity gate, Fleiss's kappa, mean scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyGroup

REALISM_OPTIONS = ("A", "B", "C")  # very / moderately / not at all realistic
REALISM_SCORES = {"A": 3, "B": 2, "C": 1}
JUDGMENT_SCORES = {"yes": 1, "no": 0}


def fleiss_kappa(table: np.ndarray, n_raters: int) -> tuple[float, bool]:
    """Chance-corrected multi-rater agreement over an item x category
    count table. Returns (kappa, degenerate): when expected agreement is
    1 (all ratings in one category) agreement is perfect by definition,
    so kappa is reported as 1.0 with the degenerate flag set."""
    table = np.asarray(table, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] < 1:
        raise ValueError("table must be (n_items, n_categories)")
    if n_raters < 2:
        raise ValueError("need at least 2 raters")
    if not np.allclose(table.sum(axis=1), n_raters):
        raise ValueError("every row must sum to n_raters")

    n_items = table.shape[0]
    p_i = (np.sum(table ** 2, axis=1) - n_raters) / (n_raters * (n_raters - 1))
    p_bar = float(p_i.mean())
    p_j = table.sum(axis=0) / (n_items * n_raters)
    p_e = float(np.sum(p_j ** 2))
    if np.isclose(p_e, 1.0):
        return 1.0, True
    return (p_bar - p_e) / (1.0 - p_e), False


def gate_for_clinical_review(ratings: dict, roster: list[str],
                             required_raters: int
                             ) -> tuple[list[str], list[str]]:
    """Split the roster into (unanimously-A videos, incomplete videos).

    ``ratings`` maps video_id -> {rater_id: option}. Videos rated by
    fewer than ``required_raters`` raters are excluded and reported.
    """
    selected, incomplete = [], []
    for video_id in roster:
        by_rater = ratings.get(video_id, {})
        if len(by_rater) < required_raters:
            incomplete.append(video_id)
        elif all(opt == "A" for opt in by_rater.values()):
            selected.append(video_id)
    return selected, incomplete


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    degenerate_kappa: bool
    mean_score: float
    std_score: float
    n_items: int
    n_raters: int
    category_proportions: dict

    def to_json(self) -> dict:
        return {
            "kappa": self.kappa,
            "degenerate_kappa": self.degenerate_kappa,
            "mean_score": self.mean_score,
            "std_score": self.std_score,
            "n_items": self.n_items,
            "n_raters": self.n_raters,
            "category_proportions": self.category_proportions,
        }


def aggregate_scores(scores: list[float]) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    if not scores:
        raise EmptyGroup("no scores to aggregate")
    arr = np.asarray(scores, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def build_agreement_report(ratings_by_item: dict, categories: tuple,
                           score_map: dict) -> AgreementReport:
    """Full report from item -> {rater: option} over complete items."""
    items = [v for v in ratings_by_item.values() if v]
    if not items:
        raise EmptyGroup("no rated items")
    n_raters = len(items[0])
    if any(len(v) != n_raters for v in items):
        raise ValueError("items rated by differing rater counts")
    table = np.array([
        [sum(1 for opt in v.values() if opt == cat) for cat in categories]
        for v in items
    ])
    kappa, degenerate = fleiss_kappa(table, n_raters)
    scores = [score_map[opt] for v in items for opt in v.values()]
    mean, std = aggregate_scores(scores)
    totals = table.sum(axis=0)
    props = {cat: float(t) / float(totals.sum())
             for cat, t in zip(categories, totals)}
    return AgreementReport(kappa, degenerate, mean, std, len(items), n_raters,
                           props)
