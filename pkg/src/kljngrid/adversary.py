"""Passive eavesdropper: same channel statistics, no resistor knowledge."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence, Union

import numpy as np
from scipy import stats

from .exchange import (Channel, ChannelRecord, NoiseParams, estimate_loop_resistance, mean_squares,
                       simulate_slot)

STATISTICS = ("r_loop_estimate", "u_mean_square", "i_mean_square")
MIN_GUESS_SAMPLES = 1000


@dataclass(frozen=True)
class EveObservation:
    r_loop_estimate: float
    u_mean_square: float
    i_mean_square: float
    slot_index: int = 0


def eve_observe(record: ChannelRecord, params: NoiseParams, slot_index: int = 0) -> EveObservation:
    u2, i2 = mean_squares(record)
    r_hat = estimate_loop_resistance(record, params, Channel.BOTH)
    return EveObservation(r_hat, u2, i2, slot_index)


@dataclass(frozen=True)
class GuessResult:
    accuracy: float
    ci_low: float
    ci_high: float
    confidence: float
    statistic: str
    threshold: float
    below_is_positive: bool
    n_train: int
    n_test: int

    def contains(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high

    def as_dict(self) -> dict:
        return asdict(self)


def _fit_threshold(x: np.ndarray, y: np.ndarray) -> tuple[float, bool, float]:
    """Best split of sorted ``x`` for boolean labels ``y``.

    Returns (threshold, below_is_positive, train accuracy).
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order].astype(int)
    n = len(xs)
    # k = number of points assigned "below"; k = 0..n
    pos_below = np.concatenate(([0], np.cumsum(ys)))
    k = np.arange(n + 1)
    neg_above = (n - ys.sum()) - (k - pos_below)
    acc_pos_below = (pos_below + neg_above) / n
    acc = np.maximum(acc_pos_below, 1 - acc_pos_below)
    best = int(np.argmax(acc))
    if best == 0:
        thr = xs[0] - 1.0
    elif best == n:
        thr = xs[-1] + 1.0
    else:
        thr = 0.5 * (xs[best - 1] + xs[best])
    return float(thr), bool(acc_pos_below[best] >= 0.5), float(acc[best])


def best_threshold_accuracy(observations: Sequence[EveObservation], labels: Sequence[bool],
                            confidence: float = 0.99, split_seed: int = 0) -> GuessResult:
    """Held-out accuracy of the best single-threshold classifier.

    A random half (fixed by ``split_seed``) picks the statistic, threshold
    and polarity; the other half scores it, so the binomial interval is
    honest.
    """
    if len(observations) != len(labels):
        raise ValueError("observations and labels differ in length")
    if len(observations) < 2:
        raise ValueError("need at least two observations")
    y = np.asarray(labels, dtype=bool)
    cols = {s: np.array([getattr(o, s) for o in observations], dtype=float) for s in STATISTICS}
    perm = np.random.default_rng(split_seed).permutation(y.size)
    train, test = perm[: y.size // 2], perm[y.size // 2:]

    best = None
    for name in STATISTICS:
        thr, below_pos, acc = _fit_threshold(cols[name][train], y[train])
        if best is None or acc > best[3]:
            best = (name, thr, below_pos, acc)
    name, thr, below_pos, _ = best

    x_test, y_test = cols[name][test], y[test]
    pred = (x_test < thr) if below_pos else (x_test >= thr)
    hits = int(np.sum(pred == y_test))
    n_test = int(y_test.size)
    ci = stats.binomtest(hits, n_test).proportion_ci(confidence_level=confidence, method="exact")
    return GuessResult(hits / n_test, float(ci.low), float(ci.high), confidence, name, thr,
                       below_pos, int(y[train].size), n_test)


def eve_guess_mixed_ordering(observations: Sequence[EveObservation], truth: Sequence[bool],
                             confidence: float = 0.99,
                             min_samples: int = MIN_GUESS_SAMPLES) -> GuessResult:
    """Eve's accuracy at telling R_L|R_H from R_H|R_L on mixed slots.

    ``truth[k]`` is True when slot ``k`` had Alice on R_L. It is the only
    ground truth this module ever sees and is used for scoring alone.
    """
    if len(observations) < min_samples:
        raise ValueError(f"need >= {min_samples} mixed-slot observations, got {len(observations)}")
    return best_threshold_accuracy(observations, truth, confidence)


@dataclass(frozen=True)
class IndistinguishabilityReport:
    n_lh: int
    n_hl: int
    p_value_u: float
    p_value_i: float
    effect_u: float  # common-language effect size P(LH > HL), 0.5 under the null
    effect_i: float

    @property
    def p_value(self) -> float:
        """Bonferroni-combined p-value over the two statistics."""
        return min(1.0, 2 * min(self.p_value_u, self.p_value_i))

    def rejects(self, alpha: float = 0.01) -> bool:
        return self.p_value < alpha

    def as_dict(self) -> dict:
        d = asdict(self)
        d["p_value"] = self.p_value
        return d


Observable = Union[ChannelRecord, EveObservation]


def _observe_all(items: Sequence[Observable], params: NoiseParams) -> list[EveObservation]:
    return [x if isinstance(x, EveObservation) else eve_observe(x, params, k)
            for k, x in enumerate(items)]


def _rank_test(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    if np.all(a == a[0]) and np.all(b == a[0]):
        return 1.0, 0.5
    res = stats.mannwhitneyu(a, b, alternative="two-sided")
    p = float(res.pvalue)
    if not np.isfinite(p):
        p = 1.0
    return p, float(res.statistic) / (a.size * b.size)


def indistinguishability_test(lh_records: Sequence[Observable], hl_records: Sequence[Observable],
                              params: NoiseParams) -> IndistinguishabilityReport:
    """Mann-Whitney test of LH vs HL slots on per-slot <U^2> and <I^2>."""
    if not lh_records or not hl_records:
        raise ValueError("both record collections must be non-empty")
    lh = _observe_all(lh_records, params)
    hl = _observe_all(hl_records, params)
    p_u, e_u = _rank_test(np.array([o.u_mean_square for o in lh]),
                          np.array([o.u_mean_square for o in hl]))
    p_i, e_i = _rank_test(np.array([o.i_mean_square for o in lh]),
                          np.array([o.i_mean_square for o in hl]))
    return IndistinguishabilityReport(len(lh), len(hl), p_u, p_i, e_u, e_i)


def observe_mixed_slots(n_slots: int, params: NoiseParams, rng: np.random.Generator,
                        ) -> tuple[list[EveObservation], list[bool]]:
    """Simulate ``n_slots`` mixed slots with random ordering and watch them.

    Returns Eve's observations and, separately, whether Alice held R_L.
    """
    obs, alice_low = [], []
    for k in range(n_slots):
        bit_a = int(rng.integers(0, 2))
        rec = simulate_slot(bit_a, 1 - bit_a, params, rng)
        obs.append(eve_observe(rec, params, k))
        alice_low.append(bit_a == 0)
    return obs, alice_low
