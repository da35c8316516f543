"""QI-match inference attack, statistical baseline and full-record matches."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, Kind
from .metrics.binning import category_ids

DEFAULT_QI = ("EDU", "SEX", "RAC1P", "PUMA", "OWN_RENT", "INDP_CAT", "HISP", "MSP")

# Baseline hyperparameters: inverse regularization strength and iteration cap.
BASELINE_C = 0.01
BASELINE_ITERS = 100
# Row count the L1 weight is normalized against, so lambda = 1 / (C * rows).
PENALTY_ROWS = 10_000


@dataclass(frozen=True)
class AttackConfig:
    qi: tuple[str, ...] = ()
    targets: tuple[str, ...] = ()
    split: float = 0.5
    seed: int = 0

    def __post_init__(self):
        overlap = set(self.qi) & set(self.targets)
        if overlap:
            raise ValueError(f"columns {sorted(overlap)} are both QI and target")
        if not 0 < self.split < 1:
            raise ValueError("split must lie strictly between 0 and 1")

    @classmethod
    def for_columns(cls, columns: Sequence[str], qi=None, targets=None, split=0.5, seed=0) -> AttackConfig:
        """Fill defaults: the standard QI list restricted to ``columns``, all other columns as targets."""
        qi = tuple(c for c in DEFAULT_QI if c in columns) if qi is None else tuple(qi)
        if targets is None:
            targets = tuple(c for c in columns if c not in qi)
        return cls(qi, tuple(targets), split, seed)

    @classmethod
    def from_json(cls, obj: dict, columns: Sequence[str]) -> AttackConfig:
        return cls.for_columns(columns, obj.get("qi"), obj.get("targets"),
                               obj.get("split", 0.5), obj.get("seed", 0))

    @classmethod
    def load(cls, path: str | Path, columns: Sequence[str]) -> AttackConfig:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")), columns)

    def check(self, columns: Sequence[str]) -> None:
        if not self.qi:
            raise ValueError("attack needs at least one QI column")
        unknown = [c for c in (*self.qi, *self.targets) if c not in columns]
        if unknown:
            raise KeyError(f"attack references unknown columns {unknown}")


@dataclass(frozen=True)
class AttackResult:
    target: str
    p_atk: float | None
    p_base: float
    pi: float | None
    coverage: float
    match_count: int
    flags: tuple[str, ...] = ()
    # Diagnostic: the baseline model's accuracy on the same rows the attack predicted.
    p_base_matched: float | None = None

    @property
    def label(self) -> str:
        return classify_pi(self.pi)


@dataclass(frozen=True)
class FullMatchResult:
    count: int
    percent: float


def precision_improvement(p_atk: float, p_base: float) -> tuple[float, bool]:
    """PI = (P_atk - P_base) / (1 - P_base); returns (PI, flagged), flagged-zero when P_base is 1."""
    if p_base >= 1.0:
        return 0.0, True
    return (p_atk - p_base) / (1.0 - p_base), False


def classify_pi(pi: float | None) -> str:
    if pi is None:
        return "undefined"
    if pi <= 0:
        return "no privacy loss"
    return "strong anonymity" if pi < 0.5 else "weak anonymity"


def _row_keys(m: np.ndarray) -> list[tuple]:
    return [tuple(r) for r in m.tolist()]


def aligned_columns(orig: Dataset, syn: Dataset, columns: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Value matrices of both tables with categorical codes matched on decoded value."""
    o_cols, s_cols = [], []
    for c in columns:
        if orig.kind(c) is Kind.CATEGORICAL:
            o, s = category_ids(orig, syn, c)
        else:
            o, s = orig.column(c), syn.column(c)
        o_cols.append(np.asarray(o, dtype=np.float64))
        s_cols.append(np.asarray(s, dtype=np.float64))
    return (np.column_stack(o_cols) if o_cols else np.zeros((orig.row_count, 0)),
            np.column_stack(s_cols) if s_cols else np.zeros((syn.row_count, 0)))


def attack_predictions(orig: Dataset, syn: Dataset, qi: Sequence[str], target: str) -> tuple[np.ndarray, np.ndarray]:
    """Original rows whose QI tuple matches exactly one synthetic row, and that row's target value.

    Predicted values are in the original's encoding (unseen synthetic categories get fresh codes).
    """
    qi = list(qi)
    o_mat, s_mat = aligned_columns(orig, syn, [*qi, target])
    syn_keys = _row_keys(s_mat[:, :-1])
    count = Counter(syn_keys)
    unique = {k: i for i, k in enumerate(syn_keys) if count[k] == 1}
    rows, src = [], []
    for i, k in enumerate(_row_keys(o_mat[:, :-1])):
        j = unique.get(k)
        if j is not None:
            rows.append(i)
            src.append(j)
    return np.array(rows, dtype=np.intp), s_mat[np.array(src, dtype=np.intp), -1]


def attack_matches(orig: Dataset, syn: Dataset, qi: Sequence[str], target: str) -> tuple[int, int]:
    """(predictions, correct) of the unique-QI-match attack on one target."""
    rows, pred = attack_predictions(orig, syn, qi, target)
    return len(rows), int(np.sum(pred == orig.column(target)[rows]))


def one_hot(orig: Dataset, columns: Sequence[str]) -> np.ndarray:
    blocks = []
    for c in columns:
        v = orig.column(c)
        levels = np.unique(v)
        blocks.append((v[:, None] == levels[None, :]).astype(np.float64))
    return np.hstack(blocks)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def fit_l1_multinomial(X: np.ndarray, y: np.ndarray, n_classes: int, lam: float,
                       iters: int = BASELINE_ITERS) -> tuple[np.ndarray, np.ndarray]:
    """Accelerated proximal gradient on mean cross-entropy + lam * |W|_1.

    Step size is 1/L with L = 0.5 * sigma_max([X, 1])^2 / n, a Lipschitz bound
    for the softmax loss gradient. The intercept is not penalized.
    """
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    L = 0.5 * np.linalg.norm(Xb, 2) ** 2 / n
    step = 1.0 / L
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    W = np.zeros((d + 1, n_classes))
    V, t = W.copy(), 1.0
    for _ in range(iters):
        grad = Xb.T @ (_softmax(Xb @ V) - Y) / n
        Wn = V - step * grad
        Wn[:d] = np.sign(Wn[:d]) * np.maximum(np.abs(Wn[:d]) - step * lam, 0.0)
        tn = (1 + np.sqrt(1 + 4 * t * t)) / 2
        V = Wn + ((t - 1) / tn) * (Wn - W)
        W, t = Wn, tn
    return W[:d], W[d]


def split_rows(n: int, frac: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(n * frac))
    return perm[:k], perm[k:]


def baseline_predictions(orig: Dataset, cfg: AttackConfig, target: str) -> tuple[float, np.ndarray]:
    """Train on one split of the original, score on the other; also predict every row."""
    train, test = split_rows(orig.row_count, cfg.split, cfg.seed)
    if len(train) == 0 or len(test) == 0:
        raise ValueError("degenerate train/test split")
    X = one_hot(orig, cfg.qi)
    t = orig.column(target)
    classes, y_train = np.unique(t[train], return_inverse=True)
    if len(classes) < 2:
        pred = np.full(orig.row_count, classes[0])
    else:
        lam = 1.0 / (BASELINE_C * PENALTY_ROWS)
        W, b = fit_l1_multinomial(X[train], y_train, len(classes), lam)
        pred = classes[np.argmax(X @ W + b, axis=1)]
    return float(np.mean(pred[test] == t[test])), pred


def baseline_precision(orig: Dataset, cfg: AttackConfig, target: str) -> float:
    """Accuracy of an L1 multinomial logit trained on one half of the original, tested on the other."""
    return baseline_predictions(orig, cfg, target)[0]


def qi_attack(orig: Dataset, syn_store, cfg: AttackConfig) -> list[AttackResult]:
    """Run the attack per target against the table holding QI plus that target."""
    cfg.check(orig.columns)
    out = []
    n = orig.row_count
    for target in cfg.targets:
        syn = syn_store.fetch([*cfg.qi, target])
        rows, pred = attack_predictions(orig, syn, cfg.qi, target)
        truth = orig.column(target)[rows]
        p_base, base_pred = baseline_predictions(orig, cfg, target)
        made = len(rows)
        flags = []
        if made == 0:
            p_atk = pi = p_base_matched = None
            flags.append("no_predictions")
        else:
            p_atk = float(np.mean(pred == truth))
            p_base_matched = float(np.mean(base_pred[rows] == truth))
            pi, capped = precision_improvement(p_atk, p_base)
            if capped:
                flags.append("baseline_perfect")
        out.append(AttackResult(target, p_atk, p_base, pi, made / n if n else 0.0, made,
                                tuple(flags), p_base_matched))
    return out


def full_match_count(orig: Dataset, syn_full: Dataset) -> FullMatchResult:
    """Records unique in both tables and identical across them."""
    if sorted(orig.columns) != sorted(syn_full.columns):
        raise ValueError("full-record matching needs identical column sets")
    o_mat, s_mat = aligned_columns(orig, syn_full, orig.columns)
    co = Counter(_row_keys(o_mat))
    cs = Counter(_row_keys(s_mat))
    count = sum(1 for k, v in co.items() if v == 1 and cs.get(k) == 1)
    n = orig.row_count
    return FullMatchResult(count, 100.0 * count / n if n else 0.0)
