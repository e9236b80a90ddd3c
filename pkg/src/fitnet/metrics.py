"""Confusion matrix and per-class / macro F1 for the three fit classes."""
from __future__ import annotations

import numpy as np


def confusion_matrix(y_true, y_pred) -> np.ndarray:
    """3x3 counts; rows are true labels, columns predictions."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    cm = np.zeros((3, 3), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def scores_from_confusion(cm: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class precision, recall and F1; 0 wherever the denominator is 0."""
    cm = np.asarray(cm, dtype=np.float64)
    tp = np.diag(cm)
    pred_pos = cm.sum(axis=0)
    true_pos = cm.sum(axis=1)
    precision = np.divide(tp, pred_pos, out=np.zeros(3), where=pred_pos > 0)
    recall = np.divide(tp, true_pos, out=np.zeros(3), where=true_pos > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(3), where=denom > 0)
    return precision, recall, f1


def macro_f1_score(y_true, y_pred) -> float:
    return float(scores_from_confusion(confusion_matrix(y_true, y_pred))[2].mean())
