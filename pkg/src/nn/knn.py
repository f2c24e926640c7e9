"""
Brute-force k-nearest-neighbour baseline on flat feature vectors.
"""

import logging

import numpy as np
from scipy.spatial import distance

from src.errors import ConfigurationError, ShapeError

logger = logging.getLogger(__name__)


def knn_predict(
    train_x: np.ndarray, train_y: np.ndarray, query_x: np.ndarray, k: int
) -> np.ndarray:
    """
    Majority vote among the k Euclidean nearest training samples.

    Neighbours at equal distance are taken in training order; vote ties
    go to the smallest class index.

    Args:
        train_x: ``samples x features`` training vectors
        train_y: Integer labels of the training vectors
        query_x: ``queries x features`` vectors to classify
        k: Neighbour count (1 <= k <= training size)

    Returns:
        Predicted label per query

    Raises:
        ConfigurationError: If the training set is empty or k is out of range
    """
    train_x = np.atleast_2d(np.asarray(train_x, dtype=np.float64))
    query_x = np.atleast_2d(np.asarray(query_x, dtype=np.float64))
    train_y = np.asarray(train_y, dtype=np.int64)
    if train_x.shape[0] == 0 or train_x.size == 0:
        raise ConfigurationError("k-NN needs a non-empty training set")
    if not 1 <= k <= train_x.shape[0]:
        raise ConfigurationError(f"k must be in [1, {train_x.shape[0]}], got {k}")
    if train_y.shape != (train_x.shape[0],):
        raise ShapeError(f"{train_x.shape[0]} training vectors but labels of shape {train_y.shape}")
    if query_x.shape[1] != train_x.shape[1]:
        raise ShapeError(
            f"Query dimension {query_x.shape[1]} differs from training dimension {train_x.shape[1]}"
        )

    dists = distance.cdist(query_x, train_x, metric="sqeuclidean")
    nearest = np.argsort(dists, axis=1, kind="stable")[:, :k]
    votes = train_y[nearest]
    num_classes = int(train_y.max()) + 1
    counts = np.apply_along_axis(np.bincount, 1, votes, minlength=num_classes)
    return np.argmax(counts, axis=1)


def knn_baseline(
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    test_y: np.ndarray,
    k: int = 5,
) -> float:
    """
    Accuracy of the k-NN classifier on a test set.

    Returns:
        Fraction of correctly classified test samples
    """
    predictions = knn_predict(train_x, train_y, test_x, k)
    accuracy = float(np.mean(predictions == np.asarray(test_y)))
    logger.info(f"k-NN (k={k}) accuracy {accuracy:.4f} on {len(predictions)} samples")
    return accuracy
