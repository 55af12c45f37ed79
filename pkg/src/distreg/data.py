"""Paired covariate/response samples and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """i.i.d. pairs ``(X_i, Y_i)`` with declared ambient and intrinsic dimensions.

    ``X`` has shape ``(n, D_X)`` and ``Y`` has shape ``(n, D_Y)``.
    """

    X: np.ndarray
    Y: np.ndarray
    d_X: int | None = None
    d_Y: int | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if X.shape[0] != Y.shape[0]:
            # a (1, m) array from atleast_2d on an empty input
            if X.size == 0 and Y.size == 0:
                X = X.reshape(0, max(X.shape[-1], 1))
                Y = Y.reshape(0, max(Y.shape[-1], 1))
            else:
                raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def empty(cls, D_X: int, D_Y: int, d_X=None, d_Y=None) -> "Dataset":
        return cls(np.zeros((0, D_X)), np.zeros((0, D_Y)), d_X, d_Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def D_X(self) -> int:
        return self.X.shape[1]

    @property
    def D_Y(self) -> int:
        return self.Y.shape[1]

    def __len__(self):
        return self.n

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.Y[rows], self.d_X, self.d_Y)

    def split(self) -> tuple["Dataset", "Dataset"]:
        """First ``floor(n/2)`` samples and the remainder."""
        h = self.n // 2
        return self.subset(slice(0, h)), self.subset(slice(h, None))

    def to_csv(self, path) -> None:
        header = [f"x_{i + 1}" for i in range(self.D_X)]
        header += [f"y_{i + 1}" for i in range(self.D_Y)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for x, y in zip(self.X, self.Y):
                w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y])

    @classmethod
    def from_csv(cls, path, d_X=None, d_Y=None) -> "Dataset":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        xcols = [i for i, h in enumerate(header) if h.startswith("x_")]
        ycols = [i for i, h in enumerate(header) if h.startswith("y_")]
        arr = np.array([[float(v) for v in r] for r in body], dtype=float)
        if arr.size == 0:
            return cls.empty(len(xcols), len(ycols), d_X, d_Y)
        return cls(arr[:, xcols], arr[:, ycols], d_X, d_Y)


def write_points_csv(path, points: np.ndarray, prefix: str = "y") -> None:
    points = np.atleast_2d(points)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{prefix}_{i + 1}" for i in range(points.shape[1])])
        for p in points:
            w.writerow([repr(float(v)) for v in p])


def read_points_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) <= 1:
        return np.zeros((0, len(rows[0]) if rows else 1))
    return np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
