#
# Synthetic domain pairs and minibatch samplers
#
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from sklearn.datasets import make_blobs, make_moons

from otda.exceptions import DimensionError, ValidationError
from otda.measures import DiscreteMeasure

GENERATORS = ("clusters", "blobs", "moons")
DOMAINS = ("source", "target")
# point of central symmetry of the two-moons construction
MOONS_CENTER = (0.5, 0.25)


@dataclass(frozen=True)
class LabeledDataset:
    """Labeled point cloud of one domain.

    Parameters
    ----------
    points : array-like, shape (n, d)
    labels : array-like of int, shape (n,)
        Class indices in ``0..class_count - 1``.
    class_count : int
        Number of classes ``K`` of the task, including classes absent here.
    domain_tag : {"source", "target"}
    """

    points: np.ndarray
    labels: np.ndarray
    class_count: int
    domain_tag: str = "source"

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        labels = np.asarray(self.labels, dtype=int).reshape(-1)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        if points.shape[0] < 1:
            msg = "a dataset needs at least one point"
            raise ValidationError(msg)
        if labels.shape[0] != points.shape[0]:
            msg = f"{points.shape[0]} points but {labels.shape[0]} labels"
            raise DimensionError(msg)
        if labels.min() < 0 or labels.max() >= self.class_count:
            msg = f"labels must lie in 0..{self.class_count - 1}"
            raise ValidationError(msg)
        if self.domain_tag not in DOMAINS:
            msg = f"unknown domain {self.domain_tag!r}"
            raise ValidationError(msg)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def class_histogram(self):
        return np.bincount(self.labels, minlength=self.class_count)

    def one_hot(self, indices=None):
        labels = self.labels if indices is None else self.labels[indices]
        return np.eye(self.class_count)[labels]

    def to_measure(self, indices=None):
        """Uniform probability measure on the points, with labels attached."""
        indices = np.arange(len(self)) if indices is None else np.asarray(indices, dtype=int)
        return DiscreteMeasure.uniform(
            self.points[indices], labels=self.labels[indices], one_hot=self.one_hot(indices)
        )

    def rows(self):
        """CSV rows ``x0..x{d-1}, label, domain``."""
        for point, label in zip(self.points, self.labels):
            row = {f"x{i}": float(x) for i, x in enumerate(point)}
            row["label"] = int(label)
            row["domain"] = self.domain_tag
            yield row


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of a synthetic domain pair.

    Parameters
    ----------
    generator : {"clusters", "blobs", "moons"}
    samples_per_class : tuple of int
        Source counts per class. Their number sets ``K``.
    target_samples_per_class : tuple of int, optional
        Target counts per class, the source counts when omitted.
    centers : tuple of tuple of float, optional
        Blob means, ``K`` points on a circle of radius 3 when omitted.
    cluster_std : float
        Standard deviation of every blob.
    shift : tuple of float
        Translation of the target blob means.
    rotation : float
        Target rotation in degrees, about the centroid of the blob means or
        about the symmetry centre of the moons.
    dropped_classes : tuple of int
        Classes removed from the target (partial domain adaptation).
    noise : float
        Noise of the moons generator.
    test_samples_per_class : tuple of int, optional
        Counts of a held-out target test set drawn from the target law.
    seed : int
    """

    generator: str = "blobs"
    samples_per_class: tuple = (100, 100, 100)
    target_samples_per_class: tuple | None = None
    centers: tuple | None = None
    cluster_std: float = 0.8
    shift: tuple = (0.0, 0.0)
    rotation: float = 0.0
    dropped_classes: tuple = ()
    noise: float = 0.1
    test_samples_per_class: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.generator not in GENERATORS:
            msg = f"unknown generator {self.generator!r}, expected one of {GENERATORS}"
            raise ValidationError(msg)
        K = len(self.samples_per_class)
        for name in ("samples_per_class", "target_samples_per_class", "test_samples_per_class"):
            counts = getattr(self, name)
            if counts is None:
                continue
            if len(counts) != K:
                msg = f"{name} must list {K} counts"
                raise ValidationError(msg)
            if any(int(c) != c or c < 0 for c in counts):
                msg = f"{name} must hold nonnegative integers"
                raise ValidationError(msg)
        if any(not 0 <= k < K for k in self.dropped_classes):
            msg = f"dropped classes must lie in 0..{K - 1}"
            raise ValidationError(msg)
        if self.generator == "moons" and K != 2:
            msg = "the moons generator has two classes"
            raise ValidationError(msg)
        if self.centers is not None and len(self.centers) != K:
            msg = f"centers must list {K} means"
            raise ValidationError(msg)
        if not self.cluster_std > 0 or self.noise < 0:
            msg = "cluster_std must be positive and noise nonnegative"
            raise ValidationError(msg)

    @property
    def class_count(self):
        return len(self.samples_per_class)

    def target_counts(self):
        counts = list(self.target_samples_per_class or self.samples_per_class)
        for k in self.dropped_classes:
            counts[k] = 0
        return counts


@dataclass(frozen=True)
class Scenario:
    """Generated domain pair, with an optional held-out target test set."""

    source: LabeledDataset
    target: LabeledDataset
    target_test: LabeledDataset | None = None

    def datasets(self):
        return [ds for ds in (self.source, self.target, self.target_test) if ds is not None]


def _seeds(seed, count):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def _rotation_matrix(degrees):
    theta = np.deg2rad(degrees)
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


def _default_centers(K):
    angles = np.pi / 2 + 2 * np.pi * np.arange(K) / K
    return 3.0 * np.column_stack([np.cos(angles), np.sin(angles)])


def _blobs(counts, centers, std, random_state, class_count, domain):
    """Gaussian blobs with ``counts[k]`` points around ``centers[k]``."""
    present = np.flatnonzero(np.asarray(counts) > 0)
    if present.size == 0:
        msg = f"{domain} counts are all zero"
        raise ValidationError(msg)
    X, y = make_blobs(
        n_samples=[int(counts[k]) for k in present],
        centers=np.asarray(centers, dtype=float)[present],
        cluster_std=std,
        random_state=random_state,
    )
    return LabeledDataset(X, present[y], class_count, domain)


def gen_clusters_scenario(seed=0):
    """Partial domain adaptation toy problem with three tight 2-D clusters.

    The source has four points in each of three classes; the target has ten
    points of class 0, two of class 1, and none of class 2, drawn from the
    same cluster laws. Cluster means sit on an equilateral triangle of side 5
    with standard deviation 0.3.
    """
    side = 5.0
    centers = np.array([[0.0, 0.0], [side, 0.0], [side / 2, side * np.sqrt(3) / 2]])
    source_seed, target_seed = _seeds(seed, 2)
    source = _blobs((4, 4, 4), centers, 0.3, source_seed, 3, "source")
    target = _blobs((10, 2, 0), centers, 0.3, target_seed, 3, "target")
    return source, target


def gen_blobs_pair(cfg):
    """Gaussian blobs with label shift, a shifted and rotated target, and dropped classes."""
    K = cfg.class_count
    centers = _default_centers(K) if cfg.centers is None else np.asarray(cfg.centers, dtype=float)
    if centers.shape[1] != 2 and (cfg.rotation or any(cfg.shift)):
        msg = "shift and rotation need two-dimensional centers"
        raise ValidationError(msg)
    target_centers = centers
    if centers.shape[1] == 2:
        centroid = centers.mean(axis=0)
        target_centers = (centers - centroid) @ _rotation_matrix(cfg.rotation).T + centroid
        target_centers = target_centers + np.asarray(cfg.shift, dtype=float)
    source_seed, target_seed = _seeds(cfg.seed, 2)
    source = _blobs(cfg.samples_per_class, centers, cfg.cluster_std, source_seed, K, "source")
    target = _blobs(cfg.target_counts(), target_centers, cfg.cluster_std, target_seed, K, "target")
    return source, target


def _moons(counts, noise, random_state, domain):
    X, y = make_moons(
        n_samples=(int(counts[0]), int(counts[1])), noise=noise, random_state=random_state
    )
    return LabeledDataset(X, y, 2, domain)


def gen_moons_pair(cfg):
    """Two moons, the target rotated about the symmetry centre of the construction."""
    counts = cfg.target_counts()
    if sum(counts) == 0:
        msg = "target counts are all zero"
        raise ValidationError(msg)
    source_seed, target_seed = _seeds(cfg.seed, 2)
    source = _moons(cfg.samples_per_class, cfg.noise, source_seed, "source")
    target = _moons(counts, cfg.noise, target_seed, "target")
    center = np.asarray(MOONS_CENTER)
    rotated = (target.points - center) @ _rotation_matrix(cfg.rotation).T + center
    return source, replace(target, points=rotated)


def generate_scenario(cfg):
    """Domain pair described by ``cfg``, plus its target test set when configured."""
    if cfg.generator == "clusters":
        source, target = gen_clusters_scenario(cfg.seed)
    elif cfg.generator == "blobs":
        source, target = gen_blobs_pair(cfg)
    else:
        source, target = gen_moons_pair(cfg)
    target_test = None
    if cfg.test_samples_per_class is not None:
        if cfg.generator == "clusters":
            msg = "the clusters scenario has no test set"
            raise ValidationError(msg)
        test_cfg = replace(
            cfg,
            target_samples_per_class=cfg.test_samples_per_class,
            seed=_seeds(cfg.seed, 3)[2],
        )
        generate = gen_moons_pair if cfg.generator == "moons" else gen_blobs_pair
        target_test = generate(test_cfg)[1]
    return Scenario(source, target, target_test)


def class_quota(class_count, m):
    """Per-class count of a stratified batch of size ``m``; the remainder is dropped."""
    quota = m // class_count
    if quota < 1:
        msg = f"batch size {m} is smaller than the class count {class_count}"
        raise ValidationError(msg)
    return quota


def class_overlap(p, q):
    """Shared mass ``sum_k min(p_k, q_k)`` of two class histograms, each normalized."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        msg = f"histograms of lengths {p.shape[0]} and {q.shape[0]}"
        raise DimensionError(msg)
    if not (p.sum() > 0 and q.sum() > 0):
        msg = "class histograms need positive mass"
        raise ValidationError(msg)
    return float(np.minimum(p / p.sum(), q / q.sum()).sum())


def balanced_transport_ceiling(cfg, stratified=True):
    """Target accuracy above which balanced batch transport has to mislabel.

    A balanced plan moves the source class proportions of a batch onto the
    target ones, so a classifier that follows the plan predicts the source
    proportions and is right on at most the overlap of both histograms.
    Stratified batches carry every class equally.
    """
    K = cfg.class_count
    source = np.ones(K) if stratified else cfg.samples_per_class
    target = cfg.test_samples_per_class or cfg.target_counts()
    return class_overlap(source, target)


def _class_members(labels, class_count, quota):
    members = [np.flatnonzero(labels == k) for k in range(class_count)]
    for k, idx in enumerate(members):
        if idx.size < quota:
            msg = f"class {k} has {idx.size} samples, fewer than the quota {quota}"
            raise ValidationError(msg)
    return members


def stratified_indices(labels, class_count, m, rng):
    """One stratified draw: ``m // K`` indices of every class, without replacement."""
    labels = np.asarray(labels, dtype=int)
    quota = class_quota(class_count, m)
    members = _class_members(labels, class_count, quota)
    return np.sort(np.concatenate([rng.choice(idx, quota, replace=False) for idx in members]))


def stratified_batches(ds, m, rng):
    """Stratified batches covering one epoch of ``ds``.

    Every batch holds ``m // K`` samples of each class. Classes are shuffled
    independently and consumed without replacement; the epoch ends when the
    smallest class runs out.

    Returns
    -------
    list of numpy.ndarray
    """
    quota = class_quota(ds.class_count, m)
    members = [rng.permutation(idx) for idx in _class_members(ds.labels, ds.class_count, quota)]
    num_batches = min(idx.size for idx in members) // quota
    return [
        np.concatenate([idx[b * quota : (b + 1) * quota] for idx in members])
        for b in range(num_batches)
    ]


def random_batches(n, m, rng):
    """Uniform batches of size ``m`` covering one shuffled epoch of ``n`` samples."""
    if not 1 <= m <= n:
        msg = f"batch size {m} must lie in 1..{n}"
        raise ValidationError(msg)
    order = rng.permutation(n)
    return [order[b * m : (b + 1) * m] for b in range(n // m)]


class BatchStream:
    """Endless stream of uniform batches, reshuffled whenever an epoch is exhausted."""

    def __init__(self, n, m, rng):
        if not 1 <= m <= n:
            msg = f"batch size {m} must lie in 1..{n}"
            raise ValidationError(msg)
        self.n = n
        self.m = m
        self.rng = rng
        self._pending = []

    def __iter__(self):
        return self

    def __next__(self):
        if not self._pending:
            self._pending = random_batches(self.n, self.m, self.rng)[::-1]
        return self._pending.pop()
