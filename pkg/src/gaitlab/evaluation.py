"""Evaluation harness: data splits, DBI/CCR metrics, experiments, synthetic data."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .exceptions import DegenerateDataError, FormatError
from .matching import (MetricModel, TemplateGallery, classify, fit_metric,
                       mahalanobis, mahalanobis_squared_many)
from .mmc import apply_transform, learn_transform_mmc

HOMOGENEOUS = "homogeneous"
HETEROGENEOUS = "heterogeneous"

EXPERIMENTS = ("A", "B", "C", "D")


@dataclass(frozen=True)
class SetupConfig:
    """One evaluation configuration: setup kind and class counts."""

    kind: str
    c_learn: int
    c_eval: int
    master_seed: int = 0
    repeats: int = 3

    def __post_init__(self):
        if self.kind not in (HOMOGENEOUS, HETEROGENEOUS):
            raise ValueError(f"unknown setup kind {self.kind!r}")
        if self.kind == HOMOGENEOUS and self.c_learn != self.c_eval:
            raise ValueError("homogeneous setup requires c_learn == c_eval")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


@dataclass(frozen=True)
class EvalRow:
    """One evaluated repeat (or per-configuration mean when repeat == 'mean')."""

    experiment: str
    setup: str
    c_learn: int
    c_eval: int
    repeat: object  # int, or the string "mean"
    seed: int
    d_hat: float
    dbi: float
    ccr: float


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]  # per-repeat rows, canonical order
    means: tuple[EvalRow, ...]  # one aggregate row per configuration


@dataclass(frozen=True)
class SynthParams:
    """Synthetic walker family: class means live in a shared low-dim subspace.

    `separation` scales the class-mean spread in units of the within-class
    noise deviation; `shared_dim` is the dimension of the subspace carrying
    identity information (the same subspace for every class, so features
    learned on some classes transfer to the others).
    """

    n_classes: int
    samples_per_class: int
    n_joints: int
    n_frames: int
    separation: float
    shared_dim: int = 4
    noise: float = 1.0

    def __post_init__(self):
        if min(self.n_classes, self.samples_per_class, self.n_joints,
               self.n_frames, self.shared_dim) < 1:
            raise ValueError("all counts must be >= 1")
        if self.separation < 0:
            raise ValueError("separation must be >= 0")
        if self.noise <= 0:
            raise ValueError("noise must be > 0")


def synth_dataset(params: SynthParams, seed: int) -> LabeledDataset:
    """Deterministic synthetic gait dataset with D = 3*J*T sample vectors."""
    rng = np.random.default_rng(seed)
    d = 3 * params.n_joints * params.n_frames
    k = min(params.shared_dim, d)
    basis, _ = np.linalg.qr(rng.standard_normal((d, k)))  # shared subspace
    coords = rng.standard_normal((params.n_classes, k))
    means = (params.separation * params.noise) * coords @ basis.T  # (C, d)
    samples = []
    labels = []
    for c in range(params.n_classes):
        noise = rng.standard_normal((params.samples_per_class, d)) * params.noise
        samples.append(means[c] + noise)
        labels.extend([f"id{c:03d}"] * params.samples_per_class)
    return LabeledDataset(samples=np.vstack(samples), labels=tuple(labels),
                          n_joints=params.n_joints, n_frames=params.n_frames)


def split_homogeneous(data: LabeledDataset, n_classes: int,
                      seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Select identities at random; 1/3 of each one's samples learn, 2/3 evaluate.

    Per selected identity, floor(N_c / 3) samples (at least 1) go to the
    learning part and the rest to the evaluation part; the two parts share
    identities but never samples.
    """
    if n_classes < 1 or data.n_classes < n_classes:
        raise ValueError(
            f"dataset has {data.n_classes} identities, {n_classes} requested")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(data.classes), size=n_classes, replace=False)
    learn_rows: list[int] = []
    eval_rows: list[int] = []
    for ci in chosen:
        rows = data.class_indices[data.classes[ci]]
        if rows.shape[0] < 3:
            raise ValueError(
                f"identity {data.classes[ci]!r} has {rows.shape[0]} samples; "
                "homogeneous split needs at least 3")
        take = max(1, rows.shape[0] // 3)
        perm = rng.permutation(rows.shape[0])
        learn_rows.extend(rows[perm[:take]])
        eval_rows.extend(rows[perm[take:]])
    return data.subset(sorted(learn_rows)), data.subset(sorted(eval_rows))


def split_heterogeneous(data: LabeledDataset, c_learn: int, c_eval: int,
                        seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjoint identity sets: all samples of c_learn identities learn, of
    c_eval other identities evaluate."""
    if c_learn < 1 or c_eval < 1:
        raise ValueError("class counts must be >= 1")
    if c_learn + c_eval > data.n_classes:
        raise ValueError(
            f"{c_learn} + {c_eval} identities requested, dataset has "
            f"{data.n_classes}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(data.classes))
    learn_ids = {data.classes[i] for i in perm[:c_learn]}
    eval_ids = {data.classes[i] for i in perm[c_learn:c_learn + c_eval]}
    learn_rows = [i for i, lab in enumerate(data.labels) if lab in learn_ids]
    eval_rows = [i for i, lab in enumerate(data.labels) if lab in eval_ids]
    return data.subset(learn_rows), data.subset(eval_rows)


def davies_bouldin(gallery: TemplateGallery, metric: MetricModel) -> float:
    """Davies-Bouldin index of the gallery's identity clusters.

    Per class, sigma is the mean distance of its templates to the class
    centroid; the index averages, over classes, the worst (sigma_c +
    sigma_c') / centroid-distance ratio.  All distances are Mahalanobis under
    `metric`.
    """
    n_classes = len(gallery.classes)
    if n_classes < 2:
        raise ValueError("at least 2 identity classes required")
    sigmas = np.empty(n_classes)
    for i, label in enumerate(gallery.classes):
        rows = gallery.templates[gallery.class_indices[label]]
        sq = mahalanobis_squared_many(metric, gallery.centroids[i], rows)
        sigmas[i] = np.sqrt(np.maximum(sq, 0.0)).mean()
    total = 0.0
    for i in range(n_classes):
        worst = 0.0
        for j in range(n_classes):
            if i == j:
                continue
            gap = mahalanobis(metric, gallery.centroids[i], gallery.centroids[j])
            if gap == 0.0:
                raise DegenerateDataError(
                    f"coincident centroids for classes {gallery.classes[i]!r} "
                    f"and {gallery.classes[j]!r}")
            worst = max(worst, (sigmas[i] + sigmas[j]) / gap)
        total += worst
    return total / n_classes


def ccr_crossval(templates, labels, metric: MetricModel, folds: int = 10,
                 seed: int = 0) -> float:
    """Correct classification rate under stratified k-fold cross-validation.

    Templates are dealt into folds per class (round-robin after a seeded
    shuffle); each fold's templates are classified against the union of the
    other folds by the winner-takes-all rule.
    """
    arr = np.asarray(templates, dtype=np.float64)
    labels = tuple(labels)
    n = arr.shape[0]
    if n < folds:
        raise ValueError(f"{n} templates but {folds} folds requested")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    counter = 0
    for label in dict.fromkeys(labels):
        rows = np.flatnonzero([lab == label for lab in labels])
        for r in rows[rng.permutation(rows.shape[0])]:
            fold_of[r] = counter % folds
            counter += 1
    correct = 0
    for f in range(folds):
        test_rows = np.flatnonzero(fold_of == f)
        if test_rows.size == 0:
            continue
        gallery_rows = np.flatnonzero(fold_of != f)
        gallery = TemplateGallery(templates=arr[gallery_rows],
                                  labels=tuple(labels[i] for i in gallery_rows))
        for i in test_rows:
            if classify(gallery, arr[i], metric) == labels[i]:
                correct += 1
    return correct / n


def experiment_configs(experiment: str, n_identities: int) -> list[SetupConfig]:
    """Configurations of a named experiment, clipped to the identity count.

    A: homogeneous, C in 2..27;  B: heterogeneous, C_L = C_E in 2..27;
    C: heterogeneous, C_L in 2..27 with C_E = 27;  D: heterogeneous,
    C_L in 2..52 with C_E = identities - C_L.
    """
    n = n_identities
    configs: list[SetupConfig] = []
    if experiment == "A":
        cmax = min(27, n - 1)
        if cmax < 27:
            warnings.warn(f"experiment A clipped to C <= {cmax} "
                          f"({n} identities available)")
        configs = [SetupConfig(HOMOGENEOUS, c, c) for c in range(2, cmax + 1)]
    elif experiment == "B":
        cmax = min(27, n // 2)
        if cmax < 27:
            warnings.warn(f"experiment B clipped to C <= {cmax} "
                          f"({n} identities available)")
        configs = [SetupConfig(HETEROGENEOUS, c, c) for c in range(2, cmax + 1)]
    elif experiment == "C":
        c_eval = min(27, n - 2)
        cl_max = min(27, n - c_eval)
        if c_eval < 27 or cl_max < 27:
            warnings.warn(f"experiment C clipped to C_E = {c_eval}, "
                          f"C_L <= {cl_max} ({n} identities available)")
        configs = [SetupConfig(HETEROGENEOUS, c, c_eval)
                   for c in range(2, cl_max + 1)]
    elif experiment == "D":
        cl_max = min(52, n - 2)
        if n != 54:
            warnings.warn(f"experiment D adapted to {n} identities "
                          f"(C_E = {n} - C_L)")
        configs = [SetupConfig(HETEROGENEOUS, c, n - c)
                   for c in range(2, cl_max + 1)]
    else:
        raise ValueError(f"unknown experiment {experiment!r}")
    if not configs:
        raise FormatError(
            f"experiment {experiment} infeasible with {n} identities")
    return configs


def _repeat_seeds(master_seed: int, experiment: str, config: SetupConfig,
                  repeat: int) -> tuple[int, int]:
    """Derived (split, crossval) seeds for one repeat; pure function of inputs."""
    ss = np.random.SeedSequence(
        [int(master_seed), ord(experiment), config.c_learn, config.c_eval, repeat])
    split_seed, ccr_seed = (int(v) for v in ss.generate_state(2))
    return split_seed, ccr_seed


def evaluate_split(learn: LabeledDataset, eval_part: LabeledDataset,
                   ccr_seed: int, folds: int = 10,
                   ridge: float = 1e-8) -> tuple[int, float, float]:
    """Learn on one part, evaluate DBI and cross-validated CCR on the other.

    Returns (feature dimension, DBI, CCR).  The metric is fitted on the
    evaluation templates, grouped by their labels.
    """
    transform, _ = learn_transform_mmc(learn)
    templates = apply_transform(transform, eval_part.samples)
    metric = fit_metric(templates, ridge=ridge, labels=eval_part.labels,
                        source="gallery")
    gallery = TemplateGallery(templates=templates, labels=eval_part.labels)
    dbi = davies_bouldin(gallery, metric)
    ccr = ccr_crossval(templates, eval_part.labels, metric, folds=folds,
                       seed=ccr_seed)
    return transform.n_components, dbi, ccr


def run_experiment(data: LabeledDataset, experiment: str, master_seed: int,
                   repeats: int = 3, folds: int = 10,
                   ridge: float = 1e-8) -> EvalReport:
    """Run one named experiment: every configuration, `repeats` seeded repeats.

    Each repeat draws fresh identities and sample splits from a seed derived
    deterministically from (master seed, experiment, configuration, repeat).
    """
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    configs = experiment_configs(experiment, data.n_classes)
    rows: list[EvalRow] = []
    means: list[EvalRow] = []
    for config in configs:
        block: list[EvalRow] = []
        for repeat in range(repeats):
            split_seed, ccr_seed = _repeat_seeds(master_seed, experiment, config,
                                                 repeat)
            if config.kind == HOMOGENEOUS:
                learn, eval_part = split_homogeneous(data, config.c_learn,
                                                     split_seed)
            else:
                learn, eval_part = split_heterogeneous(data, config.c_learn,
                                                       config.c_eval, split_seed)
            d_hat, dbi, ccr = evaluate_split(learn, eval_part, ccr_seed,
                                             folds=folds, ridge=ridge)
            block.append(EvalRow(experiment=experiment, setup=config.kind,
                                 c_learn=config.c_learn, c_eval=config.c_eval,
                                 repeat=repeat, seed=split_seed, d_hat=d_hat,
                                 dbi=dbi, ccr=ccr))
        rows.extend(block)
        means.append(EvalRow(
            experiment=experiment, setup=config.kind, c_learn=config.c_learn,
            c_eval=config.c_eval, repeat="mean", seed=master_seed,
            d_hat=float(np.mean([r.d_hat for r in block])),
            dbi=float(np.mean([r.dbi for r in block])),
            ccr=float(np.mean([r.ccr for r in block]))))
    return EvalReport(rows=tuple(rows), means=tuple(means))
