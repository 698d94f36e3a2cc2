"""gaitlab: gait identification from MoCap joint coordinates.

The pipeline parses ASF/AMC motion capture, segments walking into gait
cycles, flattens each cycle into a coordinate vector, learns a linear
feature transform that maximizes between- minus within-class scatter, and
matches the resulting templates with a Mahalanobis nearest-neighbor rule.
"""

from .asfamc import (Bone, MotionFrame, MotionSequence, RootSpec, Skeleton,
                     forward_kinematics, forward_kinematics_sequence,
                     parse_amc, parse_asf, prototypical_skeleton, write_amc,
                     zero_root)
from .cycles import (CycleDetectionConfig, JointTrack, assemble_sample,
                     average_cycle_length, detect_gait_cycle_ranges,
                     detect_gait_cycles, disassemble_sample, dtw_distance,
                     resample_to_length, rotation_features)
from .dataset import LabeledDataset
from .evaluation import (EvalReport, EvalRow, SetupConfig, SynthParams,
                         ccr_crossval, davies_bouldin, evaluate_split,
                         experiment_configs, run_experiment,
                         split_heterogeneous, split_homogeneous, synth_dataset)
from .exceptions import DegenerateDataError, FormatError, GaitlabError
from .matching import (MahalanobisNearestNeighbor, MetricModel,
                       TemplateGallery, classify, fit_metric, mahalanobis)
from .mmc import (FeatureTransform, MaximumMarginProjection, MmcDecomposition,
                  ScatterSet, apply_transform, criterion_in_feature_space,
                  learn_transform, learn_transform_direct, learn_transform_mmc,
                  mmc_pairwise, mmc_trace, scatter_matrices)

__version__ = "0.1.0"

__all__ = [
    "Bone", "CycleDetectionConfig", "DegenerateDataError", "EvalReport",
    "EvalRow", "FeatureTransform", "FormatError", "GaitlabError", "JointTrack",
    "LabeledDataset", "MahalanobisNearestNeighbor", "MaximumMarginProjection",
    "MetricModel", "MmcDecomposition", "MotionFrame", "MotionSequence",
    "RootSpec", "ScatterSet", "SetupConfig", "Skeleton", "SynthParams",
    "TemplateGallery", "apply_transform", "assemble_sample",
    "average_cycle_length", "ccr_crossval", "classify",
    "criterion_in_feature_space", "davies_bouldin", "detect_gait_cycle_ranges",
    "detect_gait_cycles", "disassemble_sample", "dtw_distance",
    "evaluate_split", "experiment_configs", "fit_metric", "forward_kinematics",
    "forward_kinematics_sequence", "learn_transform", "learn_transform_direct",
    "learn_transform_mmc", "mahalanobis", "mmc_pairwise", "mmc_trace",
    "parse_amc", "parse_asf", "prototypical_skeleton", "resample_to_length",
    "rotation_features", "run_experiment", "scatter_matrices",
    "split_heterogeneous", "split_homogeneous", "synth_dataset", "write_amc",
    "zero_root",
]
