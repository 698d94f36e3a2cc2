"""Command-line interface: extract | synth | learn | transform | classify | evaluate.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
degeneracy.  Diagnostics go to stderr; data goes to output files (written
atomically) or stdout.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import io as gio
from .asfamc import parse_amc, parse_asf, prototypical_skeleton, zero_root
from .cycles import (CycleDetectionConfig, JointTrack, assemble_sample,
                     average_cycle_length, detect_gait_cycles,
                     disassemble_sample, resample_to_length, rotation_features)
from .dataset import LabeledDataset
from .evaluation import SynthParams, run_experiment, synth_dataset
from .exceptions import DegenerateDataError, FormatError, GaitlabError
from .matching import TemplateGallery, classify, fit_metric
from .mmc import (ROUTE_DIRECT, ROUTE_MMC_SVD, apply_transform,
                  learn_transform_direct, learn_transform_mmc)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DEGENERATE = 3


def _diag(message: str) -> None:
    print(message, file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# extract


def _parse_exemplar_spec(spec: str):
    """FILE or FILE:START:END (1-based inclusive frame range)."""
    parts = spec.rsplit(":", 2)
    if len(parts) == 1:
        return parts[0], None, None
    if len(parts) == 3:
        try:
            return parts[0], int(parts[1]), int(parts[2])
        except ValueError:
            pass
    raise FormatError(f"exemplar spec must be FILE or FILE:START:END, got {spec!r}")


def _joint_columns(skeleton, names_arg):
    names = skeleton.joint_names
    if not names_arg:
        return list(range(len(names))), list(names)
    wanted = [n.strip() for n in names_arg.split(",") if n.strip()]
    index = {n: i for i, n in enumerate(names)}
    missing = [n for n in wanted if n not in index]
    if missing:
        raise FormatError(f"unknown joints requested: {', '.join(missing)}")
    return [index[n] for n in wanted], wanted


def cmd_extract(args) -> int:
    from .asfamc import forward_kinematics_sequence

    asf_paths = sorted(p for p in os.listdir(args.asf_dir) if p.endswith(".asf"))
    if not asf_paths:
        raise FormatError(f"no .asf files in {args.asf_dir}")
    skeletons = [parse_asf(_read_text(os.path.join(args.asf_dir, p)))
                 for p in asf_paths]
    skeleton = prototypical_skeleton(skeletons)

    amc_paths = sorted(p for p in os.listdir(args.amc_dir) if p.endswith(".amc"))
    if not amc_paths:
        raise FormatError(f"no .amc files in {args.amc_dir}")

    exemplar_file, start, end = _parse_exemplar_spec(args.exemplar)
    exemplar_path = exemplar_file
    if not os.path.exists(exemplar_path):
        exemplar_path = os.path.join(args.amc_dir, exemplar_file)
    if not os.path.exists(exemplar_path):
        raise FormatError(f"exemplar not found: {exemplar_file}")
    exemplar_seq = zero_root(parse_amc(_read_text(exemplar_path), skeleton))
    if start is not None:
        if not (1 <= start <= end <= exemplar_seq.n_frames):
            raise FormatError(
                f"exemplar frame range {start}:{end} outside 1:"
                f"{exemplar_seq.n_frames}")
        exemplar_seq = replace(exemplar_seq,
                               frames=exemplar_seq.frames[start - 1:end])
    exemplar = rotation_features(exemplar_seq)
    min_len = args.cycle_min or max(2, exemplar.shape[0] // 2)
    max_len = args.cycle_max or 2 * exemplar.shape[0]
    cfg = CycleDetectionConfig(exemplar=exemplar, threshold=args.threshold,
                               min_length=min_len, max_length=max_len,
                               stride=args.stride)

    columns, joint_names = _joint_columns(skeleton, args.joints)
    tracks: list[tuple[str, JointTrack]] = []
    for name in amc_paths:
        label = name[:-4].split("_")[0]
        try:
            seq = zero_root(parse_amc(_read_text(os.path.join(args.amc_dir, name)),
                                      skeleton))
        except FormatError as exc:
            raise FormatError(f"{name}: {exc}") from None
        for cycle in detect_gait_cycles(seq, cfg):
            positions = forward_kinematics_sequence(cycle)[:, columns, :]
            tracks.append((label, JointTrack(positions=positions,
                                             frame_rate=seq.frame_rate)))
    if not tracks:
        raise FormatError("no gait cycles found in the corpus")

    t_common = args.resample_t or average_cycle_length([t for _, t in tracks])
    by_label: dict[str, list[np.ndarray]] = {}
    for label, track in tracks:
        sample = assemble_sample(resample_to_length(track, t_common))
        by_label.setdefault(label, []).append(sample)

    samples = []
    labels = []
    for label in sorted(by_label):
        group = by_label[label]
        if len(group) < args.min_samples:
            _diag(f"subject {label}: {len(group)} samples, below "
                  f"--min-samples {args.min_samples}; excluded")
            continue
        _diag(f"subject {label}: {len(group)} samples")
        samples.extend(group)
        labels.extend([label] * len(group))
    if not samples:
        raise FormatError("all subjects fell below --min-samples")
    data = LabeledDataset(samples=np.array(samples), labels=tuple(labels),
                          n_joints=len(joint_names), n_frames=t_common)
    gio.write_dataset(args.out, data)
    _diag(f"wrote {data.n_samples} samples of {data.n_classes} subjects "
          f"(J={len(joint_names)}, T={t_common}, D={data.n_features}) to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth / learn / transform / classify / evaluate


def cmd_synth(args) -> int:
    params = SynthParams(n_classes=args.classes, samples_per_class=args.per_class,
                         n_joints=args.joints, n_frames=args.frames,
                         separation=args.separation, shared_dim=args.shared_dim,
                         noise=args.noise)
    data = synth_dataset(params, seed=args.seed)
    gio.write_dataset(args.out, data)
    _diag(f"wrote {data.n_samples} synthetic samples of {data.n_classes} "
          f"identities (D={data.n_features}) to {args.out}")
    return EXIT_OK


def cmd_learn(args) -> int:
    data = gio.read_dataset(args.dataset, raw=args.raw_d)
    if data.n_joints == 0 and not args.raw_d:
        raise FormatError(
            "dataset has no joint structure (J=0); pass --raw-d to learn on it")
    if data.n_classes < 2:
        raise FormatError("learning requires at least 2 identities in the dataset")
    if args.route == ROUTE_MMC_SVD:
        transform, _ = learn_transform_mmc(data)
    else:
        transform = learn_transform_direct(data)
    transform = replace(transform, seed=args.seed)
    gio.write_transform(args.out, transform)
    eigs = ", ".join(repr(float(v)) for v in transform.eigenvalues)
    _diag(f"D_hat={transform.n_components} eigenvalues=[{eigs}]")
    _diag(f"wrote transform ({args.route}) to {args.out}")
    return EXIT_OK


def cmd_transform(args) -> int:
    transform = gio.read_transform(args.transform)
    data = gio.read_dataset(args.dataset, raw=True)
    if data.n_features != transform.n_features:
        raise FormatError(
            f"transform expects D={transform.n_features}, dataset has "
            f"D={data.n_features}")
    templates = apply_transform(transform, data.samples)
    out = LabeledDataset(samples=templates, labels=data.labels)
    gio.write_dataset(args.out, out)
    _diag(f"wrote {out.n_samples} templates (D_hat={transform.n_components}) "
          f"to {args.out}")
    return EXIT_OK


def cmd_classify(args) -> int:
    transform = gio.read_transform(args.transform)
    gallery_data = gio.read_dataset(args.gallery, raw=True)
    probe_data = gio.read_dataset(args.probes, raw=True)
    for name, data in (("gallery", gallery_data), ("probes", probe_data)):
        if data.n_samples and data.n_features != transform.n_features:
            raise FormatError(
                f"transform expects D={transform.n_features}, {name} has "
                f"D={data.n_features}")
    if probe_data.n_samples == 0:
        return EXIT_OK
    if gallery_data.n_samples == 0:
        raise FormatError("empty gallery")

    gallery_templates = apply_transform(transform, gallery_data.samples)
    probe_templates = apply_transform(transform, probe_data.samples)
    if args.metric_fit == "gallery":
        metric = fit_metric(gallery_templates, ridge=args.ridge,
                            labels=gallery_data.labels, source="gallery")
    else:
        if not args.learning_data:
            raise FormatError(
                "--metric-fit learning requires --learning-data DATASET")
        learning = gio.read_dataset(args.learning_data, raw=True)
        if learning.n_features != transform.n_features:
            raise FormatError(
                f"transform expects D={transform.n_features}, learning data has "
                f"D={learning.n_features}")
        metric = fit_metric(apply_transform(transform, learning.samples),
                            ridge=args.ridge, source="learning")
    gallery = TemplateGallery(templates=gallery_templates,
                              labels=gallery_data.labels)
    correct = 0
    for probe, label in zip(probe_templates, probe_data.labels):
        predicted = classify(gallery, probe, metric)
        if predicted == label:
            correct += 1
        print(predicted)
    ccr = correct / probe_data.n_samples
    _diag(f"CCR {repr(ccr)} ({correct}/{probe_data.n_samples})")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    data = gio.read_dataset(args.dataset, raw=True)
    report = run_experiment(data, args.experiment, master_seed=args.seed,
                            repeats=args.repeats)
    gio.write_report(args.out, report)
    _diag(f"wrote {len(report.rows)} repeat rows and {len(report.means)} mean "
          f"rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gaitlab",
                     description="Gait identification from MoCap joint coordinates")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract a gait dataset from ASF/AMC files")
    p.add_argument("asf_dir", help="directory of .asf skeleton files")
    p.add_argument("amc_dir", help="directory of .amc motion files "
                                   "(<subject>_<trial>.amc)")
    p.add_argument("--exemplar", required=True,
                   help="exemplar cycle as FILE or FILE:START:END (1-based frames)")
    p.add_argument("--threshold", type=float, required=True,
                   help="maximal admissible DTW distance to the exemplar")
    p.add_argument("--cycle-min", type=int, default=0,
                   help="minimal cycle length in frames (default: half exemplar)")
    p.add_argument("--cycle-max", type=int, default=0,
                   help="maximal cycle length in frames (default: twice exemplar)")
    p.add_argument("--stride", type=int, default=1,
                   help="start-frame scan stride (default 1)")
    p.add_argument("--resample-T", dest="resample_t", type=int, default=0,
                   help="common cycle length (default: corpus average)")
    p.add_argument("--min-samples", type=int, default=10,
                   help="exclude subjects with fewer samples (default 10)")
    p.add_argument("--joints", default="",
                   help="comma-separated joint subset (default: all joints)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--J", dest="joints", type=int, required=True)
    p.add_argument("--T", dest="frames", type=int, required=True)
    p.add_argument("--separation", type=float, default=10.0,
                   help="class-mean spread in units of the noise deviation")
    p.add_argument("--shared-dim", type=int, default=4,
                   help="dimension of the identity-bearing subspace")
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("learn", help="learn a feature transform from a dataset")
    p.add_argument("dataset")
    p.add_argument("--route", choices=(ROUTE_DIRECT, ROUTE_MMC_SVD),
                   default=ROUTE_MMC_SVD)
    p.add_argument("--raw-d", action="store_true",
                   help="accept datasets without 3*J*T joint structure")
    p.add_argument("--seed", type=int, default=0,
                   help="recorded in the transform file metadata")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("transform", help="project a dataset into templates")
    p.add_argument("transform")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("classify",
                       help="classify probe samples against a gallery")
    p.add_argument("transform")
    p.add_argument("gallery")
    p.add_argument("probes")
    p.add_argument("--metric-fit", choices=("gallery", "learning"),
                   default="gallery")
    p.add_argument("--learning-data", default="",
                   help="dataset for --metric-fit learning")
    p.add_argument("--ridge", type=float, default=1e-8)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="run an evaluation experiment")
    p.add_argument("dataset")
    p.add_argument("--experiment", choices=("A", "B", "C", "D"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateDataError as exc:
        _diag(f"gaitlab: degenerate data: {exc}")
        return EXIT_DEGENERATE
    except (FormatError, ValueError) as exc:
        _diag(f"gaitlab: error: {exc}")
        return EXIT_DATA
    except GaitlabError as exc:
        _diag(f"gaitlab: error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
