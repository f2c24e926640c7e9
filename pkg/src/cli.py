"""
Command-line interface for the EEG graph-signal GCNN toolkit.
"""

import argparse
import sys
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

from src.core.config import ExperimentConfig, load_config
from src.core.experiment import (
    CHECKPOINT_NAME,
    build_graph_artifact,
    evaluate_checkpoint,
    extract_features_artifact,
    run_experiment,
    run_gradcheck,
    run_grid,
    run_networks,
)
from src.core.report import render_network_table, render_results_table
from src.data.deap import convert_deap
from src.data.recordings import save_recordings
from src.data.synth import iter_synth_recordings
from src.graph.construction import GRAPH_METHODS
from src.nn.gradcheck import DEFAULT_TOLERANCE
from src.nn.network_spec import NETWORK_PRESETS


def setup_logging(verbose: bool = False) -> None:
    """
    Configure logging.

    Args:
        verbose: Enable debug logging
    """
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%H:%M:%S'
    )


def _banner(title: str) -> None:
    print(f"\n{'='*60}")
    print(title)
    print(f"{'='*60}")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Config file values (or defaults) with command-line overrides applied.

    Args:
        args: Parsed arguments

    Returns:
        Validated ExperimentConfig
    """
    config = load_config(args.config) if args.config else ExperimentConfig()
    return config.with_overrides(
        dataset=getattr(args, "dataset", None),
        seed=args.seed,
        out_dir=args.out,
        dump_graph=args.dump_graph,
        fir_coeffs=args.fir_coeffs,
        overwrite=args.overwrite,
        jobs=args.jobs,
        repeats=args.repeats,
        network=getattr(args, "network", None),
    )


def cmd_synth(args: argparse.Namespace) -> int:
    """Write a synthetic recording container."""
    out = Path(args.out or "data/synth")
    seed = 0 if args.seed is None else args.seed
    recordings = iter_synth_recordings(
        args.classes,
        args.trials,
        fs=args.fs,
        seed=seed,
        duration_s=args.duration,
        with_baseline=not args.no_baseline,
    )
    manifest = save_recordings(recordings, out, fs=args.fs, overwrite=bool(args.overwrite))

    _banner("✓ Synthetic dataset written")
    print(f"Classes: {args.classes}")
    print(f"Trials per class: {args.trials}")
    print(f"Duration: {args.duration} s at {args.fs} Hz")
    print(f"Manifest: {manifest}")
    print(f"{'='*60}\n")
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    """Convert DEAP pickles into a recording container."""
    out = Path(args.out or "data/deap")
    manifest = convert_deap(
        args.source, out, subjects=args.subjects, overwrite=bool(args.overwrite)
    )

    _banner("✓ DEAP recordings converted")
    print(f"Source: {args.source}")
    print(f"Manifest: {manifest}")
    print(f"{'='*60}\n")
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    config = build_config(args)
    features, path = extract_features_artifact(config)

    _banner("✓ Features extracted")
    print(f"Samples: {len(features)}")
    print(f"Vertices per sample: {features.num_vertices}")
    print(f"Feature kind: {config.feature_kind}")
    print(f"Output: {path}")
    print(f"{'='*60}\n")
    return 0


def cmd_graph(args: argparse.Namespace) -> int:
    config = build_config(args)
    graph, hierarchy = build_graph_artifact(config)

    _banner("✓ Graph built")
    print(f"Method: {config.graph_method} ({config.graph_config().density_label})")
    print(f"Inter-band: {config.inter_band}")
    print(f"Vertices: {graph.n}, edges: {graph.num_edges}")
    print(f"Coarsening levels: {hierarchy.num_levels}")
    print(f"Padded sizes: {hierarchy.padded_sizes}")
    print(f"{'='*60}\n")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = build_config(args)
    row = run_experiment(config)

    _banner("✓ Training complete")
    print(f"Network: {row.network}")
    print(f"Parameters: {row.num_parameters}")
    print(f"Runs: {row.runs}")
    print(f"Test accuracy: {row.accuracy_text}%")
    if row.runs > 1:
        print(f"Accuracy std: {row.accuracy_std:.2f}")
    print(f"Output: {config.out_dir}")
    print(f"{'='*60}\n")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = build_config(args)
    checkpoint = args.checkpoint or str(Path(config.out_dir) / CHECKPOINT_NAME)
    row = evaluate_checkpoint(config, checkpoint)

    _banner("✓ Evaluation complete")
    print(f"Checkpoint: {checkpoint}")
    print(f"Network: {row.network}")
    print(f"Test accuracy: {row.accuracy_text}%")
    print(f"{'='*60}\n")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    config = build_config(args)
    report = run_gradcheck(
        config,
        num_vertices=args.vertices,
        tolerance=args.tolerance,
        max_entries=args.max_entries,
    )

    status = "✓ Gradient check passed" if report.passed else "✗ Gradient check failed"
    _banner(status)
    print(f"Network: {config.network_spec()}")
    print(f"Max relative error: {report.max_relative_error:.3e} (tolerance {args.tolerance:g})")
    worst = report.worst_tensor
    print(f"Worst tensor: {worst} (entry {report.worst_entries.get(worst)})")
    print(f"Entries checked: {sum(report.checked.values())}")
    print(f"Kink margin: {report.kink_margin:.3e} after {report.attempts} attempt(s)")
    print(f"{'='*60}\n")
    if not report.passed:
        print(
            f"✗ Max relative error {report.max_relative_error:.3e} exceeds tolerance",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    config = build_config(args)
    rows = run_grid(config, methods=args.methods, features=args.features)
    failed = [row for row in rows if row.failed]

    _banner("Grid complete")
    print(render_results_table(rows), end="")
    print(f"{'='*60}")
    print(f"Cells: {len(rows)}")
    print(f"Failed: {len(failed)}")
    print(f"Report: {Path(config.out_dir) / 'report.txt'}")
    print(f"{'='*60}\n")
    for row in failed:
        print(f"✗ {row.graph} {row.density} {row.feature}: {row.error}", file=sys.stderr)
    return 1 if failed else 0


def cmd_networks(args: argparse.Namespace) -> int:
    config = build_config(args)
    rows = run_networks(config, networks=args.networks)
    failed = [row for _, row in rows if row.failed]

    _banner("Network comparison complete")
    print(render_network_table(rows), end="")
    print(f"{'='*60}\n")
    for row in failed:
        print(f"✗ {row.network or row.graph}: {row.error}", file=sys.stderr)
    return 1 if failed else 0


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "synth": cmd_synth,
    "convert": cmd_convert,
    "features": cmd_features,
    "graph": cmd_graph,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "grid": cmd_grid,
    "networks": cmd_networks,
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='INI experiment config')
    common.add_argument('--seed', type=int, help='Training seed (overrides the config)')
    common.add_argument('--out', help='Output directory')
    common.add_argument(
        '--dump-graph',
        nargs='?',
        const='',
        help='Write the graph and its coarsening levels (default path: <out>/graph.txt)'
    )
    common.add_argument(
        '--fir-coeffs',
        help='Directory of <band>.txt tap files or band=path[,band=path...]'
    )
    common.add_argument(
        '--overwrite',
        action='store_true',
        default=None,
        help='Replace existing artifacts'
    )
    common.add_argument('--jobs', type=int, help='Worker processes')
    common.add_argument('--repeats', type=int, help='Training runs per experiment')
    common.add_argument('-v', '--verbose', action='store_true', help='Enable verbose logging')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        description='Chebyshev graph CNN experiments on band-decomposed EEG',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Synthetic dataset, then one experiment
  %(prog)s synth --classes 8 --trials 8 --out data/synth
  %(prog)s train --config experiment.ini --out output/run1

  # Accuracy grid over graph methods and densities
  %(prog)s grid --config experiment.ini --out output/grid --jobs 4

  # Gradient check of network 2
  %(prog)s gradcheck --config experiment.ini
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)

    synth = sub.add_parser('synth', parents=[common], help='Generate a synthetic dataset')
    synth.add_argument('--classes', type=int, default=8, help='Number of classes (default: 8)')
    synth.add_argument('--trials', type=int, default=8, help='Trials per class (default: 8)')
    synth.add_argument(
        '--duration', type=float, default=60.0, help='Trial length in s (default: 60)'
    )
    synth.add_argument('--fs', type=float, default=128.0, help='Sampling rate in Hz (default: 128)')
    synth.add_argument('--no-baseline', action='store_true', help='Omit baseline recordings')

    convert = sub.add_parser('convert', parents=[common], help='Convert DEAP .dat files')
    convert.add_argument('source', help='Directory holding sXX.dat files')
    convert.add_argument('--subjects', type=int, nargs='+', help='Subject ids to convert')

    for name, text in (
        ('features', 'Extract features to features.npz'),
        ('graph', 'Build, coarsen and dump the graph'),
        ('train', 'Train and evaluate one network'),
    ):
        cmd = sub.add_parser(name, parents=[common], help=text)
        cmd.add_argument('--dataset', help='Recording container directory')
        if name == 'train':
            cmd.add_argument('--network', help='Preset name or layer string')

    evaluate = sub.add_parser('eval', parents=[common], help='Evaluate a checkpoint')
    evaluate.add_argument('--dataset', help='Recording container directory')
    evaluate.add_argument(
        '--checkpoint', help=f'Checkpoint path (default: <out>/{CHECKPOINT_NAME})'
    )

    gradcheck = sub.add_parser('gradcheck', parents=[common], help='Finite-difference check')
    gradcheck.add_argument('--network', help='Preset name or layer string')
    gradcheck.add_argument(
        '--tolerance',
        type=float,
        default=DEFAULT_TOLERANCE,
        help=f'Relative error threshold (default: {DEFAULT_TOLERANCE:g})'
    )
    gradcheck.add_argument(
        '--vertices', type=int, default=16, help='Random graph size (default: 16)'
    )
    gradcheck.add_argument(
        '--max-entries',
        type=int,
        help='Entries compared per tensor (default: all)'
    )

    grid = sub.add_parser('grid', parents=[common], help='Run the accuracy grid')
    grid.add_argument('--dataset', help='Recording container directory')
    grid.add_argument('--methods', nargs='+', choices=GRAPH_METHODS, default=list(GRAPH_METHODS))
    grid.add_argument(
        '--features', nargs='+', choices=('power', 'entropy'), default=['power', 'entropy']
    )

    networks = sub.add_parser('networks', parents=[common], help='Compare network presets')
    networks.add_argument('--dataset', help='Recording container directory')
    networks.add_argument(
        '--networks', nargs='+', choices=list(NETWORK_PRESETS), default=list(NETWORK_PRESETS)
    )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main CLI entry point.

    Returns:
        Exit code (0 for success, 1 for error)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    logger = logging.getLogger(__name__)

    if args.jobs is not None and args.jobs < 1:
        print("✗ --jobs must be >= 1", file=sys.stderr)
        return 1
    if args.repeats is not None and args.repeats < 1:
        print("✗ --repeats must be >= 1", file=sys.stderr)
        return 1

    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        print("\n\n✗ Interrupted by user", file=sys.stderr)
        return 1
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=args.verbose)
        print(f"\n✗ {args.command} failed: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
