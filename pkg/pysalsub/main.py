"""Definition of **pysalsub** main functions: detection run, evaluation, ablation and synthetic scene generation."""

import os
import csv
import logging

from .config import RunConfig
from .block import DataBlock
from .pipeline import StreamPipeline
from .stages import FrameStream, Detector, MaskWriter, Scorer
from .optimizer import AblationMode
from .subspace import SubspaceState, init_subspace
from .parameters import training_stats
from .evaluation import evaluate_directories, aggregate_report
from .synthetic import SyntheticScene
from . import section_names
from .utils import TaskManager, mkdir


logger = logging.getLogger('Main')


def make_pipeline(config, data_block=None):
    """Return :class:`StreamPipeline` of detection stages for :class:`RunConfig` ``config``; scoring only if a truth directory is set."""
    modules = [FrameStream('stream',config_block=config),Detector('detector',config_block=config),MaskWriter('writer',config_block=config)]
    if config[section_names.run,'truth_dir'] is not None:
        modules.append(Scorer('scorer',config_block=config))
    return StreamPipeline('main',modules=modules,config_block=config,data_block=data_block)


def run(config, data_block=None):
    """
    Run detection: train on the first ``training_count`` frames, then write one mask per remaining frame,
    with params.json, diagnostics.jsonl and basis.bin (and scores.csv, roc.csv if ground truth is available).

    Parameters
    ----------
    config : RunConfig, dict, string
        Run configuration, or path to configuration file.

    data_block : DataBlock, default=None
        Data block to start from, e.g. with shared training.

    Returns
    -------
    data_block : DataBlock
        Data block at the end of the stream.
    """
    if not isinstance(config,RunConfig):
        config = RunConfig(config)
    config.validate()
    output_dir = config[section_names.run,'output_dir']
    mkdir(output_dir)
    pipeline = make_pipeline(config,data_block=data_block)
    pipeline.run()
    table = pipeline.data_block.get(section_names.scores,'table',None)
    if table is not None and len(table):
        logger.info('Mean F1 = {:.4f}.'.format(table.mean_frame_f1()))
    return pipeline.data_block


def evaluate(masks_dir, truth_dir, output=None, video=None):
    """
    Score masks against ground truth masks with the same file stem; write per-frame and summary rows to CSV ``output``
    and the report to JSON (same base name); print the F1 of the summed counts.

    Returns
    -------
    report : dict
    """
    table = evaluate_directories(masks_dir,truth_dir,video=video)
    json_filename = None
    if output is not None:
        table.write_csv(output)
        json_filename = os.path.splitext(output)[0] + '.json'
    report = aggregate_report(table.video_f1(),json_filename=json_filename)
    report['mean_frame_f1'] = table.mean_frame_f1()
    print('mean F1 = {:.6f}'.format(report['mean']))
    return report


def shared_training(config):
    """Return data block with the subspace and training statistics of ``config``'s training window, read in saliency mode."""
    config = config.copy()
    config[section_names.run,'mode'] = AblationMode.as_str(AblationMode.SALIENCY)
    stream = FrameStream('stream',config_block=config)
    stream.setup()
    options = config.options
    frames = stream.data_block[section_names.training,'frames']
    overrides = config.overrides
    if options['basis'] is not None:
        subspace = SubspaceState.load_basis(options['basis'],eta=overrides.get('eta',1e-4))
        subspace.set_coefficients(frames[-1])
    else:
        subspace = init_subspace(frames,overrides.get('m',5),eta=overrides.get('eta',1e-4),seed=options['seed'])
    stats = training_stats(subspace,frames,training_saliency=stream.data_block[section_names.training,'saliency'],variance_scale=options['variance_scale'])
    stream.cleanup()
    data_block = DataBlock()
    data_block[section_names.subspace,'initial'] = subspace
    data_block[section_names.training,'stats'] = stats
    return data_block


def write_ablation(rows, filename):
    """Write ablation ``rows`` to CSV ``filename``."""
    mkdir(os.path.dirname(filename))
    with open(filename,'w',newline='') as file:
        writer = csv.writer(file)
        writer.writerow(['mode','mean_f1','total_fp','total_fn'])
        for row in rows:
            writer.writerow([row['mode'],'{:.6f}'.format(row['mean_f1']),row['total_fp'],row['total_fn']])


def ablate(config, output, modes=None):
    """
    Run the ablation modes on the same stream with shared training, and write CSV ``output`` with one row per mode:
    ``mode,mean_f1,total_fp,total_fn`` (mean F1 over scored frames). Masks of each mode are written to
    ``output_dir/<mode>/`` (``output_dir`` defaulting to ``output`` without extension).

    Returns
    -------
    rows : list
        List of dictionaries, one per mode, in the order of ``modes``.
    """
    if not isinstance(config,RunConfig):
        config = RunConfig(config)
    if config[section_names.run,'output_dir'] is None:
        config[section_names.run,'output_dir'] = os.path.splitext(output)[0]
    config.validate(require_saliency=True,require_truth=True)
    if modes is None:
        modes = [AblationMode.BASELINE,AblationMode.CONNECTIVITY,AblationMode.SALIENCY]
    modes = [AblationMode.as_str(AblationMode(mode)) for mode in modes]
    training = shared_training(config)

    def run_mode(mode):
        mode_config = config.copy()
        mode_config[section_names.run,'mode'] = mode
        mode_config[section_names.run,'output_dir'] = os.path.join(config[section_names.run,'output_dir'],mode)
        data_block = run(mode_config,data_block=training.copy())
        table = data_block[section_names.scores,'table']
        counts = table.counts()
        return {'mode':mode,'mean_f1':table.mean_frame_f1(),'total_fp':counts.fp,'total_fn':counts.fn}

    with TaskManager() as tm:
        rows = tm.map(run_mode,modes)
    if tm.mpicomm.rank == 0:
        write_ablation(rows,output)
    for row in rows:
        logger.info('Mode {mode}: mean F1 = {mean_f1:.4f}, total fp = {total_fp:d}, total fn = {total_fn:d}.'.format(**row))
    return rows


def synth(output_dir, **kwargs):
    """Write synthetic scene (see :class:`SyntheticScene` for options) to ``output_dir``; return dictionary of subdirectories."""
    return SyntheticScene(**kwargs).write(output_dir)
