"""
Detection stages, run in this order by a :class:`~pysalsub.pipeline.StreamPipeline`:

- :class:`FrameStream`: file discovery, training window, then one frame (with saliency and truth) per execution
- :class:`Detector`: training, parameter derivation, then per-frame detection
- :class:`MaskWriter`: masks, parameters, diagnostics and final basis
- :class:`Scorer`: confusion counts and ROC, if ground truth is available

Stages share the ``run`` section of the configuration block (a :class:`~pysalsub.config.RunConfig`).
"""

import os

import numpy as np

from .module import BaseModule
from .block import SectionBlock
from . import section_names
from . import imagegrid
from .config import ConfigError
from .optimizer import AblationMode, StreamSolver
from .subspace import SubspaceState, init_subspace
from .parameters import BetaTracker, training_stats, background_energy
from .evaluation import ScoreTable, RocAccumulator, confusion
from .utils import mkdir, dump_json


class RunModule(BaseModule):

    """Base stage, reading run options from the ``run`` section of :attr:`config_block`."""

    @property
    def run_options(self):
        return SectionBlock(self.config_block,section_names.run)

    @property
    def mode(self):
        return AblationMode(self.run_options['mode'])

    @property
    def overrides(self):
        return dict(self.config_block.get(section_names.parameters,None,{}))


class FrameStream(RunModule):
    """
    Discover frames, match saliency maps and ground truth masks by file stem, load the training window in setup,
    then one frame per execution.
    Saliency maps are only read in saliency mode; missing ones are replaced by zeros if ``allow_missing_saliency``.
    """
    def setup(self):
        options = self.run_options
        frames = imagegrid.FrameSequence.from_directory(options['frames_dir'],pattern=options['pattern'])
        training_count = options['training_count']
        if len(frames) < training_count:
            raise ConfigError('Found {:d} frames, fewer than training_count = {:d}.'.format(len(frames),training_count))
        self.frames = frames
        self.saliency = None
        if self.mode == AblationMode.SALIENCY and options['saliency_dir'] is not None:
            self.saliency = imagegrid.match_files(frames.filenames,options['saliency_dir'])
            missing = [filename for filename,match in self.saliency.items() if match is None]
            if missing:
                if not options['allow_missing_saliency']:
                    raise imagegrid.ImageError('No saliency map for {:d} frames, e.g. {}.'.format(len(missing),missing[0]))
                self.log_warning('No saliency map for {:d} frames; using zero saliency.'.format(len(missing)),rank=0)
        self.truth = None
        if options['truth_dir'] is not None:
            self.truth = imagegrid.match_files(frames.filenames,options['truth_dir'],default=imagegrid.frame_patterns)
        video = options['video'] or os.path.basename(os.path.normpath(options['frames_dir']))
        training = [self.load(index) for index in range(training_count)]
        self.data_block[section_names.training,'frames'] = [frame for frame,_,_ in training]
        self.data_block[section_names.training,'saliency'] = [saliency for _,saliency,_ in training] if self.mode == AblationMode.SALIENCY else None
        self.data_block[section_names.stream,'grid'] = frames.grid
        self.data_block[section_names.stream,'video'] = video
        self.data_block[section_names.stream,'nframes'] = len(frames)
        self.index = training_count
        self.data_block[section_names.stream,'done'] = self.index >= len(frames)
        if self.data_block[section_names.stream,'done']:
            self.log_warning('No frame left after the training window.',rank=0)

    def load(self, index):
        """Return frame, saliency (``None`` outside saliency mode) and truth (``None`` if missing) of frame ``index``."""
        filename = self.frames.filenames[index]
        frame = self.frames[index]
        saliency = None
        if self.mode == AblationMode.SALIENCY:
            match = self.saliency.get(filename,None) if self.saliency is not None else None
            if match is None:
                saliency = np.zeros_like(frame)
            else:
                saliency = imagegrid.load_saliency(match,grid=self.frames.grid)
        truth = None
        if self.truth is not None and self.truth[filename] is not None:
            truth = imagegrid.load_mask(self.truth[filename],grid=self.frames.grid)
        return frame, saliency, truth

    def execute(self):
        frame,saliency,truth = self.load(self.index)
        self.data_block[section_names.frame,'name'] = self.frames.names[self.index]
        self.data_block[section_names.frame,'index'] = self.index
        self.data_block[section_names.frame,'vector'] = frame
        self.data_block[section_names.saliency,'vector'] = saliency
        self.data_block[section_names.truth,'vector'] = truth
        self.index += 1
        self.data_block[section_names.stream,'done'] = self.index >= len(self.frames)

    def cleanup(self):
        for name in ['frames','saliency']:
            self.data_block[section_names.training,name] = None


class Detector(RunModule):
    """
    Initialize the subspace on the training window (or load it from the ``basis`` file), derive solver parameters
    from training statistics, then detect moving objects in each frame, updating beta after each frame
    if ``adapt_beta``.

    If the data block already holds a subspace and training statistics (shared training), these are used.
    """
    def setup(self):
        options = self.run_options
        overrides = self.overrides
        grid = self.data_block[section_names.stream,'grid']
        frames = self.data_block[section_names.training,'frames']
        saliency = self.data_block[section_names.training,'saliency']
        if self.data_block.has(section_names.subspace,'initial') and self.data_block.has(section_names.training,'stats'):
            subspace = self.data_block[section_names.subspace,'initial'].copy()
            stats = self.data_block[section_names.training,'stats']
        else:
            m = overrides.get('m',5)
            eta = overrides.get('eta',1e-4)
            if options['basis'] is not None:
                subspace = SubspaceState.load_basis(options['basis'],eta=eta)
                if subspace.m != m or subspace.N != grid.N:
                    raise ConfigError('Basis of shape ({:d}, {:d}) does not match N = {:d}, m = {:d}.'.format(subspace.N,subspace.m,grid.N,m))
                subspace.set_coefficients(frames[-1])
            else:
                subspace = init_subspace(frames,m,eta=eta,seed=options['seed'])
            stats = training_stats(subspace,frames,training_saliency=saliency,variance_scale=options['variance_scale'])
        self.log_info('Training statistics: {}.'.format(stats),rank=0)
        self.tracker = BetaTracker(stats,overrides=overrides,variance_scale=options['variance_scale'],npixels=grid.N)
        self.adapt_beta = options['adapt_beta'] and self.tracker.enabled
        self.solver = StreamSolver(subspace,grid,self.tracker.params,mode=self.mode)
        self.log_info('Solver parameters in {} mode: {}.'.format(AblationMode.as_str(self.mode),dict(self.solver.params)),rank=0)
        self.data_block[section_names.training,'stats'] = stats
        self.data_block[section_names.parameters,'params'] = self.solver.params

    def execute(self):
        frame = self.data_block[section_names.frame,'vector']
        saliency = self.data_block[section_names.saliency,'vector']
        beta = self.solver.params['beta']
        result = self.solver.process(frame,saliency=saliency)
        if self.adapt_beta:
            energy = background_energy(self.solver.subspace,frame,result.mask)
            self.solver.params = self.tracker.update(energy)
        self.log_debug('Frame {}: mask area {:d}, objective {:.6g}, converged {}.'.format(
                       self.data_block[section_names.frame,'name'],int(np.sum(result.mask)),result.objective_trace[-1],result.converged))
        self.data_block[section_names.detection,'result'] = result
        self.data_block[section_names.detection,'beta'] = beta

    def cleanup(self):
        self.data_block[section_names.subspace,'state'] = self.solver.subspace
        self.data_block[section_names.parameters,'final'] = self.solver.params


class MaskWriter(RunModule):
    """
    Write into ``output_dir``: one mask per processed frame in masks/, the solver parameters in params.json,
    per-frame diagnostics in diagnostics.jsonl and the final subspace basis in basis.bin.
    Objective traces, feasibility gaps and conjugate gradient iterations are only written if ``verbose``.
    """
    def setup(self):
        self.output_dir = self.run_options['output_dir']
        self.masks_dir = os.path.join(self.output_dir,'masks')
        mkdir(self.masks_dir)
        self.data_block[section_names.parameters,'params'].save(os.path.join(self.output_dir,'params.json'))
        self.diagnostics = open(os.path.join(self.output_dir,'diagnostics.jsonl'),'w')
        self.nmasks = 0

    def execute(self):
        name = self.data_block[section_names.frame,'name']
        result = self.data_block[section_names.detection,'result']
        grid = self.data_block[section_names.stream,'grid']
        imagegrid.write_mask(result.mask,os.path.join(self.masks_dir,'{}.pgm'.format(name)),grid)
        self.nmasks += 1
        diagnostics = result.to_dict()
        record = {'frame':name,'objective':diagnostics.pop('objective')[-1],'converged':diagnostics.pop('converged'),
                  'mask_area':diagnostics.pop('mask_area'),'beta':self.data_block[section_names.detection,'beta']}
        if self.run_options['verbose']:
            record['objective_trace'] = result.objective_trace
            record.update(diagnostics)
        self.diagnostics.write(dump_json(record) + '\n')

    def cleanup(self):
        self.diagnostics.close()
        self.data_block[section_names.subspace,'state'].save_basis(os.path.join(self.output_dir,'basis.bin'))
        self.log_info('Wrote {:d} masks to {}.'.format(self.nmasks,self.masks_dir),rank=0)


class Scorer(RunModule):
    """
    Score masks against ground truth masks, for frames that have one: per-frame confusion counts
    (written to scores.csv) and ROC over 101 thresholds (written to roc.csv).
    """
    def setup(self):
        self.table = ScoreTable()
        self.roc = RocAccumulator(steps=self.options.get_int('roc_steps',101))

    def execute(self):
        truth = self.data_block[section_names.truth,'vector']
        if truth is None:
            return
        result = self.data_block[section_names.detection,'result']
        video = self.data_block[section_names.stream,'video']
        self.table.add(video,self.data_block[section_names.frame,'name'],confusion(result.mask,truth))
        self.roc.add(result.b,truth)

    def cleanup(self):
        self.data_block[section_names.scores,'table'] = self.table
        if not len(self.table):
            self.log_warning('No ground truth mask matched processed frames; nothing scored.',rank=0)
            return
        output_dir = self.run_options['output_dir']
        self.table.write_csv(os.path.join(output_dir,'scores.csv'))
        self.roc.curve().write_csv(os.path.join(output_dir,'roc.csv'))
        for video,f1 in self.table.video_f1().items():
            self.log_info('Video {}: F1 = {:.4f} over {:d} frames.'.format(video,f1,len(self.table)),rank=0)
