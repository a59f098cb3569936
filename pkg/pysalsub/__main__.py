"""**pysalsub** main entry point."""

import sys
import datetime
import argparse

from ._version import __version__
from .utils import setup_logging, exception_handler
from .config import RunConfig
from . import main as pysalsub_main
from .mpi import CurrentMPIComm


banner = """pysalsub version: {}                     date: {}\n""".format(__version__,datetime.date.today())


def add_run_arguments(parser, mode=True):
    parser.add_argument('--config', type=str, default=None, help='Configuration file (yaml or json), with sections run and parameters; flags override it')
    parser.add_argument('--frames', type=str, default=None, help='Directory of frames (8-bit PGM or PNG), processed in lexicographic order')
    parser.add_argument('--saliency', type=str, default=None, help='Directory of saliency maps, matched to frames by file stem')
    parser.add_argument('--truth', type=str, default=None, help='Directory of ground truth masks; if provided, masks are scored')
    parser.add_argument('--pattern', type=str, default=None, help='Glob pattern of frame files (default: *.pgm and *.png)')
    if mode:
        parser.add_argument('--mode', type=str, default=None, help='Ablation mode: baseline, connectivity or saliency (default: saliency)')
    parser.add_argument('--train-count', type=int, default=None, help='Number of leading frames, assumed object-free, used for training (default: 20)')
    parser.add_argument('--param', type=str, nargs='+', action='extend', default=None, metavar='NAME=VALUE',
                        help='Solver parameter overrides, e.g. --param beta=2 t=0.4')
    parser.add_argument('--basis', type=str, default=None, help='Basis file to start from instead of training the subspace')
    parser.add_argument('--seed', type=int, default=None, help='Random seed, for padding a rank-deficient training window')
    parser.add_argument('--variance-scale', type=str, default=None, choices=['pixel','frame'],
                        help='Scale of the training residual variance (default: pixel)')
    parser.add_argument('--no-adapt-beta', action='store_true', default=False, help='Keep beta fixed after training')
    parser.add_argument('--allow-missing-saliency', action='store_true', default=False, help='Use zero saliency for frames without saliency map')
    parser.add_argument('--video', type=str, default=None, help='Video name in score tables (default: name of the frames directory)')
    parser.add_argument('--verbose', action='store_true', default=False, help='Debug logging, and full per-frame diagnostics')


def make_config(opt, output_dir=None):
    """Return :class:`RunConfig` from configuration file and command-line options ``opt``."""
    config = RunConfig(opt.config)
    config.set_flags(frames_dir=opt.frames,saliency_dir=opt.saliency,truth_dir=opt.truth,output_dir=output_dir,
                     pattern=opt.pattern,mode=getattr(opt,'mode',None),training_count=opt.train_count,seed=opt.seed,
                     variance_scale=opt.variance_scale,basis=opt.basis,video=opt.video,
                     adapt_beta=False if opt.no_adapt_beta else None,
                     allow_missing_saliency=True if opt.allow_missing_saliency else None,
                     verbose=True if opt.verbose else None)
    config.set_params(opt.param)
    return config


def main(args=None):
    """Moving object detection with an incremental background subspace, a connectivity prior and saliency maps."""
    parser = argparse.ArgumentParser(prog='modsm',description=main.__doc__,formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument('--log-level', type=str, default='info', choices=['warning','info','debug'], help='Logging level')
    subparsers = parser.add_subparsers(dest='command',required=True)

    run_parser = subparsers.add_parser('run', help='Detect moving objects in a frame directory', formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_run_arguments(run_parser)
    run_parser.add_argument('--out', type=str, default=None, help='Output directory (masks/, params.json, diagnostics.jsonl, basis.bin)')

    evaluate_parser = subparsers.add_parser('evaluate', help='Score masks against ground truth masks', formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    evaluate_parser.add_argument('--masks', type=str, required=True, help='Directory of masks')
    evaluate_parser.add_argument('--truth', type=str, required=True, help='Directory of ground truth masks')
    evaluate_parser.add_argument('--out', type=str, default=None, help='Output CSV of per-frame and summary rows; report written to the same name with .json')
    evaluate_parser.add_argument('--video', type=str, default=None, help='Video name (default: name of the masks directory)')

    ablate_parser = subparsers.add_parser('ablate', help='Run the three ablation modes with shared training', formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_run_arguments(ablate_parser,mode=False)
    ablate_parser.add_argument('--out', type=str, required=True, help='Output CSV of mode,mean_f1,total_fp,total_fn rows')
    ablate_parser.add_argument('--out-dir', type=str, default=None, help='Directory of the per-mode runs (default: --out without extension)')

    synth_parser = subparsers.add_parser('synth', help='Generate a synthetic scene', formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    synth_parser.add_argument('--out', type=str, required=True, help='Output directory (frames/, truth/, saliency/, saliency_degraded/)')
    synth_parser.add_argument('--width', type=int, default=64, help='Frame width')
    synth_parser.add_argument('--height', type=int, default=64, help='Frame height')
    synth_parser.add_argument('--frames', type=int, default=80, help='Number of frames')
    synth_parser.add_argument('--noise-sigma', type=float, default=5., help='Noise standard deviation, on the [0, 255] scale')
    synth_parser.add_argument('--object-size', type=int, default=12, help='Side of the square object; 0 for no object')
    synth_parser.add_argument('--object-offset', type=float, default=100., help='Object intensity offset')
    synth_parser.add_argument('--speed', type=float, nargs=2, default=[1.,2.], metavar=('ROWS','COLS'), help='Object speed, in pixels per frame')
    synth_parser.add_argument('--flicker', type=float, default=0., help='Fraction of flickering background pixels')
    synth_parser.add_argument('--flicker-amplitude', type=float, default=30., help='Intensity offset of flickering pixels')
    synth_parser.add_argument('--train-count', type=int, default=20, help='Number of leading frames without object')
    synth_parser.add_argument('--textureless', action='store_true', default=False, help='Flat background and flat object')
    synth_parser.add_argument('--static', action='store_true', default=False, help='Constant background')
    synth_parser.add_argument('--seed', type=int, default=42, help='Random seed')

    opt = parser.parse_args(args=args)
    level = opt.log_level
    if getattr(opt,'verbose',False): level = 'debug'
    setup_logging(level=level)
    if CurrentMPIComm.get().rank == 0: print(banner)
    try:
        if opt.command == 'run':
            pysalsub_main.run(make_config(opt,output_dir=opt.out))
        elif opt.command == 'evaluate':
            pysalsub_main.evaluate(opt.masks,opt.truth,output=opt.out,video=opt.video)
        elif opt.command == 'ablate':
            pysalsub_main.ablate(make_config(opt,output_dir=opt.out_dir),opt.out)
        else:
            pysalsub_main.synth(opt.out,width=opt.width,height=opt.height,nframes=opt.frames,noise_sigma=opt.noise_sigma,
                                object_size=opt.object_size,object_offset=opt.object_offset,object_speed=tuple(opt.speed),
                                flicker=opt.flicker,flicker_amplitude=opt.flicker_amplitude,training_count=opt.train_count,
                                textureless=opt.textureless,static=opt.static,seed=opt.seed)
    except Exception as exc:
        exception_handler(type(exc),exc,exc.__traceback__)
        return 1
    return 0


if __name__ == '__main__':

    sys.exit(main())
