"""Confusion counts, F1 scores, ROC curves and score reports; foreground is the positive class."""

import os
import csv

import numpy as np

from . import imagegrid
from .utils import BaseClass, savefile, mkdir, dump_json


class EvaluationError(Exception):

    """Exception raised when issue with evaluation inputs."""


class ConfusionCounts(BaseClass):
    """
    Pixel confusion counts.

    Attributes
    ----------
    tp, fp, tn, fn : int
        True positives, false positives (false alarms), true negatives, false negatives (missed alarms).
    """
    names = ['tp','fp','tn','fn']

    def __init__(self, tp=0, fp=0, tn=0, fn=0):
        self.tp, self.fp, self.tn, self.fn = (int(value) for value in (tp,fp,tn,fn))
        if min(self.tp,self.fp,self.tn,self.fn) < 0:
            raise EvaluationError('Confusion counts must be non-negative, found {}.'.format(self))

    def __add__(self, other):
        return self.__class__(*(getattr(self,name) + getattr(other,name) for name in self.names))

    def __radd__(self, other):
        if other == 0:
            return self.copy()
        return self.__add__(other)

    def __eq__(self, other):
        return isinstance(other,ConfusionCounts) and self.to_tuple() == other.to_tuple()

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def to_tuple(self):
        return tuple(getattr(self,name) for name in self.names)

    def to_dict(self):
        return {name:getattr(self,name) for name in self.names}

    @property
    def precision(self):
        """Precision, 0 if no predicted positive."""
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.

    @property
    def recall(self):
        """Recall (true positive rate), 0 if no true positive."""
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.

    @property
    def fpr(self):
        """False positive rate, 0 if no true negative."""
        return self.fp / (self.fp + self.tn) if self.fp + self.tn else 0.

    def __repr__(self):
        return '{}(tp={:d}, fp={:d}, tn={:d}, fn={:d})'.format(self.__class__.__name__,*self.to_tuple())


def _check_pair(mask, truth):
    mask,truth = np.asarray(mask),np.asarray(truth)
    if mask.shape != truth.shape:
        raise EvaluationError('Mask of shape {} does not match truth of shape {}.'.format(mask.shape,truth.shape))
    return mask != 0, truth != 0


def confusion(mask, truth):
    """Return :class:`ConfusionCounts` of ``mask`` against ``truth`` (nonzero is foreground)."""
    mask,truth = _check_pair(mask,truth)
    tp = np.sum(mask & truth)
    fp = np.sum(mask & ~truth)
    fn = np.sum(~mask & truth)
    return ConfusionCounts(tp=tp,fp=fp,tn=mask.size - tp - fp - fn,fn=fn)


def f1_score(counts):
    """Return F1 score, the harmonic mean of precision and recall; 0 if there is no true positive."""
    if counts.tp == 0:
        return 0.
    precision,recall = counts.precision,counts.recall
    return 2. * precision * recall / (precision + recall)


class RocCurve(BaseClass):
    """
    ROC curve.

    Attributes
    ----------
    thresholds : array
        Increasing thresholds.

    fpr : array
        False positive rate at each threshold.

    tpr : array
        True positive rate at each threshold.
    """
    def __init__(self, thresholds, fpr, tpr):
        self.thresholds = np.asarray(thresholds,dtype='f8')
        self.fpr = np.asarray(fpr,dtype='f8')
        self.tpr = np.asarray(tpr,dtype='f8')

    @property
    def points(self):
        """List of (fpr, tpr) tuples, ordered by threshold."""
        return list(zip(self.fpr.tolist(),self.tpr.tolist()))

    @savefile
    def write_csv(self, filename):
        """Write ``t,fpr,tpr`` rows to ``filename``."""
        with open(filename,'w',newline='') as file:
            writer = csv.writer(file)
            writer.writerow(['t','fpr','tpr'])
            for row in zip(self.thresholds,self.fpr,self.tpr):
                writer.writerow(['{:.6g}'.format(value) for value in row])


class RocAccumulator(BaseClass):
    """
    Accumulate confusion counts over frames for a uniform grid of thresholds over [0, 1];
    rates are computed from the summed counts.

    >>> roc = RocAccumulator(steps=101)
    >>> roc.add(b, truth)
    >>> curve = roc.curve()
    """
    def __init__(self, steps=101):
        if steps < 2:
            raise EvaluationError('ROC requires at least 2 thresholds, found {:d}.'.format(steps))
        self.thresholds = np.linspace(0.,1.,steps)
        self.counts = np.zeros((steps,4),dtype='i8')
        self.nframes = 0

    def add(self, b, truth):
        """Add counts of background vector ``b`` binarized at each threshold, against ``truth``."""
        b = np.asarray(b,dtype='f8')
        _,truth = _check_pair(b,truth)
        npositives = np.sum(truth)
        # mask = b < t; sorting b makes counts a search per threshold
        tp = np.searchsorted(np.sort(b[truth]),self.thresholds,side='left')
        fp = np.searchsorted(np.sort(b[~truth]),self.thresholds,side='left')
        self.counts[:,0] += tp
        self.counts[:,1] += fp
        self.counts[:,2] += truth.size - npositives - fp
        self.counts[:,3] += npositives - tp
        self.nframes += 1

    def curve(self):
        """Return :class:`RocCurve`."""
        if not self.nframes:
            raise EvaluationError('No frames accumulated for ROC.')
        tp,fp,tn,fn = self.counts.T
        with np.errstate(divide='ignore',invalid='ignore'):
            tpr = np.where(tp + fn > 0,tp / np.maximum(tp + fn,1),0.)
            fpr = np.where(fp + tn > 0,fp / np.maximum(fp + tn,1),0.)
        return RocCurve(self.thresholds,fpr,tpr)


def roc_sweep(b_sequence, truth_sequence, steps=101):
    """Return :class:`RocCurve` of background vectors ``b_sequence`` against masks ``truth_sequence``."""
    b_sequence,truth_sequence = list(b_sequence),list(truth_sequence)
    if not b_sequence:
        raise EvaluationError('Empty sequences.')
    if len(b_sequence) != len(truth_sequence):
        raise EvaluationError('Sequences of background vectors and truths differ in length ({:d} vs {:d}).'.format(len(b_sequence),len(truth_sequence)))
    roc = RocAccumulator(steps=steps)
    for b,truth in zip(b_sequence,truth_sequence):
        roc.add(b,truth)
    return roc.curve()


class ScoreTable(BaseClass):
    """
    Per-frame confusion counts of one or several videos.

    Per-video F1 is that of the counts summed over the video frames;
    the mean over videos is unweighted.
    """
    header = ['video','frame','tp','fp','tn','fn','f1']

    def __init__(self):
        self.rows = []

    def add(self, video, frame, counts):
        """Add ``counts`` of ``frame`` (name) of ``video``."""
        self.rows.append((str(video),str(frame),counts))

    def __len__(self):
        return len(self.rows)

    @property
    def videos(self):
        """Video names, in order of first appearance."""
        return list(dict.fromkeys(video for video,_,_ in self.rows))

    def counts(self, video=None):
        """Return counts summed over the frames of ``video`` (all videos if ``None``)."""
        return sum((counts for name,_,counts in self.rows if video is None or name == video),ConfusionCounts())

    def video_f1(self):
        """Return dictionary of video: F1 of summed counts."""
        return {video:f1_score(self.counts(video)) for video in self.videos}

    def mean_frame_f1(self, video=None):
        """Return mean of per-frame F1 (over ``video`` frames, or all frames if ``None``)."""
        scores = [f1_score(counts) for name,_,counts in self.rows if video is None or name == video]
        if not scores:
            raise EvaluationError('No frames to average.')
        return float(np.mean(scores))

    @savefile
    def write_csv(self, filename):
        """Write per-frame rows, then one summary row per video (frame = 'summary') and a final 'mean' row."""
        with open(filename,'w',newline='') as file:
            writer = csv.writer(file)
            writer.writerow(self.header)
            for video,frame,counts in self.rows:
                writer.writerow([video,frame] + list(counts.to_tuple()) + ['{:.6f}'.format(f1_score(counts))])
            for video in self.videos:
                counts = self.counts(video)
                writer.writerow([video,'summary'] + list(counts.to_tuple()) + ['{:.6f}'.format(f1_score(counts))])
            video_f1 = self.video_f1()
            if video_f1:
                counts = self.counts()
                writer.writerow(['all','mean'] + list(counts.to_tuple()) + ['{:.6f}'.format(np.mean(list(video_f1.values())))])


def aggregate_report(per_video, csv_filename=None, json_filename=None):
    """
    Return report of per-video F1 scores and their unweighted mean, optionally written as CSV (``video,f1`` rows
    followed by a ``mean`` row) and JSON.
    """
    per_video = {str(video):float(score) for video,score in dict(per_video).items()}
    if not per_video:
        raise EvaluationError('Report requires at least one video.')
    report = {'videos':per_video,'mean':float(np.mean(list(per_video.values())))}
    if csv_filename is not None:
        mkdir(os.path.dirname(csv_filename))
        with open(csv_filename,'w',newline='') as file:
            writer = csv.writer(file)
            writer.writerow(['video','f1'])
            for video,score in per_video.items():
                writer.writerow([video,'{:.6f}'.format(score)])
            writer.writerow(['mean','{:.6f}'.format(report['mean'])])
    if json_filename is not None:
        mkdir(os.path.dirname(json_filename))
        with open(json_filename,'w') as file:
            file.write(dump_json(report,indent=2))
    return report


def evaluate_directories(masks_dir, truth_dir, video=None):
    """
    Score masks of ``masks_dir`` against ground truth masks of ``truth_dir`` with the same file stem.
    Only frames with both files are scored.

    Returns
    -------
    table : ScoreTable
    """
    if video is None:
        video = os.path.basename(os.path.normpath(masks_dir))
    masks = imagegrid.list_files(masks_dir)
    matches = {mask:truth for mask,truth in imagegrid.match_files(masks,truth_dir,default=imagegrid.frame_patterns).items() if truth is not None}
    if not matches:
        raise EvaluationError('No overlapping file names between {} and {}.'.format(masks_dir,truth_dir))
    table = ScoreTable()
    for mask,truth in matches.items():
        grid = imagegrid.read_grid(truth)
        table.add(video,imagegrid.file_stem(mask),confusion(imagegrid.load_mask(mask,grid=grid),imagegrid.load_mask(truth,grid=grid)))
    ScoreTable.log_info('Scored {:d} frames of {}.'.format(len(table),video),rank=0)
    return table
