import os
import csv
import json

import numpy as np
import pytest

from pysalsub.evaluation import (EvaluationError, ConfusionCounts, confusion, f1_score, RocAccumulator, roc_sweep, ScoreTable,
                                 aggregate_report, evaluate_directories)
from pysalsub.imagegrid import ImageGrid, write_mask
from pysalsub.utils import setup_logging, mkdir


def test_confusion():
    counts = confusion(np.array([[1,0],[1,0]]),np.array([[1,1],[0,0]]))
    assert counts.to_tuple() == (1,1,1,1)
    counts = confusion(np.ones(10),np.ones(10))
    assert counts == ConfusionCounts(tp=10)
    rng = np.random.default_rng(seed=42)
    truth = rng.random(100) < 0.3
    counts = confusion(~truth,truth)
    assert counts.tp == counts.tn == 0 and counts.fp + counts.fn == 100
    mask = rng.random(100) < 0.5
    counts = confusion(mask,truth)
    assert counts.total == 100
    assert counts + ConfusionCounts(1,2,3,4) == ConfusionCounts(counts.tp + 1,counts.fp + 2,counts.tn + 3,counts.fn + 4)
    assert sum([counts,counts]) == counts + counts
    with pytest.raises(EvaluationError):
        confusion(np.ones(3),np.ones(4))
    with pytest.raises(EvaluationError):
        ConfusionCounts(tp=-1)


def test_f1():
    counts = ConfusionCounts(tp=48,fp=12,tn=100,fn=32)
    assert np.isclose(counts.precision,0.8) and np.isclose(counts.recall,0.6)
    assert np.isclose(f1_score(counts),0.685714,atol=1e-6)
    assert f1_score(ConfusionCounts(tn=10,fp=3,fn=2)) == 0.
    assert f1_score(ConfusionCounts()) == 0.
    assert f1_score(ConfusionCounts(tp=5,tn=5)) == 1.
    rng = np.random.default_rng(seed=42)
    for i in range(1000):
        tp,fp,tn,fn = rng.integers(0,50,size=4)
        counts = ConfusionCounts(tp,fp,tn,fn)
        ref = 2. * tp / (2. * tp + fp + fn) if tp else 0.
        assert np.isclose(f1_score(counts),ref)
        # swapping precision and recall
        assert np.isclose(f1_score(ConfusionCounts(tp,fn,tn,fp)),f1_score(counts))


def test_roc():
    rng = np.random.default_rng(seed=42)
    truth = [rng.random(50) < 0.2 for i in range(3)]
    b = [rng.random(50) for i in range(3)]
    curve = roc_sweep(b,truth,steps=101)
    assert len(curve.thresholds) == 101
    assert curve.points[0] == (0.,0.)
    assert np.all(np.diff(curve.fpr) >= 0.) and np.all(np.diff(curve.tpr) >= 0.)
    # against explicit counts
    for index in [10,50,90]:
        t = curve.thresholds[index]
        counts = sum(confusion(bb < t,tt) for bb,tt in zip(b,truth))
        assert np.isclose(curve.tpr[index],counts.recall) and np.isclose(curve.fpr[index],counts.fpr)
    # perfect separation
    b = [np.where(tt,0.,1.) for tt in truth]
    curve = roc_sweep(b,truth)
    assert (0.,1.) in curve.points
    with pytest.raises(EvaluationError):
        roc_sweep([],[])
    with pytest.raises(EvaluationError):
        roc_sweep(b,truth[:2])
    with pytest.raises(EvaluationError):
        RocAccumulator().curve()
    with pytest.raises(EvaluationError):
        RocAccumulator(steps=1)


def test_report(tmp_path):
    report = aggregate_report({'a':0.6,'b':0.8})
    assert np.isclose(report['mean'],0.7)
    assert report['videos'] == {'a':0.6,'b':0.8}
    # missing parent directories are created
    csv_fn,json_fn = os.path.join(tmp_path,'out','csv','report.csv'),os.path.join(tmp_path,'out','json','report.json')
    aggregate_report({'a':0.6,'b':0.8},csv_filename=csv_fn,json_filename=json_fn)
    with open(csv_fn,'r') as file:
        rows = list(csv.reader(file))
    assert rows[0] == ['video','f1'] and rows[-1] == ['mean','0.700000'] and len(rows) == 4
    with open(json_fn,'r') as file:
        assert np.isclose(json.load(file)['mean'],0.7)
    with pytest.raises(EvaluationError):
        aggregate_report({})


def test_score_table(tmp_path):
    table = ScoreTable()
    table.add('a','000',ConfusionCounts(tp=1,fp=1,tn=2,fn=0))
    table.add('a','001',ConfusionCounts(tp=0,fp=0,tn=4,fn=0))
    table.add('b','000',ConfusionCounts(tp=2,fp=0,tn=2,fn=0))
    assert len(table) == 3 and table.videos == ['a','b']
    assert table.counts('a') == ConfusionCounts(tp=1,fp=1,tn=6,fn=0)
    assert table.counts().tp == 3
    assert np.isclose(table.video_f1()['a'],2. / 3.) and table.video_f1()['b'] == 1.
    assert np.isclose(table.mean_frame_f1(),(2. / 3. + 0. + 1.) / 3.)
    assert np.isclose(table.mean_frame_f1('a'),1. / 3.)
    fn = os.path.join(tmp_path,'scores.csv')
    table.write_csv(fn)
    with open(fn,'r') as file:
        rows = list(csv.reader(file))
    assert rows[0] == ScoreTable.header
    assert len(rows) == 1 + 3 + 2 + 1
    assert rows[4][:2] == ['a','summary'] and rows[-1][:2] == ['all','mean']
    assert np.isclose(float(rows[-1][-1]),(2. / 3. + 1.) / 2.,atol=1e-6)
    with pytest.raises(EvaluationError):
        ScoreTable().mean_frame_f1()


def test_evaluate_directories(tmp_path):
    grid = ImageGrid(4,3)
    masks_dir,truth_dir = os.path.join(tmp_path,'masks'),os.path.join(tmp_path,'truth')
    mkdir(masks_dir)
    mkdir(truth_dir)
    rng = np.random.default_rng(seed=42)
    ref = ScoreTable()
    for index in range(3):
        mask,truth = (rng.random(grid.N) < 0.4).astype('u1'),(rng.random(grid.N) < 0.4).astype('u1')
        name = '{:06d}'.format(index)
        write_mask(mask,os.path.join(masks_dir,name + '.pgm'),grid)
        write_mask(truth,os.path.join(truth_dir,name + '.pgm'),grid)
        ref.add('masks',name,confusion(mask,truth))
    # no truth for this one
    write_mask(np.ones(grid.N),os.path.join(masks_dir,'000010.pgm'),grid)
    table = evaluate_directories(masks_dir,truth_dir)
    assert len(table) == 3
    assert table.videos == ['masks']
    assert table.counts() == ref.counts()
    assert np.isclose(table.mean_frame_f1(),ref.mean_frame_f1())
    table = evaluate_directories(truth_dir,truth_dir,video='video')
    counts = table.counts()
    assert counts.fp == counts.fn == 0 and table.videos == ['video']
    with pytest.raises(EvaluationError):
        evaluate_directories(masks_dir,tmp_path)


if __name__ == '__main__':

    import tempfile
    setup_logging()
    test_confusion()
    test_f1()
    test_roc()
    with tempfile.TemporaryDirectory() as tmp_dir:
        test_report(tmp_dir)
        test_score_table(tmp_dir)
        test_evaluate_directories(tmp_dir)
