import os
import csv
import json
import time

import numpy as np
import pytest

from pysalsub.__main__ import main
from pysalsub import main as pysalsub_main
from pysalsub.config import RunConfig
from pysalsub.imagegrid import list_files
from pysalsub import section_names
from pysalsub.utils import setup_logging


params = ['beta=200','lambda=50','m=3','outer_iters=3','admm_inner_iters=3']


def make_scene(tmp_path):
    scene_dir = os.path.join(tmp_path,'scene')
    assert main(['--log-level','warning','synth','--out',scene_dir,'--width','32','--height','32','--frames','24',
                 '--object-size','6','--noise-sigma','2','--train-count','10','--seed','42']) == 0
    return {name:os.path.join(scene_dir,name) for name in ['frames','truth','saliency','saliency_degraded']}


def read_csv(filename):
    with open(filename,'r') as file:
        return list(csv.reader(file))


def test_run(tmp_path, capsys):
    dirs = make_scene(tmp_path)
    assert len(list_files(dirs['frames'])) == 24
    out = os.path.join(tmp_path,'run')
    assert main(['--log-level','warning','run','--frames',dirs['frames'],'--saliency',dirs['saliency'],'--truth',dirs['truth'],
                 '--out',out,'--train-count','10','--param'] + params) == 0
    masks = list_files(os.path.join(out,'masks'))
    assert len(masks) == 14
    assert os.path.basename(masks[0]) == '000010.pgm'
    with open(os.path.join(out,'params.json'),'r') as file:
        saved = json.load(file)
    assert saved['beta'] == 200 and saved['m'] == 3 and saved['outer_iters'] == 3
    with open(os.path.join(out,'diagnostics.jsonl'),'r') as file:
        records = [json.loads(line) for line in file]
    assert len(records) == 14
    assert set(records[0]) == {'frame','objective','converged','mask_area','beta'}
    assert os.path.getsize(os.path.join(out,'basis.bin')) == 16 + 8 * 32 * 32 * 3
    rows = read_csv(os.path.join(out,'scores.csv'))
    assert len(rows) == 1 + 14 + 1 + 1
    assert len(read_csv(os.path.join(out,'roc.csv'))) == 1 + 101

    capsys.readouterr()
    assert main(['--log-level','warning','evaluate','--masks',os.path.join(out,'masks'),'--truth',dirs['truth'],
                 '--out',os.path.join(tmp_path,'evaluation.csv')]) == 0
    printed = capsys.readouterr().out
    f1 = float(printed.split('mean F1 = ')[1].split()[0])
    assert f1 > 0.8
    with open(os.path.join(tmp_path,'evaluation.json'),'r') as file:
        assert np.isclose(json.load(file)['mean'],f1,atol=1e-6)

    # truth against itself
    assert main(['--log-level','warning','evaluate','--masks',dirs['truth'],'--truth',dirs['truth']]) == 0
    assert 'mean F1 = 1.000000' in capsys.readouterr().out

    # starting from a saved basis, with full diagnostics
    out2 = os.path.join(tmp_path,'run2')
    assert main(['run','--frames',dirs['frames'],'--saliency',dirs['saliency'],'--out',out2,'--train-count','10',
                 '--basis',os.path.join(out,'basis.bin'),'--verbose','--param'] + params) == 0
    with open(os.path.join(out2,'diagnostics.jsonl'),'r') as file:
        record = json.loads(file.readline())
    assert len(record['objective_trace']) == 3 and len(record['cg_iterations']) == 3
    assert not os.path.exists(os.path.join(out2,'scores.csv'))


def test_command(capsys):
    with pytest.raises(SystemExit):
        main(['--help'])
    assert capsys.readouterr().out.startswith('usage: modsm')
    setup_py = os.path.join(os.path.dirname(__file__),'..','..','setup.py')
    if os.path.isfile(setup_py):
        with open(setup_py,'r') as file:
            assert 'modsm=pysalsub.__main__:main' in file.read()


def test_run_errors(tmp_path):
    dirs = make_scene(tmp_path)
    out = os.path.join(tmp_path,'run')
    # saliency mode requires saliency maps
    assert main(['run','--frames',dirs['frames'],'--out',out,'--train-count','10','--param'] + params) == 1
    assert main(['run','--frames',dirs['frames'],'--saliency',os.path.join(tmp_path,'missing'),'--out',out,'--train-count','10']) == 1
    # baseline never reads them
    assert main(['run','--frames',dirs['frames'],'--mode','baseline','--out',out,'--train-count','10','--param'] + params) == 0
    assert len(list_files(os.path.join(out,'masks'))) == 14
    # fewer frames than the training window
    assert main(['run','--frames',dirs['frames'],'--mode','baseline','--out',out,'--train-count','30']) == 1
    assert main(['run','--frames',dirs['frames'],'--mode','other','--out',out]) == 1
    assert main(['run','--frames',dirs['frames'],'--mode','baseline','--out',out,'--train-count','10','--param','gamma=1']) == 1


def test_run_failure(tmp_path):
    dirs = make_scene(tmp_path)
    # valid header, truncated pixel data: fails on load, not at setup
    with open(os.path.join(dirs['frames'],'000015.pgm'),'wb') as file:
        file.write(b'P5\n32 32\n255\n' + bytes(10))
    out = os.path.join(tmp_path,'run')
    config = RunConfig({section_names.run:{'frames_dir':dirs['frames'],'output_dir':out,'training_count':10,'mode':'baseline'},
                        section_names.parameters:{'m':3,'outer_iters':2,'admm_inner_iters':2}})
    pipeline = pysalsub_main.make_pipeline(config)
    with pytest.raises(RuntimeError):
        pipeline.run()
    # outputs of the frames processed before the failure are complete
    assert pipeline.modules['writer'].diagnostics.closed
    assert len(read_diagnostics(out)) == 5
    assert len(list_files(os.path.join(out,'masks'))) == 5
    assert os.path.isfile(os.path.join(out,'basis.bin'))


def test_run_config(tmp_path):
    dirs = make_scene(tmp_path)
    config = RunConfig({section_names.run:{'frames_dir':dirs['frames'],'saliency_dir':dirs['saliency_degraded'],'truth_dir':dirs['truth'],
                                           'output_dir':os.path.join(tmp_path,'run'),'training_count':10,'mode':'full'},
                        section_names.parameters:{'m':3,'outer_iters':2,'admm_inner_iters':2}})
    data_block = pysalsub_main.run(config)
    table = data_block[section_names.scores,'table']
    assert len(table) == 14
    assert data_block[section_names.stream,'video'] == 'frames'
    params = data_block[section_names.parameters,'final']
    assert params['beta'] >= params['beta_floor']
    assert data_block[section_names.subspace,'state'].orthonormality_error() < 1e-8


def test_ablate(tmp_path):
    dirs = make_scene(tmp_path)
    output = os.path.join(tmp_path,'ablation.csv')
    assert main(['--log-level','warning','ablate','--frames',dirs['frames'],'--saliency',dirs['saliency'],'--truth',dirs['truth'],
                 '--out',output,'--train-count','10','--param'] + params) == 0
    rows = read_csv(output)
    assert rows[0] == ['mode','mean_f1','total_fp','total_fn']
    assert [row[0] for row in rows[1:]] == ['baseline','connectivity','saliency']
    for mode in ['baseline','connectivity','saliency']:
        assert len(list_files(os.path.join(tmp_path,'ablation',mode,'masks'))) == 14
    # ground truth is required
    assert main(['ablate','--frames',dirs['frames'],'--saliency',dirs['saliency'],'--out',output,'--train-count','10']) == 1


def detection_config(dirs, output_dir):
    # derived parameters, oracle saliency
    return RunConfig({section_names.run:{'frames_dir':dirs['frames'],'saliency_dir':dirs['saliency'],'truth_dir':dirs['truth'],
                                         'output_dir':output_dir}})


def read_diagnostics(output_dir):
    with open(os.path.join(output_dir,'diagnostics.jsonl'),'r') as file:
        return [json.loads(line) for line in file]


def test_synthetic_detection(tmp_path, monkeypatch):
    monkeypatch.setenv('MODSM_THREADS','1')
    dirs = pysalsub_main.synth(os.path.join(tmp_path,'scene'),width=64,height=64,nframes=80,object_size=12,object_offset=100.,
                               noise_sigma=5.,training_count=20,seed=42)
    t0 = time.perf_counter()
    data_block = pysalsub_main.run(detection_config(dirs,os.path.join(tmp_path,'run')))
    elapsed = time.perf_counter() - t0
    table = data_block[section_names.scores,'table']
    assert len(table) == 60
    assert table.mean_frame_f1() >= 0.95
    assert elapsed <= 60.
    records = read_diagnostics(os.path.join(tmp_path,'run'))
    assert np.mean([record['converged'] for record in records]) >= 0.95
    # the mask does not grow along the stream
    areas = [record['mask_area'] for record in records]
    assert max(areas[-10:]) <= 1.2 * 144


def test_ablation_ordering(tmp_path):
    # flickering background: the saliency term removes false positives the connectivity term alone keeps
    dirs = pysalsub_main.synth(os.path.join(tmp_path,'flicker_scene'),flicker=0.1,seed=42)
    output = os.path.join(tmp_path,'flicker.csv')
    rows = {row['mode']:row for row in pysalsub_main.ablate(detection_config(dirs,None),output)}
    assert rows['saliency']['total_fp'] < rows['connectivity']['total_fp']
    assert rows['connectivity']['total_fn'] <= rows['baseline']['total_fn']
    records = read_diagnostics(os.path.join(tmp_path,'flicker','saliency'))
    assert np.mean([record['converged'] for record in records]) >= 0.95

    # textureless background and object: the connectivity term does not lose object pixels
    dirs = pysalsub_main.synth(os.path.join(tmp_path,'textureless_scene'),textureless=True,seed=42)
    output = os.path.join(tmp_path,'textureless.csv')
    rows = {row['mode']:row for row in pysalsub_main.ablate(detection_config(dirs,None),output,modes=['baseline','connectivity'])}
    assert rows['connectivity']['total_fn'] <= rows['baseline']['total_fn']


if __name__ == '__main__':

    import tempfile
    setup_logging()
    with tempfile.TemporaryDirectory() as tmp_dir:
        test_run_errors(tmp_dir)
        test_run_config(tmp_dir)
        test_ablate(tmp_dir)
        test_ablation_ordering(tmp_dir)
