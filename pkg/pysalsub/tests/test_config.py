import os

import pytest

from pysalsub.config import ConfigBlock, ConfigError, RunConfig, parse_param, yaml_parser
from pysalsub import section_names
from pysalsub.utils import setup_logging


def test_config(tmp_path):

    fn = os.path.join(tmp_path,'config.yaml')
    with open(fn,'w') as file:
        file.write('run:\n  mode: baseline\n  training_count: 10\nparameters:\n  beta: 2.5\nignored: 3\n')
    config = ConfigBlock(fn)
    assert config.filename == fn
    assert config.data == {'run':{'mode':'baseline','training_count':10},'parameters':{'beta':2.5}}
    config2 = ConfigBlock(config)
    assert config2.data == config.data
    config = ConfigBlock(config,string='parameters:\n  t: 0.4\n')
    assert config['parameters','t'] == 0.4 and config['parameters','beta'] == 2.5

    # json is yaml
    fn = os.path.join(tmp_path,'config.json')
    with open(fn,'w') as file:
        file.write('{"run": {"mode": "connectivity"}, "parameters": {"lambda": 1.0}}')
    assert ConfigBlock(fn)['run','mode'] == 'connectivity'
    with open(fn,'w') as file:
        file.write('{"parameters": {"eta": 1e-4, "cg_tol": 1E-10, "beta": 2.5e+1, "outer_iters": 12, "tag": "1e-4"}}')
    parameters = ConfigBlock(fn)['parameters']
    assert parameters == {'eta':1e-4,'cg_tol':1e-10,'beta':25.,'outer_iters':12,'tag':'1e-4'}
    assert isinstance(parameters['eta'],float) and isinstance(parameters['outer_iters'],int)
    assert yaml_parser('parameters:\n  eta: 1e-4\n  t: .5\n')['parameters'] == {'eta':1e-4,'t':0.5}

    with pytest.raises(ConfigError):
        yaml_parser('- a\n- b\n')
    with pytest.raises(ConfigError):
        ConfigBlock(os.path.join(tmp_path,'missing.yaml'))


def test_parse_param():

    assert parse_param('beta=2.5') == ('beta',2.5)
    assert parse_param('outer_iters=12') == ('outer_iters',12)
    assert parse_param(' t = 0.4 ') == ('t',0.4)
    assert parse_param('eta=1e-4') == ('eta',1e-4)
    assert parse_param('cg_tol=-2E+3') == ('cg_tol',-2e3)
    assert parse_param('mode=baseline') == ('mode','baseline')
    with pytest.raises(ConfigError):
        parse_param('beta')
    with pytest.raises(ConfigError):
        parse_param('=2')


def test_run_config(tmp_path):

    frames_dir = os.path.join(tmp_path,'frames')
    saliency_dir = os.path.join(tmp_path,'saliency')
    os.makedirs(frames_dir)
    config = RunConfig({'run':{'frames_dir':frames_dir,'mode':'baseline'}})
    assert config.options['training_count'] == 20
    assert config.options['mode'] == 'baseline'
    assert config.overrides == {}
    with pytest.raises(ConfigError):
        RunConfig({'run':{'frame_dir':frames_dir}})

    config.set_flags(output_dir=os.path.join(tmp_path,'out'),training_count=None)
    assert config.options['training_count'] == 20
    config.set_params(['beta=3','m=2'])
    config.set_params({'t':0.4})
    assert config.overrides == {'beta':3,'m':2,'t':0.4}
    config.validate()
    # baseline mode never reads saliency maps
    assert config.options['saliency_dir'] is None

    config.set_flags(mode='AddSaliencyMap')
    with pytest.raises(ConfigError):
        config.validate()
    config.set_flags(saliency_dir=saliency_dir)
    with pytest.raises(ConfigError):
        config.validate()
    os.makedirs(saliency_dir)
    config.validate()
    assert config.options['mode'] == 'saliency'

    config.set_flags(training_count=1)
    with pytest.raises(ConfigError):
        config.validate()
    config.set_flags(training_count=5,mode='unknown')
    with pytest.raises(ConfigError):
        config.validate()
    config.set_flags(mode='connectivity',variance_scale='image')
    with pytest.raises(ConfigError):
        config.validate()
    config.set_flags(variance_scale='frame',basis=os.path.join(tmp_path,'basis.bin'))
    with pytest.raises(ConfigError):
        config.validate()
    config.set_flags(basis=None)
    config[section_names.run,'basis'] = None
    config.validate(require_truth=False)
    with pytest.raises(ConfigError):
        config.validate(require_truth=True)
    with pytest.raises(ConfigError):
        config.set_flags(unknown=2)


if __name__ == '__main__':

    import tempfile
    setup_logging()
    test_parse_param()
    with tempfile.TemporaryDirectory() as tmp_dir:
        test_config(tmp_dir)
    with tempfile.TemporaryDirectory() as tmp_dir:
        test_run_config(tmp_dir)
