import os

import pytest

from pysalsub.module import BaseModule
from pysalsub.pipeline import StreamPipeline
from pysalsub.config import ConfigBlock
from pysalsub import section_names
from pysalsub.utils import setup_logging


class Counter(BaseModule):

    def setup(self):
        self.data_block[section_names.stream,'count'] = self.options.get_int('start',0)
        self.data_block[section_names.stream,'done'] = False

    def execute(self):
        count = self.data_block[section_names.stream,'count'] + 1
        self.data_block[section_names.stream,'count'] = count
        self.data_block[section_names.stream,'done'] = count >= self.options.get_int('stop',3)

    def cleanup(self):
        self.data_block[section_names.scores,'total'] = self.data_block[section_names.stream,'count']


class Doubler(BaseModule):

    def setup(self):
        self.values = []

    def execute(self):
        self.values.append(2 * self.data_block[section_names.stream,'count'])

    def cleanup(self):
        self.data_block[section_names.scores,'values'] = self.values


class Failing(BaseModule):

    def setup(self):
        pass

    def execute(self):
        raise ValueError('failure')

    def cleanup(self):
        pass


def test_module():
    module = Counter('counter',options={'stop':2})
    assert str(module) == 'Counter [counter]'
    assert module.config_block['counter','stop'] == 2
    module.setup()
    assert module.timings['setup'][0] == 1
    module.execute()
    module.execute()
    assert module.data_block[section_names.stream,'done']
    module.cleanup()
    assert module.data_block[section_names.scores,'total'] == 2


def test_stream_pipeline():
    config = ConfigBlock({'counter':{'start':1,'stop':4}})
    pipeline = StreamPipeline(modules=[Counter('counter',config_block=config),Doubler('doubler')],config_block=config)
    assert pipeline.modules['doubler'].config_block is config
    niterations = pipeline.run()
    assert niterations == 3
    assert pipeline.data_block[section_names.scores,'values'] == [4,6,8]
    assert pipeline.data_block[section_names.scores,'total'] == 4
    assert pipeline.modules['doubler'].timings['execute'][0] == 3 and pipeline.modules['doubler'].timings['setup'][0] == 1
    with pytest.raises(ValueError):
        pipeline.add_module(Doubler('doubler'))


class Recorder(BaseModule):

    def setup(self):
        self.file = open(self.options['filename'],'w')

    def execute(self):
        self.file.write('{:d}\n'.format(self.data_block[section_names.stream,'count']))

    def cleanup(self):
        self.file.close()


def test_cleanup_on_failure(tmp_path):
    fn = os.path.join(tmp_path,'counts.txt')
    recorder = Recorder('recorder',options={'filename':fn})
    pipeline = StreamPipeline(modules=[Counter('counter'),recorder,Failing('failing')])
    with pytest.raises(RuntimeError):
        pipeline.run()
    assert recorder.file.closed
    assert pipeline.data_block[section_names.scores,'total'] == 1
    with open(fn,'r') as file:
        assert file.read() == '1\n'

    # stages after a failing setup are not cleaned up
    class FailingSetup(Failing):

        def setup(self):
            raise ValueError('failure')

    recorder = Recorder('recorder',options={'filename':fn})
    late = Recorder('late',options={'filename':os.path.join(tmp_path,'late.txt')})
    pipeline = StreamPipeline(modules=[recorder,FailingSetup('failing'),late])
    with pytest.raises(RuntimeError):
        pipeline.run()
    assert recorder.file.closed and not hasattr(late,'file')


def test_exception():
    pipeline = StreamPipeline(modules=[Counter('counter'),Failing('failing')])
    with pytest.raises(RuntimeError) as exc:
        pipeline.run()
    assert isinstance(exc.value.__cause__,RuntimeError)
    assert 'Failing [failing]' in str(exc.value.__cause__)
    assert isinstance(exc.value.__cause__.__cause__,ValueError)


if __name__ == '__main__':

    import tempfile
    setup_logging()
    test_module()
    test_stream_pipeline()
    test_exception()
    with tempfile.TemporaryDirectory() as tmp_dir:
        test_cleanup_on_failure(tmp_dir)
