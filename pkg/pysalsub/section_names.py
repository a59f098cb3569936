"""Names of the :class:`~pysalsub.block.DataBlock` sections exchanged between pipeline stages."""

stream = 'stream'
frame = 'frame'
saliency = 'saliency'
truth = 'truth'
training = 'training'
parameters = 'parameters'
subspace = 'subspace'
detection = 'detection'
scores = 'scores'
run = 'run'
