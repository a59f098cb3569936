import sys
from setuptools import setup

base_dir = 'pysalsub'

sys.path.insert(0,base_dir)
from _version import __version__

setup(name='pysalsub',
    version=__version__,
    author='pysalsub developers',
    description='Moving object detection in video streams with an incremental background subspace, a connectivity prior and saliency maps',
    license='GPLv3',
    packages=['pysalsub'],
    install_requires=['pyyaml','numpy','scipy','Pillow','mpi4py'],
    extras_require={'extras':['pytest']},
    entry_points={'console_scripts': ['modsm=pysalsub.__main__:main','pysalsub=pysalsub.__main__:main']}
    )
