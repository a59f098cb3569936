"""
Synthetic scenes for desk-scale tests: a smooth textured background with noise and optional flickering pixels,
a square bouncing inside the frame, and the corresponding ground truth and saliency maps.
"""

import os

import numpy as np
from PIL import Image
from scipy import ndimage

from .imagegrid import ImageGrid, ImageError
from .utils import BaseClass, mkdir, dump_json


def bounce(position, limit):
    """Fold ``position`` into [0, ``limit``], as a point bouncing between the two walls."""
    if limit <= 0:
        return 0
    position = position % (2 * limit)
    return 2 * limit - position if position > limit else position


def to_uint8(image):
    """Round and clip ``image`` to 8-bit."""
    return np.clip(np.rint(image),0,255).astype('u1')


def write_pgm(image, filename):
    """Write 2D ``uint8`` array ``image`` as binary PGM (P5)."""
    try:
        Image.fromarray(np.asarray(image,dtype='u1')).save(filename,format='PPM')
    except OSError as exc:
        raise ImageError('Could not write {}.'.format(filename)) from exc


class SyntheticScene(BaseClass):
    """
    Seeded synthetic video.

    The object is absent during the first ``training_count`` frames, then moves at constant speed, bouncing
    on the frame borders so that it always stays fully in frame. Flickering pixels (dynamic background) are
    drawn once; at each frame each of them is offset by plus or minus ``flicker_amplitude``, unless hidden
    by the object. The textured background stays within [30, 150], so that the object offset is not clipped.

    >>> scene = SyntheticScene(width=64, height=64, nframes=80, seed=42)
    >>> scene.write('synth/')
    """
    _defaults = {'width':64,'height':64,'nframes':80,'noise_sigma':5.,'object_size':12,'object_offset':100.,
                 'object_speed':(1.,2.),'flicker':0.,'flicker_amplitude':30.,'training_count':20,'seed':42,
                 'textureless':False,'static':False,'degraded_fraction':0.1}

    def __init__(self, **kwargs):
        """
        Initialize :class:`SyntheticScene`.

        Parameters
        ----------
        width, height : int, default=64
            Frame size.

        nframes : int, default=80
            Number of frames.

        noise_sigma : float, default=5.
            Standard deviation of the Gaussian noise, on the [0, 255] scale.

        object_size : int, default=12
            Side of the square object, in pixels. 0 for no object.

        object_offset : float, default=100.
            Intensity added to the background under the object.

        object_speed : tuple, default=(1., 2.)
            Object speed (rows, columns) in pixels per frame.

        flicker : float, default=0.
            Fraction of flickering background pixels.

        flicker_amplitude : float, default=30.
            Intensity offset of flickering pixels.

        training_count : int, default=20
            Number of leading frames without object.

        seed : int, default=42
            Random seed.

        textureless : bool, default=False
            If ``True``, the background is flat at its mean intensity and the object has a constant intensity,
            background mean plus ``object_offset``.

        static : bool, default=False
            If ``True``, the background is a constant mid-gray image.

        degraded_fraction : float, default=0.1
            Fraction of pixels of the degraded saliency maps replaced by uniform random values.
        """
        unknown = set(kwargs) - set(self._defaults)
        if unknown:
            raise ValueError('Unknown synthetic scene options {}.'.format(sorted(unknown)))
        for name,value in self._defaults.items():
            setattr(self,name,kwargs.get(name,value))
        self.grid = ImageGrid(self.width,self.height)
        if not 0 <= self.object_size <= min(self.width,self.height):
            raise ValueError('object_size = {} does not fit in a {} frame.'.format(self.object_size,self.grid))
        if not 0. <= self.flicker <= 1.:
            raise ValueError('flicker must be in [0, 1], found {}.'.format(self.flicker))
        if self.nframes < 1 or self.training_count < 0:
            raise ValueError('nframes must be >= 1 and training_count >= 0.')
        self.object_speed = tuple(float(speed) for speed in self.object_speed)

    @property
    def options(self):
        """Scene options, as a dictionary."""
        return {name:getattr(self,name) for name in self._defaults}

    def background(self, rng):
        """Return background image, drawn from ``rng`` unless static."""
        height,width = self.grid.shape
        if self.static:
            return np.full(self.grid.shape,128.)
        row,col = np.indices(self.grid.shape,dtype='f8')
        background = 50. + 50. * col / max(width - 1,1) + 30. * np.sin(np.pi * row / max(height - 1,1))
        texture = ndimage.uniform_filter(rng.normal(scale=30.,size=self.grid.shape),size=5,mode='reflect')
        background += np.clip(texture,-20.,20.)
        if self.textureless:
            background[...] = np.mean(background)
        return background

    def object_mask(self, index):
        """Return boolean object mask of frame ``index``."""
        mask = np.zeros(self.grid.shape,dtype='?')
        if self.object_size == 0 or index < self.training_count:
            return mask
        height,width = self.grid.shape
        step = index - self.training_count
        start = ((height - self.object_size) // 4, 0)
        row,col = (int(round(bounce(start[axis] + self.object_speed[axis] * step,limit))) for axis,limit in
                   enumerate([height - self.object_size,width - self.object_size]))
        mask[row:row + self.object_size,col:col + self.object_size] = True
        return mask

    def __iter__(self):
        """
        Yield, for each frame: frame (``uint8``), ground truth mask (``uint8``, 0 or 1),
        oracle saliency and degraded saliency (``float64`` in [0, 1]).
        """
        rng = np.random.default_rng(seed=self.seed)
        background = self.background(rng)
        flickering = rng.random(self.grid.shape) < self.flicker
        nflickering = int(np.sum(flickering))
        for index in range(self.nframes):
            truth = self.object_mask(index)
            image = background.copy()
            if nflickering:
                offset = np.zeros(self.grid.shape,dtype='f8')
                offset[flickering] = self.flicker_amplitude * rng.choice([-1.,1.],size=nflickering)
                offset[truth] = 0.
                image += offset
            if self.textureless:
                image[truth] = np.mean(background) + self.object_offset
            else:
                image[truth] += self.object_offset
            image += rng.normal(scale=self.noise_sigma,size=self.grid.shape) if self.noise_sigma > 0 else 0.
            saliency = truth.astype('f8')
            degraded = ndimage.uniform_filter(saliency,size=5,mode='constant')
            randomized = rng.random(self.grid.shape) < self.degraded_fraction
            degraded[randomized] = rng.random(int(np.sum(randomized)))
            yield to_uint8(image), truth.astype('u1'), saliency, np.clip(degraded,0.,1.)

    def write(self, output_dir):
        """
        Write the scene to ``output_dir``, in subdirectories frames/, truth/, saliency/ and saliency_degraded/,
        with file names ``000000.pgm``, ``000001.pgm``, etc.; options are saved in scene.json.

        Returns
        -------
        dirs : dict
            Dictionary of subdirectory name: path.
        """
        dirs = {name:os.path.join(output_dir,name) for name in ['frames','truth','saliency','saliency_degraded']}
        for dirname in dirs.values():
            mkdir(dirname)
        for index,(image,truth,saliency,degraded) in enumerate(self):
            basename = '{:06d}.pgm'.format(index)
            write_pgm(image,os.path.join(dirs['frames'],basename))
            write_pgm(255 * truth,os.path.join(dirs['truth'],basename))
            write_pgm(to_uint8(255. * saliency),os.path.join(dirs['saliency'],basename))
            write_pgm(to_uint8(255. * degraded),os.path.join(dirs['saliency_degraded'],basename))
        with open(os.path.join(output_dir,'scene.json'),'w') as file:
            file.write(dump_json(self.options,indent=2,sort_keys=True))
        self.log_info('Wrote {:d} synthetic frames of size {} to {}.'.format(self.nframes,self.grid,output_dir),rank=0)
        return dirs
