"""
Image grid convention and image file I/O: frames, saliency maps, ground truth masks and output masks.

Images are flattened in row-major order: pixel (row, col) has index ``row*width + col``.
All other modules rely on this convention, through :class:`ImageGrid`.
"""

import os
import glob

import numpy as np
from PIL import Image

from .utils import BaseClass


class ImageError(Exception):

    """Exception raised when issue with image files or grids."""


frame_patterns = ['*.pgm','*.png']
saliency_patterns = ['*.pgm','*.png','*.npy']
luma_weights = (0.299,0.587,0.114)


class ImageGrid(BaseClass):
    """
    Pixel grid of an image, with the row-major flattening convention.

    Attributes
    ----------
    width : int
        Number of columns.

    height : int
        Number of rows.
    """
    def __init__(self, width, height):
        self.width = int(width)
        self.height = int(height)
        if self.width < 1 or self.height < 1:
            raise ImageError('Grid dimensions must be positive, found {:d}x{:d}.'.format(self.width,self.height))

    @property
    def N(self):
        """Number of pixels."""
        return self.width * self.height

    @property
    def shape(self):
        """Array shape ``(height, width)``."""
        return (self.height,self.width)

    def flatten(self, row, col):
        """Return flat index of pixel (``row``, ``col``); works on arrays."""
        return np.asarray(row) * self.width + np.asarray(col)

    def unflatten(self, index):
        """Return (row, col) of flat ``index``; works on arrays."""
        return np.divmod(index,self.width)

    def to_image(self, values):
        """Reshape flat ``values`` into an image of shape :attr:`shape`."""
        values = np.asarray(values)
        self.check(values)
        return values.reshape(self.shape)

    def from_image(self, image):
        """Flatten ``image`` of shape :attr:`shape`."""
        image = np.asarray(image)
        if image.shape != self.shape:
            raise ImageError('Image of shape {} does not match grid {}.'.format(image.shape,self))
        return image.ravel()

    def check(self, values, size=1, name='vector'):
        """Raise :class:`ImageError` if ``values`` does not have length ``size`` times :attr:`N`."""
        if np.ndim(values) != 1 or len(values) != size*self.N:
            raise ImageError('{} of shape {} does not match grid {} (expected length {:d}).'.format(name,np.shape(values),self,size*self.N))

    def __eq__(self, other):
        return isinstance(other,ImageGrid) and (self.width,self.height) == (other.width,other.height)

    def __hash__(self):
        return hash((self.width,self.height))

    def __repr__(self):
        return '{:d}x{:d}'.format(self.width,self.height)


def list_files(directory, pattern=None, default=frame_patterns):
    """
    Return files in ``directory`` matching ``pattern`` (glob, or list of globs), in lexicographic order.
    If ``pattern`` is ``None``, defaults to ``default``.
    """
    if not os.path.isdir(directory):
        raise ImageError('Directory {} does not exist.'.format(directory))
    patterns = pattern if pattern is not None else default
    if isinstance(patterns,str):
        patterns = [patterns]
    filenames = set()
    for pattern in patterns:
        filenames |= set(glob.glob(os.path.join(directory,pattern)))
    return sorted(filename for filename in filenames if os.path.isfile(filename))


def file_stem(filename):
    """Return file name without directory and extension."""
    return os.path.splitext(os.path.basename(filename))[0]


def match_files(filenames, directory, pattern=None, default=saliency_patterns):
    """
    Return dictionary mapping each of ``filenames`` to the file of ``directory`` with the same stem
    (or ``None`` if there is none).
    """
    others = {}
    for other in list_files(directory,pattern=pattern,default=default):
        others.setdefault(file_stem(other),other)
    return {filename:others.get(file_stem(filename),None) for filename in filenames}


def read_grid(filename):
    """Return :class:`ImageGrid` of image ``filename``, reading the header only."""
    if filename.endswith('.npy'):
        return ImageGrid(*_read_npy(filename).shape[::-1])
    try:
        with Image.open(filename) as image:
            return ImageGrid(*image.size)
    except (OSError,ValueError) as exc:
        raise ImageError('Could not read image {}.'.format(filename)) from exc


def _read_npy(filename):
    try:
        array = np.load(filename,allow_pickle=False)
    except (OSError,ValueError) as exc:
        raise ImageError('Could not read array {}.'.format(filename)) from exc
    if array.ndim != 2:
        raise ImageError('Array {} must be 2D, found shape {}.'.format(filename,array.shape))
    return array


def to_luma(rgb):
    """Convert ``(..., 3)`` RGB array to integer-rounded luma."""
    rgb = np.asarray(rgb,dtype='f8')
    return np.rint(rgb[...,0]*luma_weights[0] + rgb[...,1]*luma_weights[1] + rgb[...,2]*luma_weights[2])


def read_image(filename):
    """
    Read image ``filename``.

    Returns
    -------
    image : array
        2D array of shape (height, width). 8-bit grayscale and color images (converted to luma)
        are returned as ``uint8``; float images (``.npy``, or Pillow mode 'F') as ``float64``.
    """
    if filename.endswith('.npy'):
        array = _read_npy(filename)
        if np.issubdtype(array.dtype,np.integer):
            return array.astype('u1') if array.dtype == np.uint8 else array.astype('f8')/255.
        return array.astype('f8')
    try:
        with Image.open(filename) as image:
            mode = image.mode
            if mode in ('1','L'):
                return np.array(image.convert('L'),dtype='u1')
            if mode in ('P','RGB','RGBA','LA'):
                return to_luma(np.array(image.convert('RGB'))).astype('u1')
            if mode == 'F':
                return np.array(image,dtype='f8')
    except (OSError,ValueError) as exc:
        raise ImageError('Could not read image {}.'.format(filename)) from exc
    raise ImageError('Unsupported image mode {} in {}; 8-bit grayscale or color expected.'.format(mode,filename))


def _check_grid(image, grid, filename):
    if grid is not None and image.shape != grid.shape:
        raise ImageError('Image {} has size {:d}x{:d}, expected {}.'.format(filename,image.shape[1],image.shape[0],grid))


def load_frame(filename, grid=None):
    """
    Load 8-bit frame ``filename`` as a flat ``float64`` vector of intensities on the [0, 255] scale.
    If ``grid`` is provided, raise :class:`ImageError` if dimensions do not match.
    """
    image = read_image(filename)
    if image.dtype != np.uint8:
        raise ImageError('Frame {} must be 8-bit.'.format(filename))
    _check_grid(image,grid,filename)
    return image.ravel().astype('f8')


def load_saliency(filename, grid=None):
    """
    Load saliency map ``filename`` as a flat ``float64`` vector in [0, 1]:
    8-bit values are divided by 255, float values are clipped.
    """
    if not os.path.isfile(filename):
        raise ImageError('Saliency map {} does not exist.'.format(filename))
    image = read_image(filename)
    _check_grid(image,grid,filename)
    if image.dtype == np.uint8:
        return image.ravel() / 255.
    image = image.ravel()
    if not np.all(np.isfinite(image)):
        raise ImageError('Saliency map {} has non-finite values.'.format(filename))
    return np.clip(image,0.,1.)


def load_mask(filename, grid=None):
    """Load mask ``filename`` as a flat ``uint8`` vector of 0 and 1; any nonzero pixel is foreground."""
    image = read_image(filename)
    _check_grid(image,grid,filename)
    return (image.ravel() != 0).astype('u1')


def write_mask(mask, filename, grid):
    """Write binary ``mask`` to ``filename`` as an 8-bit PGM (P5), with foreground = 255 and background = 0."""
    mask = np.asarray(mask)
    grid.check(mask,name='Mask')
    if not np.all((mask == 0) | (mask == 1)):
        raise ImageError('Mask values must be 0 or 1.')
    image = Image.fromarray(np.where(grid.to_image(mask) != 0,255,0).astype('u1'))
    try:
        image.save(filename,format='PPM')
    except OSError as exc:
        raise ImageError('Could not write mask {}.'.format(filename)) from exc


class FrameSequence(BaseClass):
    """
    Ordered sequence of frames sharing one :class:`ImageGrid`.
    Dimensions are validated from file headers at construction; frames are loaded on access.

    >>> frames = FrameSequence.from_directory('frames/')
    >>> o = frames[0]
    """
    def __init__(self, filenames, grid=None):
        """
        Initialize :class:`FrameSequence`.

        Parameters
        ----------
        filenames : list
            Frame file names, in processing order.

        grid : ImageGrid, default=None
            Expected grid. If ``None``, taken from the first file.
        """
        self.filenames = list(filenames)
        if not self.filenames:
            raise ImageError('No frames matched.')
        if grid is None:
            grid = read_grid(self.filenames[0])
        self.grid = grid
        for filename in self.filenames:
            other = read_grid(filename)
            if other != self.grid:
                raise ImageError('Frame {} has size {}, expected {}.'.format(filename,other,self.grid))
        self.log_info('Found {:d} frames of size {}.'.format(len(self),self.grid),rank=0)

    @classmethod
    def from_directory(cls, directory, pattern=None):
        """Frames of ``directory`` matching ``pattern`` (default: PGM and PNG files), in lexicographic order."""
        filenames = list_files(directory,pattern=pattern)
        if not filenames:
            raise ImageError('No frames matched in {}.'.format(directory))
        return cls(filenames)

    def __len__(self):
        return len(self.filenames)

    def __getitem__(self, index):
        if isinstance(index,slice):
            return [self[ii] for ii in range(*index.indices(len(self)))]
        return load_frame(self.filenames[index],grid=self.grid)

    def __iter__(self):
        for index in range(len(self)):
            yield self[index]

    @property
    def names(self):
        """File stems."""
        return [file_stem(filename) for filename in self.filenames]


def load_frame_sequence(directory, pattern=None):
    """Load all frames of ``directory`` matching ``pattern`` into a list of flat vectors, in lexicographic order."""
    return list(FrameSequence.from_directory(directory,pattern=pattern))
