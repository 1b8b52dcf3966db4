from bitarray import bitarray

import numpy as np

from helpers import StructuralError

'''
class CoordMask - which coordinates of a sample take part in a gradient

There are several possibility of initializing masks:
1. CoordMask(length), all coordinates selected
2. CoordMask(mask), where 'mask' is another CoordMask
3. CoordMask([True, False, ...]), one flag per coordinate
'''
class CoordMask(bitarray):
    """Class CoordMask(bitarray) selecting sample coordinates for sample gradients
    """

    def __new__(cls, *args, **kwargs):

        if len(args) != 1:
            raise StructuralError("CoordMask constructor must have one argument")

        arg = args[0]
        if isinstance(arg, bool) or not isinstance(arg, (CoordMask, list, tuple, int)):
            raise StructuralError("CoordMask constructor arg is not a CoordMask, list, tuple or int")

        if isinstance(arg, int):
            if arg < 1:
                raise StructuralError("CoordMask length must be positive")
            length = arg
        else:
            length = len(arg)

        obj = super().__new__(cls, length, endian='little')
        obj.setall(True)
        return obj

    def __init__(self, *args, **kwargs):

        if isinstance(args[0], (CoordMask, list, tuple)):
            # one flag per coordinate
            for i, bit in enumerate(args[0]):
                self[i] = bool(bit)

    @classmethod
    def from_indices(cls, length, indices):
        mask = cls(length)
        mask.setall(False)
        for i in indices:
            if not 0 <= i < length:
                raise StructuralError("coordinate index %d outside 0..%d" % (i, length - 1))
            mask[i] = True
        return mask

    def selected(self):
        return [i for i, bit in enumerate(self) if bit]

    def frozen(self):
        return [i for i, bit in enumerate(self) if not bit]

    def as_array(self):
        return np.fromiter((1.0 if bit else 0.0 for bit in self), dtype=np.float64, count=len(self))

    def __str__(self):
        return ''.join('1' if bit else '0' for bit in self)

    def set(self):
        self.setall(True)

    def clear(self):
        self.setall(False)
