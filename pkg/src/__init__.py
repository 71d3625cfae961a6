"""
Source package initialization.
"""
from . import utils
from . import tensor
from . import attention
from . import encoder
from . import profiler
from . import longform

__all__ = ['utils', 'tensor', 'attention', 'encoder', 'profiler', 'longform']
