"""
Command-line surface package initialization.
"""
from .run_config import RunConfig, REPORT_FORMATS
from .commands import (
    cmd_profile, cmd_compare, cmd_encode, cmd_check_equivalence, cmd_feasibility,
    cmd_memory, cmd_longform,
)

__all__ = [
    'RunConfig', 'REPORT_FORMATS',
    'cmd_profile', 'cmd_compare', 'cmd_encode', 'cmd_check_equivalence', 'cmd_feasibility',
    'cmd_memory', 'cmd_longform',
]
