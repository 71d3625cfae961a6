"""
Utility functions package initialization.
"""
from .config import ConfigManager, config
from .logger import LoggerConfig
from .errors import (
    ToolkitError, ShapeError, ConfigError, InputTooShortError,
    FormatError, BudgetError, PlanError, EquivalenceError,
)

__all__ = [
    'ConfigManager', 'config', 'LoggerConfig',
    'ToolkitError', 'ShapeError', 'ConfigError', 'InputTooShortError',
    'FormatError', 'BudgetError', 'PlanError', 'EquivalenceError',
]
