"""
Runtime configuration management for the Fast Conformer toolkit.
"""
import copy
import json
from pathlib import Path
from typing import Dict, Any, Optional

from loguru import logger


class ConfigManager:
    """Manages runtime defaults for profiling, memory, long-form and logging."""

    def __init__(self, config_path: Optional[str] = None):
        """Initialize configuration manager."""
        if config_path:
            self.config_path = Path(config_path)
        else:
            # Default to config/toolkit_config.json relative to project root
            self.config_path = Path(__file__).parent.parent.parent / "config" / "toolkit_config.json"

        self._config_data = None
        self._load_config()

    def _load_config(self):
        """Load configuration from JSON file, layered over the defaults."""
        data = self._get_default_config()
        try:
            if self.config_path.exists():
                with open(self.config_path, 'r') as f:
                    loaded = json.load(f)
                for section, values in loaded.items():
                    if isinstance(values, dict) and isinstance(data.get(section), dict):
                        data[section].update(values)
                    else:
                        data[section] = values
        except Exception as e:
            logger.warning(f"Could not load config from {self.config_path}: {e}")
            data = self._get_default_config()
        self._config_data = data

    def _get_default_config(self) -> Dict[str, Any]:
        """Get default configuration."""
        return {
            "profiling": {
                "default_duration_s": 30.0,
                "bytes_per_element": 4
            },
            "memory": {
                "calibration_preset": "A0",
                "calibration_minutes": 10.0
            },
            "longform": {
                "buffer_s": 20.0,
                "context_s": 2.0,
                "vocab_size": 128,
                "gap_frames": 0,
                "max_workers": 1
            },
            "equivalence": {
                "frames": 300,
                "window": 128,
                "tolerance": 1e-5
            },
            "logging": {
                "level": "INFO",
                "file": None
            }
        }

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value using dot notation."""
        if not self._config_data:
            return default

        keys = key.split('.')
        value = self._config_data

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def _section(self, name: str) -> Dict[str, Any]:
        return copy.deepcopy(self._config_data.get(name, {}))

    def get_profiling_config(self) -> Dict[str, Any]:
        """Get profiling defaults."""
        return self._section('profiling')

    def get_memory_config(self) -> Dict[str, Any]:
        """Get memory-model calibration defaults."""
        return self._section('memory')

    def get_longform_config(self) -> Dict[str, Any]:
        """Get buffered-inference defaults."""
        return self._section('longform')

    def get_equivalence_config(self) -> Dict[str, Any]:
        """Get attention equivalence-check defaults."""
        return self._section('equivalence')

    def get_logging_config(self) -> Dict[str, Any]:
        """Get logging configuration."""
        return self._section('logging')


# Global configuration instance
config = ConfigManager()
