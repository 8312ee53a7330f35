"""
Configuration Management for the Freshness Toolkit.

This module loads the JSON defaults (tolerances, grids, simulation budgets)
with path resolution through an explicit path, an environment variable, or
the project ``config`` directory, and exposes dot-path lookups.
"""

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

CONFIG_PATH_ENV = "FRESHNESS_CONFIG_PATH"


@dataclass
class SectionValidation:
    """Validation result for one configuration section."""
    is_valid: bool
    missing_fields: List[str]
    error_message: Optional[str] = None


class ToolkitConfigurationManager:
    """Loads and caches the toolkit defaults."""

    def __init__(self, config_file_path: Optional[str] = None):
        """
        Initialize the configuration manager.

        Args:
            config_file_path: Optional custom path to the configuration file
        """
        self.config_file_path = self._determine_config_location(config_file_path)
        self._configuration_cache: Optional[Dict[str, Any]] = None
        self.logger = logging.getLogger(self.__class__.__name__)

    def _determine_config_location(self, custom_path: Optional[str] = None) -> Path:
        """Determine the location of the configuration file with fallback options."""
        if custom_path:
            return Path(custom_path)

        env_config_path = os.getenv(CONFIG_PATH_ENV)
        if env_config_path:
            return Path(env_config_path)

        project_root = Path(__file__).parent.parent.parent
        return project_root / "config" / "defaults.json"

    def use_file(self, config_file_path: str) -> None:
        """Point the manager at another file and drop the cache."""
        self.config_file_path = Path(config_file_path)
        self._configuration_cache = None

    def load_configuration(self) -> Dict[str, Any]:
        """Load and cache the configuration from the determined path."""
        if self._configuration_cache is not None:
            return self._configuration_cache

        try:
            if not self.config_file_path.exists():
                raise FileNotFoundError(f"Configuration file not found at {self.config_file_path}")

            with open(self.config_file_path, "r", encoding="utf-8") as config_file:
                self._configuration_cache = json.load(config_file)

            self.logger.debug(f"Loaded toolkit configuration from {self.config_file_path}")
            return self._configuration_cache

        except json.JSONDecodeError as e:
            error_msg = f"Invalid JSON in configuration file: {str(e)}"
            self.logger.error(error_msg)
            raise ValueError(error_msg)
        except OSError as e:
            error_msg = f"Failed to load toolkit configuration: {str(e)}"
            self.logger.error(error_msg)
            raise RuntimeError(error_msg)

    def reload_configuration(self) -> Dict[str, Any]:
        """Force reload the configuration file, bypassing cache."""
        self._configuration_cache = None
        return self.load_configuration()

    def validate_section(self, section: str, required_keys: List[str]) -> SectionValidation:
        """
        Check that a configuration section defines the given keys.

        Args:
            section: Top-level section name, e.g. ``"simulation"``
            required_keys: Keys that must be present in the section

        Returns:
            SectionValidation with the missing keys, if any
        """
        configured = self.load_configuration().get(section)
        if not isinstance(configured, dict):
            message = f"Configuration section '{section}' is missing"
            self.logger.warning(message)
            return SectionValidation(is_valid=False, missing_fields=list(required_keys), error_message=message)

        missing_fields = [key for key in required_keys if key not in configured]
        if missing_fields:
            message = f"Configuration section '{section}' invalid - Missing fields: {missing_fields}"
            self.logger.warning(message)
            return SectionValidation(is_valid=False, missing_fields=missing_fields, error_message=message)

        return SectionValidation(is_valid=True, missing_fields=[])

    def get_configuration_value(self, key_path: str, default: Any = None) -> Any:
        """
        Get a configuration value using dot notation.

        Args:
            key_path: Dot-separated path to the configuration value
            default: Default value if key is not found

        Returns:
            Configuration value or default
        """
        try:
            value: Any = self.load_configuration()
        except (ValueError, RuntimeError) as e:
            self.logger.warning(f"Using default for '{key_path}': {e}")
            return default

        for key in key_path.split("."):
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default
        return value


# Global configuration manager instance
config_loader = ToolkitConfigurationManager()
