"""Configuration management for object-saliency."""

from .manager import ConfigManager
from .settings import SettingsManager

__all__ = ['ConfigManager', 'SettingsManager']
