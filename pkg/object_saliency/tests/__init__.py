"""Tests for object-saliency."""
