"""Tests for pystein."""
