"""Tests for minicar."""
