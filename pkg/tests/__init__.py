"""Tests for casimir."""
