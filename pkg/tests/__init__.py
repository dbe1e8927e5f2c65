"""Test suite for dcac-pipeline."""
