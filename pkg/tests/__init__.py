"""Test package for expo-distance."""
