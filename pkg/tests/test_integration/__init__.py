"""
Integration tests for the affordance-learning pipeline.

This package contains integration tests that run every stage on a tiny
configuration and check the run directory they leave behind.

Test Files:
    - test_pipeline_integration.py: Stage artifacts, determinism, resume and config snapshot checks
"""
