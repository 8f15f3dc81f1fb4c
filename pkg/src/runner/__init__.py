"""Experiment runner: config ingestion, dispatch, parallel execution and artifact writing."""
