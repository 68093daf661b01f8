"""Long-running check scripts."""
