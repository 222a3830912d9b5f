"""Multi-stage multi-scenario multi-objective robust linear optimisation."""
