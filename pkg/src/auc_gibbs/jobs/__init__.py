"""Study, analysis and reporting jobs."""
