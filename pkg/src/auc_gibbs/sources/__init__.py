"""Score sources: simulation scenarios, score files and the CA-125 download."""
