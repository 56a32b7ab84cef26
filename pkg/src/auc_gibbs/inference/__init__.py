"""Gibbs posterior, learning-rate calibration and rank-likelihood sampling for the AUC."""
