"""Translation-invariant splitting Gibbs measures of the Potts model on Cayley trees."""

__version__ = "0.1.0"
