"""Black-box fast multipole approximation of the boundary operators."""
