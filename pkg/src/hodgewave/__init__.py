"""Discrete exterior calculus for the Hodge wave equation on simplicial manifolds."""
