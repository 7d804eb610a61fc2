"""Grassmann-Berezin calculus, Pachner moves and a torsion-type invariant of
4-dimensional triangulated manifolds with a middle cohomology class."""

__version__ = "0.1.0"
