"""Bayesian reconstruction of piecewise-constant absorption inclusions.

A library and command-line tool for recovering absorption anomalies in a
diffuse optical model on the unit disk.  The pieces: a structured
triangular disk mesher, a P1 finite-element forward solver for
-div(mu grad u) + gamma u = 0, projection of the absorbed energy density
onto the Dirichlet-Laplacian eigenbasis of the disk, truncated
Karhunen-Loeve Gaussian priors pushed forward through star-shaped and
smoothed level-set shape maps, and a preconditioned Crank-Nicolson
sampler with acceptance-rate step adaptation.
"""

__version__ = "0.1.0"
