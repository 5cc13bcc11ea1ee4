"""Nonlocal reaction-diffusion-taxis toolkit for acid-mediated cell invasion.

Subpackage map: `core` holds grids, fields, and coefficient functions;
`kernels` the interaction kernels and convolution engines; `solver` the
discretization and time integration; `stability` the dispersion analysis;
`analysis` long-time diagnostics; `kinetic` the velocity-jump validator;
`config`/`output`/`suite`/`cli` the run orchestration and file formats.
"""

__version__ = "0.1.0"
