"""Small-eigenvalue asymptotics of semiclassical Witten Laplacians on Morse
energy landscapes."""

__version__ = "0.1.0"
