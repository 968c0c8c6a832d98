"""Wave packet transforms, anisotropic norms and transfer operator spectra
for hyperbolic contact maps on R^(2d+1), at desk scale."""

__version__ = "0.1.0"
