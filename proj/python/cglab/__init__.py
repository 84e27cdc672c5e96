"""Genus-3 branched covers over the sphere: spectra of the stability
operator, the hemisphere feasibility LP, and the reduced-system solver."""

try:
    from ._cglab import *  # installed wheel layout
except ImportError:  # development build: module sits on PYTHONPATH
    from _cglab import *  # noqa: F401,F403

__all__ = [
    "stereo_to_sphere",
    "sphere_to_stereo",
    "hemisphere_margin",
    "hemispherizing_mobius",
    "build_mesh",
    "spectrum",
    "solve",
    "verify_identities",
    "periods",
    "run_config_file",
    "ValidationError",
    "NoAdmissibleUError",
    "NumericalError",
]
