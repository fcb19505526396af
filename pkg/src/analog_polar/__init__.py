"""Analog polarization: partial Hadamard compression with successive-cancellation decoding."""

from .codec import DecodeResult, encode, genie_pass, ls_fallback, sc_decode
from .construction import (ConstructionProfile, build_profile, load_profile, rid_tree,
                           save_profile, select_reserved)
from .hadamard import embed_rows_transpose, fwht, inverse, project_rows
from .mixdist import (DEFAULT_POLICY, MixedDistribution, PrunePolicy, QuadratureSpec, SourceModel,
                      bernoulli_gaussian, error_probability, map_estimate, mixed_entropy, rid)
from .polarops import f_combine, g_condition, joint_weights

__all__ = [
    "DEFAULT_POLICY", "ConstructionProfile", "DecodeResult", "MixedDistribution", "PrunePolicy",
    "QuadratureSpec", "SourceModel", "bernoulli_gaussian", "build_profile", "embed_rows_transpose",
    "encode", "error_probability", "f_combine", "fwht", "g_condition", "genie_pass", "inverse",
    "joint_weights", "load_profile", "ls_fallback", "map_estimate", "mixed_entropy",
    "project_rows", "rid", "rid_tree", "save_profile", "sc_decode", "select_reserved",
]
