"""Python bindings for the credetect core."""

from ._credetect import (
    DEFAULT_THETA,
    Error,
    KeyPair,
    Registry,
    calibrate,
    decrypt,
    encrypt,
    hamming_distance,
    hash_id,
    perturb_text,
    reference_similarity,
    run_scenario,
    simhash,
    synthetic_corpus,
    verify_chain,
)

__all__ = [
    "DEFAULT_THETA",
    "Error",
    "KeyPair",
    "Registry",
    "calibrate",
    "decrypt",
    "encrypt",
    "hamming_distance",
    "hash_id",
    "perturb_text",
    "reference_similarity",
    "run_scenario",
    "simhash",
    "synthetic_corpus",
    "verify_chain",
]
