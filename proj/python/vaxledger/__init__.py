"""Python bindings for the vaxledger core."""

from ._core import (
    AuthError,
    ConfigError,
    DecodeError,
    InvalidAadhaar,
    Node,
    NodeError,
    SchemaError,
    UnsupportedValue,
    decode_canonical,
    decode_qr_payload,
    encode_canonical,
    init_data_dir,
    is_valid_aadhaar,
    merkle_prove,
    merkle_root,
    merkle_verify,
    sha256,
    validate_chain_file,
    verhoeff_validate,
    verify_qr_payload,
)

__all__ = [
    "AuthError",
    "ConfigError",
    "DecodeError",
    "InvalidAadhaar",
    "Node",
    "NodeError",
    "SchemaError",
    "UnsupportedValue",
    "decode_canonical",
    "decode_qr_payload",
    "encode_canonical",
    "init_data_dir",
    "is_valid_aadhaar",
    "merkle_prove",
    "merkle_root",
    "merkle_verify",
    "sha256",
    "validate_chain_file",
    "verhoeff_validate",
    "verify_qr_payload",
]
