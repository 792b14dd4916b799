"""Block-partitioned ciphertext-policy ABE."""

from .ciphertext import CiphertextBlock, LeafCiphertext, Manifest, WireError, block_wire_size
from .decrypt import (
    ABE,
    SYM,
    DecryptionRefused,
    DecryptionSession,
    OpenEvent,
    att_check,
    ctb_abe_dec,
    ctb_integrity,
    ctb_sym_dec,
    decrypt,
    decrypt_interior,
    decrypt_leaf,
)
from .encrypt import EncryptionPlan, encrypt, encrypt_block, manifest_for, plan_encryption, seal_blocks
from .keys import AttributeKey, KeyMismatch, MasterKey, PublicParams, check_master_key, keygen, setup

__all__ = [
    "ABE",
    "SYM",
    "AttributeKey",
    "CiphertextBlock",
    "DecryptionRefused",
    "DecryptionSession",
    "EncryptionPlan",
    "KeyMismatch",
    "LeafCiphertext",
    "Manifest",
    "MasterKey",
    "OpenEvent",
    "PublicParams",
    "WireError",
    "att_check",
    "block_wire_size",
    "check_master_key",
    "ctb_abe_dec",
    "ctb_integrity",
    "ctb_sym_dec",
    "decrypt",
    "decrypt_interior",
    "decrypt_leaf",
    "encrypt",
    "encrypt_block",
    "keygen",
    "manifest_for",
    "plan_encryption",
    "seal_blocks",
    "setup",
]
