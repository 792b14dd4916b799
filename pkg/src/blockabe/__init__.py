"""Block-partitioned ciphertext-policy attribute-based encryption.

Every gate of an access tree becomes one ciphertext block, so blocks can be
encrypted, sent and decrypted in a pipeline. See ``blockabe.abe`` for the
scheme, ``blockabe.pipeline`` for the timing model and sweeps.
"""

from .abe import (
    AttributeKey,
    CiphertextBlock,
    DecryptionRefused,
    DecryptionSession,
    Manifest,
    MasterKey,
    PublicParams,
    decrypt,
    encrypt,
    keygen,
    setup,
)
from .baseline import decrypt_monolithic, encrypt_monolithic
from .container import pack_container, unpack_container
from .policy import AccessTree, parse_policy, satisfies

__version__ = "0.1.0"

__all__ = [
    "AccessTree",
    "AttributeKey",
    "CiphertextBlock",
    "DecryptionRefused",
    "DecryptionSession",
    "Manifest",
    "MasterKey",
    "PublicParams",
    "decrypt",
    "decrypt_monolithic",
    "encrypt",
    "encrypt_monolithic",
    "keygen",
    "pack_container",
    "parse_policy",
    "satisfies",
    "setup",
    "unpack_container",
]
