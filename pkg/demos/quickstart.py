"""Issue keys, encrypt a file under a two-branch policy and watch who can read it.

Run: python demos/quickstart.py
"""

import os

from blockabe import DecryptionRefused, DecryptionSession, encrypt, keygen, parse_policy, setup
from blockabe.container import pack_container, unpack_container

POLICY = "(doctor and cardiology) or (nurse and ward:7)"

pk, mk = setup()
print(f"public parameters {pk.digest().hex()[:16]}...")

message = os.urandom(256 * 1024)
tree = parse_policy(POLICY)
manifest, stream = encrypt(pk, mk, message, tree)
blocks = list(stream)
print(f"policy {POLICY!r} -> {manifest.n} blocks of {', '.join(map(str, manifest.block_sizes))} bytes")

# Everything a receiver needs fits in one container file.
container = pack_container(manifest, blocks)
print(f"container is {len(container)} bytes for a {len(message)} byte message")
manifest, blocks = unpack_container(container)

people = {
    "cardiologist": ["doctor", "cardiology"],
    "ward nurse": ["nurse", "ward:7"],
    "doctor on ward 7": ["doctor", "ward:7"],  # one attribute from each branch
    "visitor": ["visitor"],
}
for who, attrs in people.items():
    key = keygen(pk, mk, attrs)
    try:
        session = DecryptionSession(pk, manifest, key)
        for block in blocks:
            session.feed(block)
        plain = session.finish()
    except DecryptionRefused as refusal:
        print(f"{who:>17}: refused at {refusal.stage} ({refusal.reason})")
        continue
    assert plain == message
    paths = ", ".join(f"block {i} via {p}" for i, p in sorted(session.paths.items()))
    print(f"{who:>17}: recovered the message ({paths})")
