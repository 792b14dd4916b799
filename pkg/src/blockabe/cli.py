"""``blockabe`` command line: key ceremonies, file encryption, inspection, benchmarks.

Exit codes: 0 ok, 2 usage, 3 parse, 4 attribute pre-check refused,
5 integrity refused (including parameter digest mismatches), 6 a block
could not be decrypted, 7 I/O.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import tlv
from .abe import (
    AttributeKey,
    DecryptionRefused,
    DecryptionSession,
    KeyMismatch,
    MasterKey,
    PublicParams,
    WireError,
    att_check,
    ctb_integrity,
    encrypt,
    keygen,
    setup,
)
from .container import pack_container, unpack_container
from .pairing import DecodeError
from .pipeline import MIB, ChannelModel, SweepConfig, benchmark_sweep, write_csv
from .policy import ATTRIBUTE_RE, PolicyError, PolicySyntaxError, TreeDecodeError, enumerate_blocks, parse_policy

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_ATT_CHECK = 4
EXIT_INTEGRITY = 5
EXIT_DECRYPT = 6
EXIT_IO = 7

MALFORMED = (tlv.FormatError, WireError, DecodeError, TreeDecodeError, ValueError)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def refusal_code(stage: str) -> int:
    if stage == "att_check":
        return EXIT_ATT_CHECK
    if stage == "integrity":
        return EXIT_INTEGRITY
    return EXIT_DECRYPT


# -- file helpers -----------------------------------------------------------------------


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None


def _stage(path: str, data: bytes) -> str:
    """Write ``data`` to a temporary file next to ``path``; returns its name."""
    target = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".", prefix=f".{target.name}.")
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        return tmp
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from None


def write_files(outputs: Sequence[tuple[str, bytes]]) -> None:
    """Write every output or none: all are staged before any is moved into place."""
    staged: list[str] = []
    placed: list[str] = []
    try:
        for path, data in outputs:
            staged.append(_stage(path, data))
        for tmp, (path, _) in zip(staged, outputs):
            os.replace(tmp, path)
            placed.append(path)
    except (OSError, CliError) as exc:
        for name in staged + placed:
            try:
                os.unlink(name)
            except OSError:
                pass
        if isinstance(exc, CliError):
            raise
        raise CliError(EXIT_IO, f"cannot write output: {exc.strerror or exc}") from None


def _load(kind, path: str):
    try:
        return kind.from_bytes(_read(path))
    except MALFORMED as exc:
        raise CliError(EXIT_PARSE, f"{path} is not a valid {kind.__name__} file: {exc}") from None


def _rng(seed: int | None):
    return random.Random(seed) if seed is not None else None


def parse_attrs(text: str) -> list[str]:
    attrs = [a.strip() for a in text.split(",") if a.strip()]
    if not attrs:
        raise CliError(EXIT_USAGE, "at least one attribute is required")
    for a in attrs:
        if not ATTRIBUTE_RE.fullmatch(a):
            raise CliError(EXIT_USAGE, f"invalid attribute name {a!r}")
    return attrs


def parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(EXIT_USAGE, f"{flag} expects comma-separated integers") from None
    if not values or any(v < 1 for v in values):
        raise CliError(EXIT_USAGE, f"{flag} expects positive integers")
    return values


# -- commands ---------------------------------------------------------------------------


def cmd_setup(args) -> int:
    pk, mk = setup(rng=_rng(args.seed))
    write_files([(args.pk, pk.to_bytes()), (args.mk, mk.to_bytes())])
    print(f"parameters {pk.digest().hex()}")
    return EXIT_OK


def cmd_keygen(args) -> int:
    attrs = parse_attrs(args.attrs)
    pk = _load(PublicParams, args.pk)
    mk = _load(MasterKey, args.mk)
    try:
        sk = keygen(pk, mk, attrs, _rng(args.seed))
    except KeyMismatch as exc:
        raise CliError(EXIT_INTEGRITY, f"parameter digest mismatch: {exc}") from None
    write_files([(args.out, sk.to_bytes())])
    print(f"key for {', '.join(sorted(sk.attrs))}")
    return EXIT_OK


def cmd_encrypt(args) -> int:
    try:
        tree = parse_policy(args.policy)
        enumerate_blocks(tree)
    except PolicySyntaxError as exc:
        caret = " " * exc.position + "^"
        raise CliError(EXIT_PARSE, f"policy error: {exc}\n  {args.policy}\n  {caret}") from None
    except PolicyError as exc:
        raise CliError(EXIT_PARSE, f"policy error: {exc}") from None
    pk = _load(PublicParams, args.pk)
    mk = _load(MasterKey, args.mk)
    message = _read(args.input)
    try:
        manifest, stream = encrypt(pk, mk, message, tree, _rng(args.seed))
    except KeyMismatch as exc:
        raise CliError(EXIT_INTEGRITY, f"parameter digest mismatch: {exc}") from None
    blocks = list(stream)
    write_files([(args.out, pack_container(manifest, blocks))])
    print(f"blocks n={manifest.n} root threshold k={manifest.table.k} of t={manifest.table.t}")
    print("block sizes " + " ".join(str(len(b.to_bytes())) for b in blocks))
    return EXIT_OK


def cmd_decrypt(args) -> int:
    pk = _load(PublicParams, args.pk)
    sk = _load(AttributeKey, args.sk)
    try:
        manifest, blocks = unpack_container(_read(args.input))
    except MALFORMED as exc:
        raise CliError(EXIT_PARSE, f"{args.input} is not a valid container: {exc}") from None
    try:
        session = DecryptionSession(pk, manifest, sk)
        for block in blocks:
            session.feed(block)
        plaintext = session.finish()
    except DecryptionRefused as exc:
        raise CliError(refusal_code(exc.stage), f"refused at {exc.stage}: {exc.reason}") from None
    write_files([(args.out, plaintext)])
    paths = ", ".join(f"{i}:{p}" for i, p in sorted(session.paths.items()))
    print(f"decrypted {len(plaintext)} bytes (block paths {paths})")
    return EXIT_OK


def cmd_inspect(args) -> int:
    try:
        manifest, blocks = unpack_container(_read(args.input))
    except MALFORMED as exc:
        raise CliError(EXIT_PARSE, f"{args.input} is not a valid container: {exc}") from None
    present = sorted(b.index for b in blocks)
    print(f"blocks {manifest.n}, present {present}")
    print(f"serialized tree length {manifest.tree_length} bytes")
    print(f"point table k={manifest.table.k} t={manifest.table.t} entries={len(manifest.table.entries)}")
    print("declared sizes " + " ".join(map(str, manifest.block_sizes)))
    print(f"parameters {manifest.pk_digest.hex()}")
    mismatched = [b.index for b in blocks if b.index > manifest.n or b.id != manifest.ids[b.index - 1]]
    if mismatched:
        raise CliError(EXIT_INTEGRITY, f"blocks {mismatched} do not match the manifest ids")
    if args.sk:
        sk = _load(AttributeKey, args.sk)
        try:
            last = att_check(manifest.table, sk.attrs, manifest.tree_length)
            tree = ctb_integrity(manifest.ids, last)
        except DecryptionRefused as exc:
            raise CliError(refusal_code(exc.stage), f"refused at {exc.stage}: {exc.reason}") from None
        print(f"policy {tree.to_policy()}")
    return EXIT_OK


def _parse_bandwidth(text: str) -> float:
    units = {"kib": 1 << 10, "mib": MIB, "gib": 1 << 30, "kb": 1e3, "mb": 1e6, "gb": 1e9, "b": 1}
    lowered = text.strip().lower().removesuffix("/s")
    for suffix, scale in units.items():
        if lowered.endswith(suffix):
            lowered, factor = lowered[: -len(suffix)], scale
            break
    else:
        factor = 1
    try:
        value = float(lowered) * factor
    except ValueError:
        raise CliError(EXIT_USAGE, f"cannot read bandwidth {text!r}") from None
    if value <= 0:
        raise CliError(EXIT_USAGE, "bandwidth must be positive")
    return value


SWEEP_DEFAULTS = {"size": "1,2,4,8,16", "leaves": "10,20,40,80,160", "blocks": "1,2,5,10,20"}


def cmd_bench(args) -> int:
    lists = {
        "size": args.sizes,
        "leaves": args.leaves,
        "blocks": args.blocks,
    }
    flags = {"size": "--sizes", "leaves": "--leaves", "blocks": "--blocks"}
    values = parse_int_list(lists[args.sweep] or SWEEP_DEFAULTS[args.sweep], flags[args.sweep])
    fixed = {}
    for dim, default in (("size", 1), ("leaves", 100), ("blocks", 10)):
        if dim == args.sweep:
            continue
        given = parse_int_list(lists[dim], flags[dim]) if lists[dim] else [default]
        if len(given) != 1:
            raise CliError(EXIT_USAGE, f"{flags[dim]} takes a single value unless it is the swept dimension")
        fixed[dim] = given[0]
    if args.channel_latency < 0:
        raise CliError(EXIT_USAGE, "latency must be non-negative")
    try:
        config = SweepConfig(
            dimension=args.sweep,
            values=tuple(values),
            message_size=fixed.get("size", 1) * MIB,
            leaves=fixed.get("leaves", 100),
            blocks=fixed.get("blocks", 10),
            channel=ChannelModel(_parse_bandwidth(args.channel_bandwidth), args.channel_latency),
            clock=args.clock,
            phase=args.phase,
            seed=args.seed if args.seed is not None else 0,
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    rows = benchmark_sweep(config)
    if args.out:
        import io

        buf = io.StringIO()
        write_csv(rows, buf)
        write_files([(args.out, buf.getvalue().encode())])
    else:
        write_csv(rows, sys.stdout)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2, matching EXIT_USAGE
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blockabe", description="Block-partitioned ciphertext-policy ABE.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("setup", help="create public parameters and the master key")
    p.add_argument("--pk", required=True, help="output path for the public parameters")
    p.add_argument("--mk", required=True, help="output path for the master key")
    p.add_argument("--seed", type=int, help="deterministic randomness (testing only)")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("keygen", help="issue an attribute key")
    p.add_argument("--pk", required=True)
    p.add_argument("--mk", required=True)
    p.add_argument("--attrs", required=True, help="comma-separated attributes, e.g. A,B")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="deterministic randomness (testing only)")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser(
        "encrypt",
        help="encrypt a file under a policy (needs the master key)",
        description=(
            "Encrypt a file under an access policy. The encryptor uses a master-key "
            "exponent while sealing blocks, so whoever runs this command must be "
            "trusted with the master key."
        ),
    )
    p.add_argument("--pk", required=True)
    p.add_argument("--mk", required=True)
    p.add_argument("--policy", required=True, help='e.g. "(A and B) or (C and D)" or "2 of (A, B, C)"')
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="deterministic randomness (testing only)")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="decrypt a container with an attribute key")
    p.add_argument("--pk", required=True)
    p.add_argument("--sk", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("inspect", help="show a container's layout; with --sk also run the pre-checks")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--sk")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("bench", help="sweep message size, leaf count or block count and emit CSV")
    p.add_argument("--sweep", choices=("size", "leaves", "blocks"), required=True)
    p.add_argument("--sizes", help="message sizes in MiB (comma list when swept)")
    p.add_argument("--leaves", help="leaf counts (comma list when swept)")
    p.add_argument("--blocks", help="block counts (comma list when swept)")
    p.add_argument("--phase", choices=("encrypt", "decrypt"), default="encrypt")
    p.add_argument("--seed", type=int)
    p.add_argument("--channel-bandwidth", default="10MiB", help="bytes per second; suffixes KiB, MiB, GiB, KB, MB, GB")
    p.add_argument("--channel-latency", type=float, default=0.020, help="seconds")
    p.add_argument("--clock", choices=("sim", "real"), default="sim")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"blockabe: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
