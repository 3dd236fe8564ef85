"""
Merkle Trim Tree command-line interface

Builds Traditional (duplicate-last) and Trim Merkle trees over mempool files,
issues and checks inclusion proofs, locates tampered transactions, assembles
and validates a file-based block chain, and runs the variant comparison and
benchmark harness.

Commands:
    - build    tree dump + root for a mempool file
    - prove    inclusion proof for one leaf of a tree dump
    - verify   check a proof file against a root
    - tamper   compare a mempool file with a tree dump
    - chain    assemble | validate a block store directory
    - compare  structural node/hash counts for a range of leaf counts
    - bench    timed benchmark report (csv or json)

Exit status: 0 success, 1 verification/validation failure, 2 usage or parse
error, 3 I/O error. Results go to stdout, diagnostics and logs to stderr.
"""

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from common.config import get_settings
from common.logging_config import configure_logging
from decorators.logging_decorator import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, log_command
from services.bench_service import (
    ENERGY_PROXY_NOTE,
    BenchConfig,
    compare_variants,
    emit_report,
    run_benchmark,
)
from services.chain_service import (
    ChainStore,
    assemble_blocks,
    ingest_transactions,
    leaf_digests,
    validate_chain,
)
from services.errors import EmptyLeaves, IoError, MerkleError, ModeMismatch, ParseError
from services.hashing_service import Digest, HashMode
from services.merkle_service import (
    TreeVariant,
    build_tree,
    level_widths,
    root,
    tree_from_dump,
    tree_to_dump,
)
from services.proof_service import (
    detect_tamper,
    generate_proof,
    proof_from_document,
    proof_to_document,
    verify_proof,
)

VARIANT_CHOICES = [v.value for v in TreeVariant]
MODE_CHOICES = [m.value for m in HashMode]


def read_json(path) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(path, e.strerror or str(e))
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON ({e.msg})", e.lineno)


def write_json(path, document: Dict[str, Any]) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoError(path, e.strerror or str(e))


def parse_sizes(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers, got {text!r}")


@log_command
def cmd_build(args) -> int:
    """Builds a tree over a mempool file and writes the tree dump."""
    variant = TreeVariant(args.variant)
    mode = HashMode(args.mode)
    transactions = ingest_transactions(args.input)
    if not transactions:
        raise EmptyLeaves(f"EmptyLeaves: {args.input} holds no transactions")

    tree = build_tree(leaf_digests(transactions, mode), variant, mode)
    if args.out:
        write_json(args.out, tree_to_dump(tree))

    stats = tree.stats
    print(root(tree).hex())
    print(
        f"nodes={stats.total_nodes} internal_hashes={stats.internal_hashes} "
        f"duplicated_pairings={stats.duplicated_pairings} levels={stats.levels}"
    )
    print("widths=" + ",".join(str(w) for w in level_widths(tree)))
    return EXIT_OK


@log_command
def cmd_prove(args) -> int:
    """Writes the inclusion proof for one leaf of a tree dump."""
    tree = tree_from_dump(read_json(args.tree), source=str(args.tree))
    proof = generate_proof(tree, args.index)
    if args.out:
        write_json(args.out, proof_to_document(proof, root(tree)))
    print(f"depth={proof.depth}")
    return EXIT_OK


@log_command
def cmd_verify(args) -> int:
    """Folds a proof file and compares it with the given root."""
    proof = proof_from_document(read_json(args.proof))
    expected_root = Digest.from_hex(args.root)
    if args.mode and HashMode(args.mode) is not proof.mode:
        raise ModeMismatch(
            f"ModeMismatch: proof was made in {proof.mode.value} mode, --mode is {args.mode}"
        )
    outcome = verify_proof(proof, expected_root)
    if outcome.valid:
        print("VALID")
        return EXIT_OK
    print("INVALID")
    return EXIT_FAILURE


@log_command
def cmd_tamper(args) -> int:
    """Reports which transactions of a mempool file disagree with a tree dump."""
    tree = tree_from_dump(read_json(args.tree), source=str(args.tree))
    transactions = ingest_transactions(args.input)
    suspects = detect_tamper(tree, leaf_digests(transactions, tree.mode))
    if not suspects:
        print("CLEAN")
        return EXIT_OK
    print("TAMPERED " + ",".join(str(i) for i in sorted(suspects)))
    return EXIT_FAILURE


@log_command
def cmd_chain(args) -> int:
    """Assembles blocks into a store directory, or validates one."""
    store = ChainStore(args.dir)
    if args.action == "assemble":
        if not args.input:
            raise ParseError("chain assemble needs --input")
        mempool = ingest_transactions(args.input)
        blocks = assemble_blocks(
            mempool,
            TreeVariant(args.variant),
            HashMode(args.mode),
            prev=store.tip(),
            clock=time.time,
        )
        paths = store.write_blocks(blocks)
        for path, block in zip(paths, blocks):
            print(f"{path.stem} txs={block.header.tx_count} root={block.header.merkle_root.hex()}")
        return EXIT_OK

    report = validate_chain(store)
    for check in report.checks:
        if check.passed:
            print(f"block_{check.index} PASS")
        else:
            print(f"block_{check.index} FAIL {check.failed_check}: {check.detail}")
    return EXIT_OK if report.valid else EXIT_FAILURE


@log_command
def cmd_compare(args) -> int:
    """Prints node and hash counts of both variants for n_from..n_to."""
    rows = compare_variants(args.n_from, args.n_to, HashMode(args.mode))
    print("n trim_nodes traditional_nodes node_delta trim_hashes traditional_hashes hash_delta traditional_dups")
    for row in rows:
        print(
            f"{row.n} {row.trim_nodes} {row.traditional_nodes} {row.node_delta} "
            f"{row.trim_internal_hashes} {row.traditional_internal_hashes} {row.hash_delta} "
            f"{row.traditional_duplicated_pairings}"
        )
    return EXIT_OK


@log_command
def cmd_bench(args) -> int:
    """Runs the benchmark and writes the report file."""
    config = BenchConfig(
        sizes=tuple(args.sizes),
        variants=tuple(TreeVariant(v) for v in args.variants),
        mode=HashMode(args.mode),
        repetitions=args.reps,
        payload_bytes=args.payload_bytes,
        seed=args.seed,
        parallel=args.parallel,
    )
    report = run_benchmark(config)
    emit_report(report, args.format, args.out)
    print("variant n internal_hashes total_hash_invocations stored_nodes stored_bytes mean_proof_depth")
    for sample in report.sorted_samples():
        print(
            f"{sample.variant.value} {sample.n} {sample.internal_hashes} "
            f"{sample.total_hash_invocations} {sample.stored_nodes} {sample.stored_bytes} "
            f"{sample.mean_proof_depth:.4f}"
        )
    print(f"note: {ENERGY_PROXY_NOTE}")
    return EXIT_OK


def build_parser(settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="merkle", description="Merkle Trim Tree toolkit")
    parser.add_argument("--log-level", default=None, help="override LOG_LEVEL for this run")
    commands = parser.add_subparsers(dest="command", required=True)

    def tree_flags(sub):
        sub.add_argument("--variant", choices=VARIANT_CHOICES, default=settings.variant.value)
        sub.add_argument("--mode", choices=MODE_CHOICES, default=settings.mode.value)

    build = commands.add_parser("build", help="build a tree over a mempool file")
    build.add_argument("--input", required=True)
    build.add_argument("--out")
    tree_flags(build)

    prove = commands.add_parser("prove", help="inclusion proof for one leaf")
    prove.add_argument("--tree", required=True)
    prove.add_argument("--index", type=int, required=True)
    prove.add_argument("--out")

    verify = commands.add_parser("verify", help="verify a proof file against a root")
    verify.add_argument("--proof", required=True)
    verify.add_argument("--root", required=True)
    verify.add_argument("--mode", choices=MODE_CHOICES, default=None)

    tamper = commands.add_parser("tamper", help="locate leaves that disagree with a tree dump")
    tamper.add_argument("--tree", required=True)
    tamper.add_argument("--input", required=True)

    chain = commands.add_parser("chain", help="assemble or validate a block store")
    chain.add_argument("action", choices=["assemble", "validate"])
    chain.add_argument("--dir", required=True)
    chain.add_argument("--input")
    tree_flags(chain)

    compare = commands.add_parser("compare", help="structural comparison of both variants")
    compare.add_argument("--from", dest="n_from", type=int, required=True)
    compare.add_argument("--to", dest="n_to", type=int, required=True)
    compare.add_argument("--mode", choices=MODE_CHOICES, default=settings.mode.value)

    bench = commands.add_parser("bench", help="timed benchmark report")
    bench.add_argument("--sizes", type=parse_sizes, required=True)
    bench.add_argument("--reps", type=int, default=settings.bench_repetitions)
    bench.add_argument("--format", choices=["csv", "json"], default="csv")
    bench.add_argument("--out", required=True)
    bench.add_argument("--variants", nargs="+", choices=VARIANT_CHOICES, default=VARIANT_CHOICES[::-1])
    bench.add_argument("--mode", choices=MODE_CHOICES, default=settings.mode.value)
    bench.add_argument("--payload-bytes", type=int, default=settings.bench_payload_bytes)
    bench.add_argument("--seed", type=int, default=settings.bench_seed)
    bench.add_argument("--parallel", action="store_true")
    return parser


# Command mapping for routing
function_map = {
    "build": cmd_build,
    "prove": cmd_prove,
    "verify": cmd_verify,
    "tamper": cmd_tamper,
    "chain": cmd_chain,
    "compare": cmd_compare,
    "bench": cmd_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parses arguments and routes to the matching command handler."""
    try:
        settings = get_settings()
    except MerkleError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    parser = build_parser(settings)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    configure_logging(args.log_level or settings.log_level)
    return function_map[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
