# services/bench_service.py
"""
Comparison harness for the two tree variants.

Physical energy and network-level metrics are not measured. Hash invocations
stand in for energy, stored node bytes stand in for memory, and build/prove/
verify wall time is reported as nanoseconds. Structural columns are
reproducible for a given seed; timing columns are not.
"""

import csv
import json
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import structlog

from services.errors import InvalidConfig, InvalidRange, IoError
from services.hashing_service import (
    DIGEST_SIZE,
    HashMode,
    counting_scope,
    hash_counter_snapshot,
    hash_leaf,
    reset_hash_counter,
)
from services.merkle_service import TreeVariant, build_tree, root, tree_shape
from services.proof_service import generate_proof, verify_proof

logger = structlog.get_logger(__name__)

GENERATOR_NAME = "numpy PCG64"
PROOF_SAMPLE_CAP = 1_000
MIN_REPETITIONS = 3
ENERGY_PROXY_NOTE = (
    "total_hash_invocations is the energy proxy: joules are not measured, "
    "each SHA-256 call counts as one unit of work"
)
CSV_COLUMNS = (
    "variant",
    "n",
    "build_nanos",
    "prove_nanos_mean",
    "verify_nanos_mean",
    "internal_hashes",
    "total_hash_invocations",
    "stored_nodes",
    "stored_bytes",
    "mean_proof_depth",
)
STRUCTURAL_COLUMNS = (
    "internal_hashes",
    "total_hash_invocations",
    "stored_nodes",
    "stored_bytes",
    "mean_proof_depth",
)
ORDERING_METRICS = ("build_nanos",) + STRUCTURAL_COLUMNS[:2] + STRUCTURAL_COLUMNS[3:]


def _environment_note() -> str:
    return f"python {platform.python_version()} on {platform.platform()}"


@dataclass(frozen=True)
class BenchConfig:
    sizes: Sequence[int]
    variants: Sequence[TreeVariant] = (TreeVariant.TRIM, TreeVariant.TRADITIONAL)
    mode: HashMode = HashMode.DOMAIN_SEPARATED
    repetitions: int = 5
    payload_bytes: int = 256
    seed: int = 20240611
    parallel: bool = False

    def validate(self) -> None:
        if not self.sizes:
            raise InvalidConfig("sizes must not be empty")
        if any(n < 1 for n in self.sizes):
            raise InvalidConfig(f"every size must be >= 1, got {list(self.sizes)}")
        if not self.variants:
            raise InvalidConfig("variants must not be empty")
        if self.repetitions < MIN_REPETITIONS:
            raise InvalidConfig(f"repetitions must be >= {MIN_REPETITIONS}, got {self.repetitions}")
        if self.payload_bytes < 0:
            raise InvalidConfig(f"payload_bytes must be >= 0, got {self.payload_bytes}")

    def echo(self) -> Dict[str, Any]:
        return {
            "sizes": list(self.sizes),
            "variants": [v.value for v in self.variants],
            "mode": self.mode.value,
            "repetitions": self.repetitions,
            "payload_bytes": self.payload_bytes,
            "seed": self.seed,
            "parallel": self.parallel,
        }


@dataclass(frozen=True)
class BenchSample:
    variant: TreeVariant
    n: int
    build_nanos: int
    prove_nanos_mean: float
    verify_nanos_mean: float
    internal_hashes: int
    total_hash_invocations: int
    stored_nodes: int
    stored_bytes: int
    mean_proof_depth: float

    @property
    def leaves_per_second(self) -> float:
        return self.n * 1e9 / self.build_nanos if self.build_nanos else 0.0

    def as_row(self) -> Dict[str, Any]:
        row = asdict(self)
        row["variant"] = self.variant.value
        row["leaves_per_second"] = self.leaves_per_second
        return row


@dataclass
class BenchReport:
    config: BenchConfig
    samples: List[BenchSample]
    environment: str = field(default_factory=_environment_note)

    def sorted_samples(self) -> List[BenchSample]:
        return sorted(self.samples, key=lambda s: (s.variant.value, s.n))

    def orderings(self) -> List[Dict[str, Any]]:
        """Per n, which variant scores lower on each structural and timing metric."""
        by_n: Dict[int, Dict[TreeVariant, BenchSample]] = {}
        for sample in self.samples:
            by_n.setdefault(sample.n, {})[sample.variant] = sample
        rows = []
        for n in sorted(by_n):
            cell = by_n[n]
            if len(cell) < 2:
                continue
            row: Dict[str, Any] = {"n": n}
            for metric in ORDERING_METRICS:
                values = {variant.value: getattr(sample, metric) for variant, sample in cell.items()}
                low = min(values.values())
                winners = sorted(name for name, value in values.items() if value == low)
                row[metric] = winners[0] if len(winners) == 1 else "tie"
            rows.append(row)
        return rows


@dataclass(frozen=True)
class ComparisonRow:
    n: int
    trim_nodes: int
    traditional_nodes: int
    node_delta: int
    trim_internal_hashes: int
    traditional_internal_hashes: int
    hash_delta: int
    traditional_duplicated_pairings: int


def _payloads(n: int, payload_bytes: int, seed: int) -> List[bytes]:
    rng = np.random.Generator(np.random.PCG64([seed, n]))
    return [rng.bytes(payload_bytes) for _ in range(n)]


def _proof_sample(n: int, seed: int) -> List[int]:
    if n <= PROOF_SAMPLE_CAP:
        return list(range(n))
    rng = np.random.Generator(np.random.PCG64([seed, n, 1]))
    return sorted(int(i) for i in rng.choice(n, size=PROOF_SAMPLE_CAP, replace=False))


def _run_cell(config: BenchConfig, variant: TreeVariant, n: int) -> BenchSample:
    payloads = _payloads(n, config.payload_bytes, config.seed)
    indices = _proof_sample(n, config.seed)
    build_times: List[int] = []
    prove_means: List[float] = []
    verify_means: List[float] = []
    structural = None

    with counting_scope():
        for _ in range(config.repetitions):
            reset_hash_counter()
            started = time.perf_counter_ns()
            leaves = [hash_leaf(p, config.mode) for p in payloads]
            tree = build_tree(leaves, variant, config.mode)
            build_times.append(time.perf_counter_ns() - started)
            invocations = hash_counter_snapshot()

            tree_root = root(tree)
            started = time.perf_counter_ns()
            proofs = [generate_proof(tree, i) for i in indices]
            prove_means.append((time.perf_counter_ns() - started) / len(indices))
            started = time.perf_counter_ns()
            outcomes = [verify_proof(proof, tree_root) for proof in proofs]
            verify_means.append((time.perf_counter_ns() - started) / len(indices))
            if not all(outcome.valid for outcome in outcomes):
                raise RuntimeError(f"proof round-trip failed for {variant.value} n={n}")

            structural = (
                tree.stats.internal_hashes,
                invocations,
                tree.stats.total_nodes,
                float(np.mean([proof.depth for proof in proofs])),
            )

    internal_hashes, invocations, stored_nodes, mean_depth = structural
    sample = BenchSample(
        variant=variant,
        n=n,
        build_nanos=int(np.median(build_times)),
        prove_nanos_mean=float(np.median(prove_means)),
        verify_nanos_mean=float(np.median(verify_means)),
        internal_hashes=internal_hashes,
        total_hash_invocations=invocations,
        stored_nodes=stored_nodes,
        stored_bytes=DIGEST_SIZE * stored_nodes,
        mean_proof_depth=mean_depth,
    )
    logger.debug("Bench cell finished", variant=variant.value, n=n, build_nanos=sample.build_nanos)
    return sample


def run_benchmark(config: BenchConfig) -> BenchReport:
    config.validate()
    cells = [(variant, n) for variant in config.variants for n in config.sizes]
    logger.info("Benchmark started", cells=len(cells), **config.echo())
    if config.parallel:
        with ThreadPoolExecutor() as pool:
            samples = list(pool.map(lambda cell: _run_cell(config, *cell), cells))
    else:
        samples = [_run_cell(config, variant, n) for variant, n in cells]
    logger.info("Benchmark finished", samples=len(samples))
    return BenchReport(config=config, samples=samples)


def compare_variants(n_from: int, n_to: int, mode: HashMode = HashMode.DOMAIN_SEPARATED) -> List[ComparisonRow]:
    """Structural counts for both variants over ``n_from..n_to``; no hashing, no timing.

    ``mode`` has no effect on shape and is accepted so tables can echo it.
    """
    if n_from < 1 or n_to < n_from:
        raise InvalidRange(f"InvalidRange: need 1 <= from <= to, got {n_from}..{n_to}")
    rows = []
    for n in range(n_from, n_to + 1):
        trim = tree_shape(n, TreeVariant.TRIM)
        traditional = tree_shape(n, TreeVariant.TRADITIONAL)
        rows.append(
            ComparisonRow(
                n=n,
                trim_nodes=trim.total_nodes,
                traditional_nodes=traditional.total_nodes,
                node_delta=traditional.total_nodes - trim.total_nodes,
                trim_internal_hashes=trim.internal_hashes,
                traditional_internal_hashes=traditional.internal_hashes,
                hash_delta=traditional.internal_hashes - trim.internal_hashes,
                traditional_duplicated_pairings=traditional.duplicated_pairings,
            )
        )
    return rows


def report_document(report: BenchReport) -> Dict[str, Any]:
    return {
        "config": report.config.echo(),
        "generator": GENERATOR_NAME,
        "environment": report.environment,
        "notes": [ENERGY_PROXY_NOTE],
        "samples": [sample.as_row() for sample in report.sorted_samples()],
        "orderings": report.orderings(),
    }


def emit_report(report: BenchReport, format: str, out_path) -> None:
    """Write the report as CSV (exact column set) or JSON."""
    if format not in ("csv", "json"):
        raise InvalidConfig(f"unknown report format {format!r} (expected csv|json)")
    out_path = Path(out_path)
    try:
        with out_path.open("w", encoding="utf-8", newline="") as handle:
            if format == "csv":
                writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS, extrasaction="ignore")
                writer.writeheader()
                for sample in report.sorted_samples():
                    writer.writerow(sample.as_row())
            else:
                json.dump(report_document(report), handle, indent=2)
                handle.write("\n")
    except OSError as e:
        raise IoError(out_path, e.strerror or str(e))
    logger.info("Report written", path=str(out_path), format=format, rows=len(report.samples))
