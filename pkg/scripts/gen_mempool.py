import argparse
import logging

from services.chain_service import synthetic_mempool, write_mempool

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def generate(path, count, payload_bytes, seed):
    """Write a mempool file of fixed-size pseudo-random transactions."""
    logger.info(f"Generating {count} transactions of {payload_bytes} bytes (seed {seed})...")
    transactions = synthetic_mempool(count, payload_bytes, seed)
    write_mempool(path, transactions)
    total = sum(tx.byte_size for tx in transactions)
    logger.info(f"Wrote {len(transactions)} transactions ({total} payload bytes) to {path}")


def main():
    """Main function to generate a synthetic mempool file."""
    parser = argparse.ArgumentParser(description="Generate a synthetic mempool file")
    parser.add_argument("out", help="destination JSON-lines file")
    parser.add_argument("--count", type=int, default=5)
    parser.add_argument("--payload-bytes", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    try:
        generate(args.out, args.count, args.payload_bytes, args.seed)
    except Exception as e:
        logger.error(f"Mempool generation failed: {str(e)}")
        exit(1)

if __name__ == "__main__":
    main()
