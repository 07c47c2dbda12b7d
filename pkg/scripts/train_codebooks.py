"""Train the baseband codebooks used for limited feedback and save them as JSON.

    python3 scripts/train_codebooks.py --config configs/quantized_64x16.yaml --out codebooks
"""

import argparse
from pathlib import Path

from mmwave_hybrid.config import load_config
from mmwave_hybrid.experiments import named_configs
from mmwave_hybrid.metrics import train_codebooks


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=None, help="defaults to the 64x16 quantization study")
    ap.add_argument("--out", default="codebooks")
    args = ap.parse_args()
    config = load_config(args.config) if args.config else named_configs("fig6")[0]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for (spread, ns, bits), book in train_codebooks(config).items():
        path = out / f"{config.name}_spread{spread:g}_ns{ns}_angle{bits}.json"
        book.save(path, config.channel_params(spread).tx.sector)
        print(path)


if __name__ == "__main__":
    main()
