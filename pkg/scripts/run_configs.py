#!/usr/bin/env python3
"""Run one or more experiment configs, each into results/<config name>/.

    python scripts/run_configs.py scripts/configs/smoke.json
    python scripts/run_configs.py scripts/configs/*.json --results out
"""

import argparse
import json
import logging
import time
from pathlib import Path

from contagionlab.experiments import ExperimentConfig, _jsonable, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("configs", nargs="+")
    ap.add_argument("--results", default="results")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    for path in args.configs:
        cfg = ExperimentConfig.load(path)
        out = Path(args.results) / Path(path).stem
        t0 = time.perf_counter()
        _, summary = run_experiment(cfg, out)
        logging.info("%s -> %s (%.1fs)", path, out, time.perf_counter() - t0)
        print(json.dumps(_jsonable(summary), indent=1))


if __name__ == "__main__":
    main()
