"""Retune an ideal-sphere design to measured fundamentals and report every channel.

    python scripts/ball_retune.py [configs/plastic_ball.yaml]
"""

import sys
from pathlib import Path

import numpy as np

from spherefdn import pipeline
from spherefdn.acoustics import sphere_mode_series
from spherefdn.allpass import loop_resonances
from spherefdn.config import load_config


def main():
    path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "configs/plastic_ball.yaml"
    cfg = load_config(path)
    theory = {s.label: [f for f in s.frequencies if f > 0] for s in sphere_mode_series(cfg.sphere)}
    print("n  kind     measured  theory_1  sharp%   realized (s=1..4)                  dev% vs theory")
    for ch in pipeline.design_channels(cfg):
        n = int(ch.label)
        got = loop_resonances(ch.design, cfg.sample_rate, count=4)
        th = np.array(theory[n][: got.size])
        dev = 100 * (got - th) / th
        meas = f"{ch.retuned_to:8.1f}" if ch.retuned_to else "       -"
        sharp = f"{100 * (ch.retuned_to - th[0]) / th[0]:6.1f}" if ch.retuned_to else "     -"
        print(f"{n:<2} {ch.kind:8} {meas}  {th[0]:8.1f}  {sharp}   "
              f"{' '.join(f'{f:7.1f}' for f in got):34}  {' '.join(f'{d:+5.1f}' for d in dev)}")


if __name__ == "__main__":
    main()
