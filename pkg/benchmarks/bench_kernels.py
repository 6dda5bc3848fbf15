"""Time the compiled integrator against the pure-Python twin.

    python benchmarks/bench_kernels.py --seconds 2 --repeat 3
"""

import argparse
import time

import numpy as np

from hifdetect.circuit import LineParams
from hifdetect.hif import HifParams
from hifdetect.kernels import backends
from hifdetect.waveform import FaultWindow, LoadProfile, simulate


def time_backend(fn, p, hif, seconds, repeat):
    best = np.inf
    wf = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        wf = simulate(p, LoadProfile(), hif, [FaultWindow(0.25 * seconds, 0.5 * seconds)],
                      duration=seconds, backend=fn)
        best = min(best, time.perf_counter() - t0)
    return best, wf


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=2.0, help="simulated seconds per run")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    p = LineParams(0.40, 2.9e-3, 60e-6, 2401.8, 98.0)
    hif = HifParams((107.35, 118.65), (128.82, 142.38), 800.0, 1100.0, sigma_step=1.13, seed=7)
    results = {}
    for name, fn in backends().items():
        elapsed, wf = time_backend(fn, p, hif, args.seconds, args.repeat)
        results[name] = (elapsed, wf)
        print(f"{name:8s} {elapsed:8.3f} s  {len(wf) / elapsed / 1e6:8.3f} Msteps/s")

    if len(results) == 2:
        (tc, a), (tp, b) = results["cython"], results["python"]
        same = np.array_equal(a.i_send, b.i_send) and np.array_equal(a.v_recv, b.v_recv)
        print(f"speedup  {tp / tc:8.1f}x  outputs identical: {same}")
        day = 24 * 10.0 * 7680
        print(f"one compressed day ({day / 1e6:.2f} M steps): cython {day * tc / len(a):.1f} s, "
              f"python {day * tp / len(b):.0f} s")


if __name__ == "__main__":
    main()
