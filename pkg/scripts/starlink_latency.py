#!/usr/bin/env python3
"""Latency experiment on the constrained-link config.

Drives the batched 10 Hz command stream and the legacy un-decimated
100 Hz stream through the configured link and prints measured vs analytic
steady-state latency, queue growth, and drop counts.
"""

from __future__ import annotations

import argparse
import statistics

from teleopsim.bandwidth import StreamSpec, stream_bandwidth
from teleopsim.config import load_config
from teleopsim.netem import simulate_stream, steady_state_latency

LEGACY = StreamSpec("gloves-legacy", 100, 12_480)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default="configs/starlink.yaml")
    parser.add_argument("--duration", type=float, default=10.0)
    args = parser.parse_args()
    config = load_config(args.config)
    link = config.link
    print(f"link: {link.rate_bps:,.0f} bits/s, {link.propagation_delay_ms} ms one way, "
          f"{link.queue_capacity_bytes:,d} B queue\n")

    for spec in (config.stream("gloves"), LEGACY):
        analytic = steady_state_latency(link, spec)
        run = simulate_stream(link, spec.frame_bytes, spec.rate_hz, args.duration)
        print(f"{spec.name}: {spec.frame_bytes} B @ {spec.rate_hz:g} Hz "
              f"({stream_bandwidth(spec) / 1e3:,.1f} kbit/s offered)")
        if analytic.stable:
            mean = statistics.mean(run.latencies_s)
            print(f"  analytic steady latency {analytic.latency_s:.6f} s, "
                  f"measured mean {mean:.6f} s over {len(run.latencies_s)} frames")
        else:
            print("  analytic: UNSTABLE (offered load >= link rate)")
            print(f"  measured: max queue wait {max(run.wait_s):.2f} s, "
                  f"delivered {run.stats.delivered}, dropped {run.stats.dropped} "
                  f"of {run.stats.offered} offered")
        print()


if __name__ == "__main__":
    main()
