#!/usr/bin/env python3
"""
Two-stage tuning of support and bin size for an events CSV.

Stage one selects the support by AIC at a coarse preliminary bin size; stage two
scans a decreasing list of bin sizes at that support and reports where the baseline
estimate stops moving.

Usage:
    python -m scripts.two_stage_selection events.csv --s-max 5 --deltas 0.5,0.1,0.05,0.01
"""

import argparse
import sys

from app.commands.common import float_list
from app.config import settings
from app.core.exceptions import HawkesException
from app.core.logging_config import setup_logging
from app.services.event_service import bin_counts, preliminary_bin_size, read_events_csv
from app.services.selection_service import select_bin_size, select_support


def two_stage_selection(args: argparse.Namespace) -> int:
    """Run both stages and print the recommendation."""
    stream = read_events_csv(args.events, d=args.d)
    delta0 = args.delta0 or preliminary_bin_size(stream)
    print(f"📥 {sum(stream.counts)} events in {stream.d} components over {stream.length:g} s")

    print(f"\n1️⃣  Support by AIC at delta0 = {delta0:g}")
    scan = select_support(bin_counts(stream, delta0), delta0, args.s_max, args.workers)
    for p, value in zip(scan.candidates, scan.aic):
        marker = "  <-" if p == scan.p_hat else ""
        print(f"   p={p:4d}  s={p * delta0:8.4f}  AIC={value: .6f}{marker}")
    print(f"   s_hat = {scan.s_hat:g}")

    print(f"\n2️⃣  Bin size scan at s = {scan.s_hat:g}")
    binsize = select_bin_size(stream, scan.s_hat, args.deltas, args.workers)
    for candidate in binsize.candidates:
        estimates = ", ".join(
            f"{eta:.4f} (±{half:.4f})"
            for eta, half in zip(candidate.eta_hat, candidate.half_width)
        )
        print(f"   delta={candidate.delta:<8g} eta_hat = {estimates}")
    print(f"   trend per component: {', '.join(binsize.trend)}")

    if binsize.recommended_delta is None:
        print("\n⚠️  No bin size satisfies the stabilization rule; extend the list downwards")
        return 2
    print(f"\n✅ Recommended: delta = {binsize.recommended_delta:g}, s = {scan.s_hat:g}")
    return 0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("events", help="Events CSV (component_index,timestamp)")
    parser.add_argument("--d", type=int, default=None)
    parser.add_argument("--delta0", type=float, default=None)
    parser.add_argument("--s-max", type=float, required=True)
    parser.add_argument("--deltas", type=float_list, required=True)
    parser.add_argument("--workers", type=int, default=settings.WORKERS)
    args = parser.parse_args()

    setup_logging(settings.APP_NAME, settings.LOG_LEVEL, json_logs=False)
    try:
        return two_stage_selection(args)
    except HawkesException as exc:
        print(f"❌ {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
