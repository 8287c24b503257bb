#!/usr/bin/env python3
"""
Summarise a run debug log: job runtimes, failures, conjugacy orders, symbol-space stages and probe
statistics.

Usage:
    python tools/analyze_run_log.py <log_file_path>
"""

import re
import sys
from collections import Counter, defaultdict
from pathlib import Path

LINE = re.compile(r"^\[(\d\d:\d\d:\d\d)\] (\w+): (.+)$")


def parse_log_file(log_path):
    """Parse the debug log into per-category records."""
    event_types = Counter()
    runtimes = {}
    distances = {}
    problems = {}
    limit_reports = []
    divergences = []
    tolerance_failures = []
    conjugacy = []
    symbol_stages = []
    probes = []
    errors = defaultdict(list)

    with open(log_path, "r", encoding="utf-8") as f:
        for line in f:
            match = LINE.match(line.strip())
            if not match:
                continue
            _, event_type, details = match.groups()
            event_types[event_type] += 1
            job_match = re.search(r"Job (\d+)", details)
            job = int(job_match.group(1)) if job_match else None

            if event_type == "JOB_START":
                problem_match = re.search(r"Problem: (\w+)", details)
                if problem_match:
                    problems[job] = problem_match.group(1)
            elif event_type == "JOB_END":
                runtime_match = re.search(r"Runtime: (\d+)ms", details)
                if runtime_match:
                    runtimes[job] = int(runtime_match.group(1))
                distance_match = re.search(r"Distance: ([\d.eE+-]+)", details)
                if distance_match:
                    distances[job] = float(distance_match.group(1))
            elif event_type == "LIMIT_REPORT":
                limit_reports.append((job, details))
            elif event_type == "DIVERGENCE":
                escape = re.search(r"Escape: ([\d.]+)", details)
                divergences.append((job, float(escape.group(1)) if escape else None))
            elif event_type == "TOLERANCE":
                tolerance_failures.append((job, details))
            elif event_type == "CONJUGACY":
                order = re.search(r"Order: ([-\d.na]+)", details)
                conjugacy.append((job, float(order.group(1)) if order else float("nan")))
            elif event_type == "SYMBOLS":
                alpha = re.search(r"Alpha: ([-\d.na]+)", details)
                unstable = "Best delta: none" in details
                symbol_stages.append((job, float(alpha.group(1)) if alpha else float("nan"), unstable))
            elif event_type == "PROBE":
                probes.append(details)
            elif event_type == "ERROR":
                kind = re.search(r"Type: (\w+)", details)
                errors[kind.group(1) if kind else "unknown"].append(details)

    return {
        "event_types": event_types,
        "runtimes": runtimes,
        "distances": distances,
        "problems": problems,
        "limit_reports": limit_reports,
        "divergences": divergences,
        "tolerance_failures": tolerance_failures,
        "conjugacy": conjugacy,
        "symbol_stages": symbol_stages,
        "probes": probes,
        "errors": errors,
    }


def analyze_runtimes(runtimes, problems):
    """Report job runtimes and the slowest jobs."""
    print("\n=== RUNTIME ANALYSIS ===")
    print(f"Finished jobs: {len(runtimes)}")
    if not runtimes:
        print("  No JOB_END events - run may have been interrupted")
        return
    total = sum(runtimes.values())
    print(f"  Total job time: {total / 1000:.1f}s (mean {total / len(runtimes):.0f}ms)")
    for job, ms in sorted(runtimes.items(), key=lambda x: -x[1])[:5]:
        print(f"  Job {job} ({problems.get(job, '?')}): {ms}ms")


def analyze_limits(limit_reports, distances):
    """Report nestedness, forward containment and reference distances."""
    print("\n=== OMEGA-LIMIT ANALYSIS ===")
    not_nested = [job for job, details in limit_reports if "Nested: False" in details]
    not_contained = [job for job, details in limit_reports if "Forward contained: False" in details]
    print(f"  Limit reports: {len(limit_reports)}")
    if not_nested:
        print(f"  Jobs with a late window outside the early one: {not_nested} - consider a longer t_burn")
    if not_contained:
        print(f"  Jobs with forward limit outside the uniform limit: {not_contained}")
    if distances:
        worst = max(distances.items(), key=lambda x: x[1])
        print(f"  Largest reference distance: job {worst[0]} at {worst[1]:.3e}")


def analyze_failures(divergences, tolerance_failures, errors):
    """Report divergences, tolerance failures and recorded numerical errors."""
    print("\n=== FAILURE ANALYSIS ===")
    print(f"  Divergences: {len(divergences)}")
    for job, escape in divergences:
        print(f"    Job {job} escaped at t={escape}")
    print(f"  Tolerance failures: {len(tolerance_failures)}")
    for job, details in tolerance_failures:
        print(f"    {details}")
    for kind, entries in errors.items():
        print(f"  {kind}: {len(entries)}")


def analyze_conjugacy(conjugacy, probes):
    """Report conjugacy orders and probe summaries."""
    if conjugacy:
        print("\n=== CONJUGACY ANALYSIS ===")
        orders = [order for _, order in conjugacy if order == order]
        if orders:
            print(f"  Fitted orders: min {min(orders):.2f}, max {max(orders):.2f}")
            if min(orders) < 0.5:
                print("  Order below one half - check the path step against the conjugacy steps")
    if probes:
        print("\n=== OU PROBE ===")
        for details in probes:
            print(f"  {details}")


def analyze_symbols(symbol_stages):
    """Report Holder exponents and jobs without a passing stability radius."""
    if not symbol_stages:
        return
    print("\n=== SYMBOL SPACE ===")
    alphas = [alpha for _, alpha, _ in symbol_stages if alpha == alpha]
    if alphas:
        print(f"  Holder exponents: min {min(alphas):.3f}, max {max(alphas):.3f}")
    unstable = [job for job, _, flag in symbol_stages if flag]
    if unstable:
        print(f"  Jobs where every stability radius failed: {unstable}")


def main():
    if len(sys.argv) < 2:
        print("Usage: python tools/analyze_run_log.py <log_file_path>")
        print("\nExample:")
        print("  python tools/analyze_run_log.py runs/debug_logs/run_debug_20250101_120000.txt")
        sys.exit(1)

    log_path = Path(sys.argv[1])
    if not log_path.exists():
        print(f"Error: Log file not found: {log_path}")
        sys.exit(1)

    print(f"Analyzing: {log_path.name}")
    print("=" * 60)

    data = parse_log_file(log_path)

    print("\n=== EVENT SUMMARY ===")
    for event_type, count in data["event_types"].most_common():
        print(f"  {event_type}: {count}")

    analyze_runtimes(data["runtimes"], data["problems"])
    analyze_limits(data["limit_reports"], data["distances"])
    analyze_failures(data["divergences"], data["tolerance_failures"], data["errors"])
    analyze_symbols(data["symbol_stages"])
    analyze_conjugacy(data["conjugacy"], data["probes"])

    print("\n" + "=" * 60)
    print("Analysis complete!")


if __name__ == "__main__":
    main()
