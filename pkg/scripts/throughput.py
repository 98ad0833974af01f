"""Time model building, injection and re-alignment on a large synthetic corpus."""
from __future__ import annotations

import argparse
import time

from asrnoise.cli import build_model_from_pairs
from asrnoise.corpus import dumps_dialogues
from asrnoise.inject import InjectionConfig, inject_corpus, validate_injection
from asrnoise.synthetic import generate_dialogues, simulated_pairs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dialogues", type=int, default=10000)
    ap.add_argument("--turns", type=int, default=14)
    ap.add_argument("--jobs", type=int, default=4)
    ap.add_argument("--check", action="store_true", help="also compare against a single-process run")
    args = ap.parse_args()

    corpus = generate_dialogues(args.dialogues, seed=21, turns=args.turns)
    pairs = simulated_pairs(generate_dialogues(300, seed=22, id_prefix="DEV"), seed=23)
    timings = {}
    t = time.perf_counter()
    model = build_model_from_pairs(pairs)
    timings["model-build"] = time.perf_counter() - t
    t = time.perf_counter()
    noisy, log = inject_corpus(corpus, model, InjectionConfig(seed=7), jobs=args.jobs)
    timings["inject"] = time.perf_counter() - t
    t = time.perf_counter()
    report = validate_injection(corpus, noisy, jobs=args.jobs)
    timings["validate"] = time.perf_counter() - t

    for name, secs in timings.items():
        print(f"{name:12s} {secs:6.1f} s")
    print(f"{'total':12s} {sum(timings.values()):6.1f} s  ({report.n_ref_words} tokens, {len(log.rewrites)} rewrites)")
    if args.check:
        serial, _ = inject_corpus(corpus, model, InjectionConfig(seed=7), jobs=1)
        same = dumps_dialogues(serial) == dumps_dialogues(noisy)
        print("schedule-invariant:", same)


if __name__ == "__main__":
    main()
