"""Replicate the shape of the transcript-vs-injected error table on synthetic data.

A simulated recogniser produces punctuation-free hypotheses for a dev split;
the confusion model learned from them is injected into a larger, punctuated
train split and the injected corpus is re-scored against its clean copy.

    python scripts/injection_replication.py --dev 1000 --train 5000 --seed 7
"""
from __future__ import annotations

import argparse
import time

from asrnoise.cli import build_model_from_pairs, score_pairs
from asrnoise.confusion import model_error_rates
from asrnoise.inject import InjectionConfig, inject_corpus, validate_injection
from asrnoise.metrics import format_rows
from asrnoise.synthetic import generate_dialogues, simulated_pairs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dev", type=int, default=1000, help="dev dialogues used to learn the model")
    ap.add_argument("--train", type=int, default=5000, help="train dialogues to inject")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--mode", choices=["stochastic", "quota"], default="stochastic")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    t0 = time.perf_counter()
    pairs = simulated_pairs(generate_dialogues(args.dev, seed=1, id_prefix="DEV"), seed=2)
    model = build_model_from_pairs(pairs)
    train = generate_dialogues(args.train, seed=3)
    noisy, log = inject_corpus(train, model, InjectionConfig(seed=args.seed, mode=args.mode), jobs=args.jobs)
    post = validate_injection(train, noisy, jobs=args.jobs)

    print(format_rows([("Transcripts", score_pairs(pairs)), ("Error-Injected Train", post)]))
    full = model_error_rates(model)
    words = model_error_rates(model, words_only=True)
    print()
    print(f"model rates     ins {full.ins_rate:.2f}  del {full.del_rate:.2f}  sub {full.sub_rate:.2f}")
    print(f"word-only rates ins {words.ins_rate:.2f}  del {words.del_rate:.2f}  sub {words.sub_rate:.2f}")
    print(f"{len(log.rewrites)} rewrites in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
