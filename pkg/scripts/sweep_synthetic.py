#!/usr/bin/env python3
"""Random search over the default hyperparameter envelope on a synthetic graph.

Writes trials.jsonl and best.json into --out.  One training epoch keeps the
largest configurations to a couple of minutes each on a single core.
"""
import argparse
import json
import os

from kgrec.graph import KnowledgeGraph, strip_data_properties
from kgrec.pipeline import link_prediction_objective
from kgrec.skipgram import TrainConfig
from kgrec.synth import SynthSpec, generate
from kgrec.tuner import SearchSpace, random_search
from kgrec.walks import WalkConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="sweep")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=1)
    ap.add_argument("--model", default="uniform", choices=["uniform", "node2vec"])
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    kg = strip_data_properties(KnowledgeGraph.from_triples(generate(SynthSpec(seed=args.seed)).triples))
    objective = link_prediction_objective(kg, args.model, WalkConfig(strategy=args.model),
                                          TrainConfig(epochs=args.epochs, shrink_window=True), seed=args.seed)
    best, results = random_search(SearchSpace.default(args.model), args.trials, objective, seed=args.seed,
                                  log_path=os.path.join(args.out, "trials.jsonl"))
    ok = [r for r in results if r.ok]
    summary = {"best": best, "AUC": max(r.auc for r in ok) if ok else None,
               "failed": len(results) - len(ok)}
    with open(os.path.join(args.out, "best.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
