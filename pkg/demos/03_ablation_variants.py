"""
Ways of using the explored data
===============================

Compares four inference-time strategies on the same seeds:

* baseline: prototypes never change;
* average: every prototype is averaged with the mean of the whole test batch;
* weight: explored samples are mixed in with a constant rate;
* exp2: explored samples are mixed in with a rate that decays by session.
"""

import numpy as np

from exp2fscil import ProtocolConfig, StrategyConfig, SynthSpec, generate_dataset, run_protocol

protocol = ProtocolConfig(total_classes=40, base_classes=20, sessions=5, way=4, shot=5, dim=32)
results = {v: [] for v in ("baseline", "average", "weight", "exp2")}
for seed in range(5):
    ds = generate_dataset(SynthSpec(protocol, 1.0, 3.0, test_per_class=50, base_train_per_class=50,
                                    seed=seed, offset=10.0))
    for variant in results:
        last = run_protocol(ds, StrategyConfig(variant)).sessions[-1]
        results[variant].append((last.overall_accuracy, last.incremental_accuracy))

print("variant    last-session overall   last-session inc.")
for variant, rows in results.items():
    overall, inc = np.mean(rows, axis=0)
    print(f"{variant:9s}  {overall:20.3f}  {inc:18.3f}")
