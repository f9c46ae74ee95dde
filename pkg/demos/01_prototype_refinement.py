"""
Refining few-shot prototypes with unlabeled test data
=====================================================

A 5-shot prototype is a noisy estimate of its class mean. Here we run the
full session protocol on a synthetic Gaussian dataset twice, once with the
plain nearest-prototype classifier and once with explore/exploit updates, and
watch the incremental-class prototypes move toward the true means.
"""

import numpy as np

from exp2fscil import ProtocolConfig, StrategyConfig, SynthSpec, generate_dataset, run_protocol

# 20 base classes, then 5 sessions adding 4 classes with 5 labeled samples each.
protocol = ProtocolConfig(total_classes=40, base_classes=20, sessions=5, way=4, shot=5, dim=32)
spec = SynthSpec(protocol, sigma_intra=1.0, target_delta_inter=3.0, test_per_class=50,
                 base_train_per_class=50, seed=0, offset=10.0)
ds = generate_dataset(spec)

baseline = run_protocol(ds, StrategyConfig("baseline"))
exp2 = run_protocol(ds, StrategyConfig("exp2", R=40, tau=0.8, beta_base=0.05, beta_inc=0.3),
                    record_trace=True)

print("session  overall(base)  overall(exp2)  inc(base)  inc(exp2)")
for b, e in zip(baseline.sessions, exp2.sessions):
    inc_b = "   -   " if b.incremental_accuracy is None else f"{b.incremental_accuracy:7.3f}"
    inc_e = "   -   " if e.incremental_accuracy is None else f"{e.incremental_accuracy:7.3f}"
    print(f"{b.session:7d}  {b.overall_accuracy:13.3f}  {e.overall_accuracy:13.3f}  {inc_b:>9}  {inc_e:>9}")

# %%
# Distance of each incremental prototype to its true mean, before and after
# the updates of every session.
for s in exp2.sessions[1:]:
    inc = s.trace.class_ids >= protocol.base_classes
    mu = ds.class_means[s.trace.class_ids[inc]]
    before = np.linalg.norm(s.trace.before[inc] - mu, axis=1).mean()
    after = np.linalg.norm(s.trace.after[inc] - mu, axis=1).mean()
    print(f"session {s.session}: mean prototype error {before:.3f} -> {after:.3f}")
