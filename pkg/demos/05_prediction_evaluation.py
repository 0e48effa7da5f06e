"""
Evaluating predictions without a single ground truth
====================================================

When annotators disagree, grading a classifier against one adjudicated
label punishes it for the panel's own uncertainty. Uncertainty-adjusted
metrics grade against posterior samples instead: each sample acts as a
candidate ground truth, and the score is the average over them. This demo
compares two candidate predictions on the worked dermatology case.
"""

import numpy as np

from plaus import (
    ClassSpace,
    GibbsConfig,
    PartialRanking,
    PredictionSet,
    PrIrnModel,
    gibbs_run,
    risk_metrics,
    ua_average_overlap,
    ua_set_accuracy,
    ua_topk_accuracy,
)

names = (
    "Pyogenic granuloma",
    "Hemangioma",
    "Melanoma",
    "Angiokeratoma of skin",
    "Atypical Nevus",
    "Melanocytic Nevus",
    "O/E - ecchymoses present",
    "Skin Tag",
)
risk = {0: 0, 1: 1, 2: 2, 3: 0, 4: 1, 5: 0, 6: 0, 7: 0}
space = ClassSpace(size=8, names=names, risk=risk)
rater_blocks = [
    [[0], [1], [2]],
    [[3], [4]],
    [[1], [5, 2, 6]],
    [[1, 2, 7]],
    [[2]],
    [[1], [2], [5]],
]
rankings = [PartialRanking(b, space) for b in rater_blocks]

# Two models' differentials for the same lesion. Model A leads with
# Atypical Nevus and omits Melanoma; model B leads with Hemangioma and
# keeps Melanoma in its top three.
pred_a = PredictionSet((4, 1, 5))
pred_b = PredictionSet((1, 5, 2))

posterior = gibbs_run(rankings, GibbsConfig(iterations=2500, burn_in=500, seed=1))

print("metric                 model A   model B")
for label, fn in [
    ("top-1 accuracy", lambda p: ua_topk_accuracy(posterior, p, 1)),
    ("top-3 accuracy", lambda p: ua_topk_accuracy(posterior, p, 3)),
    ("set-3 accuracy", lambda p: ua_set_accuracy(posterior, p, 3)),
    ("average overlap", lambda p: ua_average_overlap(posterior, p, 3)),
]:
    print(f"{label:<22} {fn(pred_a):7.3f}   {fn(pred_b):7.3f}")

# The separation survives a change of aggregation model.
resampled = PrIrnModel.fit(rankings, gamma=30.0).sample(2000, seed=1)
a = ua_topk_accuracy(resampled, pred_a, 3)
b = ua_topk_accuracy(resampled, pred_b, 3)
print(f"\nresampled aggregation, top-3 accuracy: A {a:.3f} vs B {b:.3f}")

# Pooling plausibility mass by risk level asks a coarser question: does
# the panel expect a benign, intermediate, or high-risk condition, and
# does the prediction's leading class sit at that level?
outlook = risk_metrics(posterior, space)
print(
    f"\npanel risk outlook: certainty {outlook['risk_certainty']:.3f}, "
    f"expected risk {outlook['expected_risk_mean']:.2f} "
    f"[{outlook['expected_risk_min']:.2f}, {outlook['expected_risk_max']:.2f}]"
)
for label, pred in (("A", pred_a), ("B", pred_b)):
    match = risk_metrics(posterior, space, pred)["ua_risk_match"]
    lead = pred.ranked_classes[0]
    print(
        f"model {label} leads with {names[lead]} "
        f"(risk level {risk[lead]}): risk match {match:.3f}"
    )
# Both leads sit at the intermediate risk level, so the coarse risk view
# cannot separate them even though the condition-level metrics do.
