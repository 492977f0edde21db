"""The double ensemble end to end, in memory.

Three synthetic "extractors" describe the same samples with different
amounts of signal. The engine scores each against several classifier
families with tuned cross-validation, picks the top two feature sets,
fuses them by concatenation, tunes classifiers on the fusion, and lets
the best three vote on the untouched test rows.
"""

import numpy as np

from fusevote.classifiers import ClassifierSpec, fit
from fusevote.data import LabeledDataset, SplitSpec, split
from fusevote.ensemble import (
    FamilyRule,
    VoteSpec,
    evaluate_feature_sets,
    fuse,
    select_top_k,
    vote_predict,
)
from fusevote.hpo import GridSpec, grid_search

rng = np.random.default_rng(42)
n = 400
labels = rng.permutation(np.r_[np.zeros(n // 2, dtype=np.int64),
                               np.ones(n // 2, dtype=np.int64)])


def extractor(gap, seed, tag):
    local = np.random.default_rng(seed)
    x = local.normal(size=(n, 4))
    x[:, 0] += (labels * 2.0 - 1.0) * gap
    return LabeledDataset(x, labels, 2, tag)


sets = [extractor(2.0, 1, "sharp_net"), extractor(1.2, 2, "soft_net"),
        extractor(0.1, 3, "murky_net")]

spec = SplitSpec(0.8, seed=0)
trains, tests = {}, {}
for ds in sets:
    trains[ds.source_tag], tests[ds.source_tag] = split(ds, spec)

grids = {
    "GaussianNB": GridSpec("GaussianNB", {"var_smoothing": [1e-9, 1e-7]}),
    "KNN": GridSpec("KNN", {"n_neighbors": [3, 9, 15]}),
    "SVM-RBF": GridSpec("SVM-RBF", {"C": [1, 10], "gamma": ["scale"]}),
}
families = list(grids)

table = evaluate_feature_sets(list(trains.values()), families, folds=4,
                              seed=7, grids=grids)
print("evaluation table (tuned CV accuracy):")
for ident, row in zip(table.extractor_ids, table.cells):
    cells = "  ".join(f"{family}={v:.3f}" for family, v in zip(families, row))
    print(f"  {ident:10s} {cells}  | mean {row.mean():.3f}")

selected = select_top_k(table, 2, FamilyRule.for_ids(table.extractor_ids))
print(f"\nselected feature sets: {selected}")

fused_train = fuse([trains[i] for i in selected])[0]
fused_test = fuse([tests[i] for i in selected])[0]
print(f"fused width: {fused_train.cols} columns ({fused_train.source_tag})")

members = []
for family in table.top_families(3):
    best, _ = grid_search(fused_train, grids[family], folds=4, seed=11)
    members.append(fit(fused_train, best))
    print(f"  tuned {family}: {best.hyperparams}")

votes = vote_predict(members, fused_test.features, VoteSpec.for_members(members))
accuracy = float(np.mean(votes == fused_test.labels))
print(f"\nthree-classifier vote on the fused test split: accuracy {accuracy:.3f}")
for member in members:
    solo = float(np.mean(member.predict(fused_test.features) == fused_test.labels))
    print(f"  {member.spec.family:12s} alone: {solo:.3f}")
