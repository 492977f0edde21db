"""fusevote: feature-fusion and classifier-voting ensembles over
file-based feature matrices.

The library evaluates deep-feature sets with hyperparameter-tuned
classical classifiers, selects the strongest sets under a
family-diversity rule, fuses them by concatenation, and combines the
best classifiers by majority vote. Classifiers, transforms, splitting,
tuning and preprocessing are all first-party numpy implementations.
"""

__version__ = "0.1.0"
