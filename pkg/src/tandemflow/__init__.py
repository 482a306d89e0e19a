"""Analysis of tandem queueing networks with neural departure-process surrogates.

The package covers the full workflow: generating phase-type workloads,
labeling them by simulation, training the three surrogate networks
(departure descriptors and steady-state queue-length distributions),
chaining the networks to analyze multi-station tandem systems, and
comparing against a classical two-moment decomposition baseline.
"""

__version__ = "0.1.0"
