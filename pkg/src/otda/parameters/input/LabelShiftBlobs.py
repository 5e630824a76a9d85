#
# Label-shifted, rotated Gaussian blobs: ablation of MixUp and the label loss
#

def get_parameter_values():
    """
    Balanced source of three blobs with 100 points each on a circle of radius
    2; the target is rotated by 30 degrees about their centroid with class
    proportions 70/20/10, which moves every target blob close to a source
    decision boundary. The method grid covers the source-only baseline, the
    four switch combinations of MixUp and label loss on exact transport, and
    their unbalanced counterparts.
    """

    return {
        "scenario": {
            "generator": "blobs",
            "samples_per_class": [100, 100, 100],
            "target_samples_per_class": [70, 20, 10],
            "test_samples_per_class": [70, 20, 10],
            "centers": [[0.0, 2.0], [-1.7320508075688772, -1.0], [1.7320508075688772, -1.0]],
            "cluster_std": 0.8,
            "rotation": 30.0,
        },
        "method": [
            "source_only",
            "deepjdot",
            "deepjdot(sce)",
            "mixot(ce)",
            "mixot",
            "jumbot",
            "mixunbot",
        ],
        "loss_weights": {"eta1": 0.1, "eta2": 0.1, "eta3": 1.0, "eta4": 0.01, "eta5": 1.0},
        "solver": [
            {"kind": "exact"},
            {"kind": "unbalanced", "epsilon": 0.1, "tau": 1.0, "max_iterations": 1000},
        ],
        "mixup": {"alpha": 0.2},
        "batch": {"m": 24, "num_draws": 1, "stratified": True},
        "train": {"epochs": 30, "pretrain_epochs": 5, "lr": 2e-3, "optimizer": "adam"},
        "seeds": [0, 1, 2, 3, 4],
    }
