#
# Partial domain adaptation: the target lacks one source class
#

def get_parameter_values():
    """
    Three source blobs of 100 points; the target is shifted and drops the
    third class. A small marginal relaxation lets the unbalanced plan leave
    the outlier class untransported, and a larger transfer weight is used.
    """

    return {
        "scenario": {
            "generator": "blobs",
            "samples_per_class": [100, 100, 100],
            "target_samples_per_class": [100, 100, 100],
            "test_samples_per_class": [100, 100, 100],
            "dropped_classes": [2],
            "cluster_std": 0.8,
            "shift": [1.0, 0.5],
        },
        "method": ["source_only", "jumbot", "mixunbot"],
        "loss_weights": {"eta1": 0.1, "eta2": 0.1, "eta3": 2.0},
        "solver": {"kind": "unbalanced", "epsilon": 0.1, "tau": 0.1},
        "mixup": {"alpha": 0.2},
        "batch": {"m": 24, "num_draws": 1, "stratified": True},
        "train": {"epochs": 20, "pretrain_epochs": 5, "lr": 2e-3},
        "seeds": [0, 1, 2],
    }
