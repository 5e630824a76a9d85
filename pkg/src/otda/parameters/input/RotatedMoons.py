#
# Two moons with a rotated target domain
#

def get_parameter_values():
    """
    Two moons of 150 points each, the target rotated by 30 degrees about the
    centre of the construction.
    """

    return {
        "scenario": {
            "generator": "moons",
            "samples_per_class": [150, 150],
            "test_samples_per_class": [150, 150],
            "noise": 0.1,
            "rotation": 30.0,
        },
        "method": ["source_only", "deepjdot", "mixunbot"],
        "loss_weights": {"eta1": 0.1, "eta2": 0.1, "eta3": 1.0},
        "solver": [{"kind": "exact"}, {"kind": "unbalanced", "epsilon": 0.1, "tau": 1.0}],
        "batch": {"m": 32, "num_draws": 1, "stratified": True},
        "train": {"epochs": 20, "pretrain_epochs": 5, "lr": 2e-3},
        "seeds": [0, 1, 2],
        "sweep": {"parameter": "alpha", "values": [0.1, 0.2, 0.5, 1.0]},
    }
