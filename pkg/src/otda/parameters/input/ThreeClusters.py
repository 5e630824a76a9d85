#
# Negative transfer on three tight clusters under label shift
#

def get_parameter_values():
    """
    Three balanced source clusters of four points against a target holding ten
    points of the first class and two of the second. Minibatch plans of exact
    and unbalanced transport are compared at batch sizes 2, 4 and the full 12.
    """

    return {
        "scenario": {"generator": "clusters"},
        "method": ["deepjdot", "jumbot"],
        "loss_weights": {"eta1": 1.0, "eta2": 0.0, "eta3": 1.0},
        # epsilon is relative to max(C) of every minibatch
        "solver": [
            {"kind": "exact"},
            {"kind": "unbalanced", "tau": 1.0, "epsilon": 0.1, "scale_epsilon": True},
        ],
        "batch": {"m": [2, 4, 12], "num_draws": 200, "stratified": False},
        "train": {"epochs": 5, "pretrain_epochs": 2, "lr": 1e-3},
        "seeds": [0, 1, 2, 3, 4],
    }
