import otda as m


def test_version():
    assert m.__version__


def test_logger_is_a_pybamm_child():
    assert m.logger.name == "pybamm.logger.otda" or m.logger.parent is m.pybamm.logger
    m.set_logging_level("DEBUG")
    assert m.logger.level == 10
    m.set_logging_level("WARNING")
    assert m.logger.level == 30


def test_error_hierarchy():
    for error in (m.DimensionError, m.ValidationError, m.SolverError, m.ConfigError, m.CheckFailure):
        assert issubclass(error, m.OTDAError)
    assert issubclass(m.ValidationError, ValueError)
    assert issubclass(m.SolverError, RuntimeError)


def test_error_context():
    error = m.SolverError("non-finite potentials", draw=3)
    assert str(error) == "draw 3: non-finite potentials"
    assert error.draw == 3
    config_error = m.ConfigError("solver.tau", "must be positive")
    assert config_error.path == "solver.tau"
    assert "solver.tau" in str(config_error)
