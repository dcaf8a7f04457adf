"""Longitudinal platoon control toolkit: vehicle models, look-ahead
topologies, a consensus baseline, from-scratch DDPG training with an
integral-action variant, frequency-domain stability tooling, and the
experiment harness behind the `platoonrl` CLI.

Submodules import lazily so that `import platoonrl` stays cheap and the CLI
can configure the process before numerical libraries load.
"""

__version__ = "0.1.0"

_EXPORTS = {
    "Externals": "dynamics",
    "LinearState": "dynamics",
    "NOMINAL_PARAMS": "dynamics",
    "VehicleParams": "dynamics",
    "VehicleState": "dynamics",
    "Topology": "topology",
    "make_topology": "topology",
    "Metrics": "experiments",
    "RunRecord": "experiments",
    "ScenarioConfig": "experiments",
    "run_scenario": "experiments",
    "sweep": "experiments",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    if name in _EXPORTS:
        import importlib

        module = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
