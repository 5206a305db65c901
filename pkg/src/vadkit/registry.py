"""Plugin registry wiring datasets, backbones, methods, trainers, metrics and
scenarios into runs.

Components are registered once at import time (or by third-party code before a
run starts) and the registry is read-only afterwards, so concurrent lookups
need no locking.  Third-party detectors, datasets, etc. plug in through
:func:`Registry.register` without touching library code.
"""

from .errors import DuplicateRegistration, UnknownComponent

KINDS = ("dataset", "backbone", "method", "trainer", "metric", "scenario")


class Registry:
    """Maps (kind, name) pairs to component factories."""

    def __init__(self):
        self._entries = {}

    def register(self, kind: str, name: str, factory):
        """Register ``factory`` under ``(kind, name)``.

        Raises:
            ValueError: unknown kind or empty name.
            DuplicateRegistration: the pair already exists.
        """
        if kind not in KINDS:
            raise ValueError(f"unknown component kind {kind!r}; expected one of {KINDS}")
        if not name:
            raise ValueError("component name must be non-empty")
        key = (kind, name)
        if key in self._entries:
            raise DuplicateRegistration(f"{kind} {name!r} is already registered")
        self._entries[key] = factory
        return factory

    def resolve(self, kind: str, name: str):
        """Return the factory for ``(kind, name)``.

        Raises:
            UnknownComponent: the pair was never registered.
        """
        try:
            return self._entries[(kind, name)]
        except KeyError:
            available = self.list(kind)
            raise UnknownComponent(
                f"{kind} {name!r} is not registered; available: {available}"
            ) from None

    def contains(self, kind: str, name: str) -> bool:
        return (kind, name) in self._entries

    def list(self, kind: str) -> list:
        """Names registered under ``kind``, lexicographically sorted."""
        if kind not in KINDS:
            raise ValueError(f"unknown component kind {kind!r}; expected one of {KINDS}")
        return sorted(n for k, n in self._entries if k == kind)


_default = None


def default_registry() -> Registry:
    """The process-wide registry, with all built-ins registered."""
    global _default
    if _default is None:
        _default = Registry()
        _register_builtins(_default)
    return _default


def _register_builtins(reg: Registry):
    # Imported lazily so `registry` stays importable from every module without
    # cycles.
    from . import datasets, scenarios
    from .backbones import make_toy_extractor
    from .methods import padim, patchcore, stfpm
    from . import metrics
    from . import trainers

    reg.register("dataset", "synthetic", datasets.synthetic_dataset)
    reg.register("dataset", "mvtec_layout", datasets.mvtec_dataset)

    reg.register("backbone", "toy", make_toy_extractor)

    reg.register("method", "padim", padim.PaDiM)
    reg.register("method", "patchcore", patchcore.PatchCore)
    reg.register("method", "stfpm", stfpm.STFPM)

    reg.register("trainer", "default", trainers.fit)

    for metric_name in metrics.METRIC_NAMES:
        reg.register("metric", metric_name, metrics.metric_fn(metric_name))

    reg.register("scenario", "noisy", scenarios.NoisyScenario)
    reg.register("scenario", "noisy_sweep", scenarios.NoisySweepScenario)
    reg.register("scenario", "few_shot", scenarios.FewShotScenario)
    reg.register("scenario", "continual", scenarios.ContinualScenario)
