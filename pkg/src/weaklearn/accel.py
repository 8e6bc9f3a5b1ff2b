"""Backend selection for the hot SGD loop: compiled extension if available,
pure numpy otherwise."""

try:
    from . import _accel as _backend  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on the build environment
    from . import _accel_np as _backend

BACKEND = _backend.BACKEND
median_sgd_run = _backend.median_sgd_run
