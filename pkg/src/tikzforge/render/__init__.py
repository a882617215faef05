from .harness import (
    RenderConfig,
    RenderHarness,
    RenderResult,
    RenderStatus,
    is_blank,
    resolve_toolchain,
    wrap_standalone,
)

__all__ = [
    "RenderConfig",
    "RenderHarness",
    "RenderResult",
    "RenderStatus",
    "is_blank",
    "resolve_toolchain",
    "wrap_standalone",
]
