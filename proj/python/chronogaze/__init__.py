from ._chronogaze import (
    ChronogazeError,
    cli,
    duration_label,
    extract,
    feature_names,
    generate,
    ipa,
    level2_detail,
    ppot_label,
    relative_estimation_error,
    search,
)

__all__ = [
    "ChronogazeError",
    "cli",
    "duration_label",
    "extract",
    "feature_names",
    "generate",
    "ipa",
    "level2_detail",
    "ppot_label",
    "relative_estimation_error",
    "search",
]
