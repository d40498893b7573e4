"""INS dead reckoning, neural displacement correction and GNSS-outage metrics."""

from ._core import (
    DisplacementEstimator,
    DriftkillError,
    OrientationRateEstimator,
    OutageSequence,
    ScenarioReport,
    ScenarioSpec,
    SecondWindow,
    TrainConfig,
    aeps,
    build_windows,
    cae,
    crse,
    dead_reckon,
    evaluate,
    extract_outage_sequences,
    gen_records,
    heading_delta,
    improvement_pct,
    load_records,
    paper_displacement_config,
    paper_orientation_config,
    random_drives,
    summarize,
    train_displacement,
    train_orientation,
    vincenty_inverse,
    write_records,
)

# Column order of record arrays.
RECORD_COLUMNS = ("t", "accel_long", "yaw_rate", "heading", "lat", "lon")

__all__ = [name for name in dir() if not name.startswith("_")]
