"""Per-task CSV schemas.

Each task is stored as one CSV: a time column, the feature columns in the
listed order, and one target column.  Raw UCI downloads are converted into
this layout by :mod:`ltcse.data.raw`.
"""
from __future__ import annotations

from dataclasses import dataclass

CLASSIFICATION = "classification"
REGRESSION = "regression"

_OZONE_FEATURES = (
    tuple(f"WSR{i}" for i in range(24)) + ("WSR_PK", "WSR_AV")
    + tuple(f"T{i}" for i in range(24)) + ("T_PK", "T_AV")
    + ("T85", "RH85", "U85", "V85", "HT85",
       "T70", "RH70", "U70", "V70", "HT70",
       "T50", "RH50", "U50", "V50", "HT50",
       "KI", "TT", "SLP", "SLP_", "Precp")
)


@dataclass(frozen=True)
class TaskSpec:
    name: str
    time_column: str
    features: tuple[str, ...]
    target: str
    kind: str
    n_classes: int = 0
    stride: int = 32
    period: str = "1min"
    time_format: str = "datetime"  # or "index" for tasks without wall-clock stamps

    @property
    def input_size(self) -> int:
        return len(self.features)

    @property
    def output_size(self) -> int:
        return self.n_classes if self.kind == CLASSIFICATION else 1

    @property
    def columns(self) -> tuple[str, ...]:
        return (self.time_column,) + self.features + (self.target,)

    @property
    def metric(self) -> str:
        return "accuracy" if self.kind == CLASSIFICATION else "mse"


TASKS: dict[str, TaskSpec] = {
    "occupancy": TaskSpec(
        "occupancy", "date", ("Temperature", "Humidity", "Light", "CO2", "HumidityRatio"),
        "Occupancy", CLASSIFICATION, n_classes=2, period="1min"),
    "har": TaskSpec(
        "har", "t", tuple(f"f{i:03d}" for i in range(561)), "activity", CLASSIFICATION,
        n_classes=6, period="sample", time_format="index"),
    # time-of-day, weekend and holiday flags plus weather readings
    "traffic": TaskSpec(
        "traffic", "date_time",
        ("temp", "rain_1h", "snow_1h", "clouds_all", "hour", "is_weekend", "is_holiday"),
        "traffic_volume", REGRESSION, period="1h"),
    "power": TaskSpec(
        "power", "datetime",
        ("Global_reactive_power", "Voltage", "Global_intensity",
         "Sub_metering_1", "Sub_metering_2", "Sub_metering_3"),
        "Global_active_power", REGRESSION, period="1h"),
    # 8-hour peak variant; overlapping 32-day sequences
    "ozone": TaskSpec(
        "ozone", "date", _OZONE_FEATURES, "ozone_day", CLASSIFICATION,
        n_classes=2, stride=1, period="1D"),
}


def get_task(name: str) -> TaskSpec:
    try:
        return TASKS[name]
    except KeyError:
        raise KeyError(f"unknown task {name!r}; expected one of {sorted(TASKS)}") from None
