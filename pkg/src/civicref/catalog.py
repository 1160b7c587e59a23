"""Policy lattice: the 27 transit policy bundles and their model-based metrics.

Each policy fixes three financing levers (sales tax, transit fare, driver fee)
at one of three levels. Bundled tables carry the performance metrics used as
benchmarks: travel times, trip costs, transit share, total/min utility, Gini.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

CITIES = ("chicago", "houston")
LEVERS = ("tax", "fare", "fee")
LEVELS = ("low", "medium", "high")

# Lever level values shared by both cities: tax in %, fare and fee in $/trip.
LEVER_VALUES: dict[str, tuple[float, float, float]] = {
    "tax": (0.5, 1.0, 1.5),
    "fare": (0.75, 1.25, 1.75),
    "fee": (0.0, 0.5, 1.0),
}

STATUS_QUO_ID = 12

METRIC_COLUMNS = (
    "drive_time",
    "bus_time",
    "drive_cost",
    "bus_cost",
    "transit_pct",
    "u_total",
    "u_min",
    "gini",
)

_HEADER = (
    "id,tax_rate,transit_fare,driver_fee,drive_time,bus_time,"
    "drive_cost,bus_cost,transit_pct,u_total,u_min,gini"
)


class CatalogError(ValueError):
    """Raised when a policy table fails validation."""


@dataclass(frozen=True)
class Policy:
    id: int
    tax: float
    fare: float
    fee: float

    def lever_value(self, lever: str) -> float:
        if lever == "tax":
            return self.tax
        if lever == "fare":
            return self.fare
        if lever == "fee":
            return self.fee
        raise KeyError(f"unknown lever: {lever!r}")


@dataclass(frozen=True)
class PolicyMetrics:
    drive_time: float
    bus_time: float
    drive_cost: float
    bus_cost: float
    transit_pct: float
    u_total: float
    u_min: float
    gini: float

    def __post_init__(self):
        if not 0.0 <= self.transit_pct <= 100.0:
            raise CatalogError(f"transit_pct out of range: {self.transit_pct}")
        if not 0.0 <= self.gini <= 1.0:
            raise CatalogError(f"gini out of range: {self.gini}")
        for name in ("drive_time", "bus_time", "drive_cost", "bus_cost"):
            if getattr(self, name) < 0:
                raise CatalogError(f"{name} negative: {getattr(self, name)}")

    def metric(self, name: str) -> float:
        if name not in METRIC_COLUMNS:
            raise CatalogError(f"unknown metric name: {name!r}")
        return getattr(self, name)


@dataclass(frozen=True)
class Catalog:
    city: str
    entries: dict[int, tuple[Policy, PolicyMetrics]]
    status_quo_id: int = STATUS_QUO_ID

    def policy(self, policy_id: int) -> Policy:
        return self.entries[policy_id][0]

    def metrics(self, policy_id: int) -> PolicyMetrics:
        return self.entries[policy_id][1]

    def ids(self) -> list[int]:
        return sorted(self.entries)


def policy_id(tax_level: str, fare_level: str, fee_level: str) -> int:
    """Encode a (tax, fare, fee) level triple into the table row id."""
    idx = [LEVELS.index(lvl) for lvl in (tax_level, fare_level, fee_level)]
    return 9 * idx[0] + 3 * idx[1] + idx[2]


def policy_levels(pid: int) -> tuple[str, str, str]:
    """Inverse of :func:`policy_id`."""
    if not 0 <= pid <= 26:
        raise CatalogError(f"policy id out of range: {pid}")
    return LEVELS[pid // 9], LEVELS[(pid // 3) % 3], LEVELS[pid % 3]


def policy_values(pid: int) -> tuple[float, float, float]:
    """Numeric (tax, fare, fee) values of a policy id."""
    tax_l, fare_l, fee_l = policy_levels(pid)
    return (
        LEVER_VALUES["tax"][LEVELS.index(tax_l)],
        LEVER_VALUES["fare"][LEVELS.index(fare_l)],
        LEVER_VALUES["fee"][LEVELS.index(fee_l)],
    )


def level_of_value(lever: str, value: float) -> str:
    """Map a lever's numeric value back to its level name."""
    values = LEVER_VALUES[lever]
    for lvl, v in zip(LEVELS, values):
        if abs(v - value) < 1e-9:
            return lvl
    raise CatalogError(f"value {value} is not a level of lever {lever!r}")


def bundled_table_path(city: str) -> Path:
    if city not in CITIES:
        raise CatalogError(f"unknown city: {city!r}")
    return Path(str(resources.files("civicref").joinpath(f"data/{city}_policies.csv")))


def load_catalog(city: str, source: str | Path | None = None) -> Catalog:
    """Load and validate a 27-row policy table.

    With ``source=None`` the bundled table for the city is used. Any file with
    the same 12-column schema is accepted.
    """
    if city not in CITIES:
        raise CatalogError(f"unknown city: {city!r}")
    path = Path(source) if source is not None else bundled_table_path(city)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected_cols = _HEADER.split(",")
        if reader.fieldnames != expected_cols:
            raise CatalogError(
                f"bad header in {path}: expected {expected_cols}, got {reader.fieldnames}"
            )
        entries: dict[int, tuple[Policy, PolicyMetrics]] = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                pid = int(row["id"])
                policy = Policy(
                    id=pid,
                    tax=float(row["tax_rate"]),
                    fare=float(row["transit_fare"]),
                    fee=float(row["driver_fee"]),
                )
                metrics = PolicyMetrics(
                    **{name: float(row[name]) for name in METRIC_COLUMNS}
                )
            except (TypeError, ValueError, KeyError) as exc:
                raise CatalogError(f"row {lineno} of {path}: {exc}") from exc
            if pid in entries:
                raise CatalogError(f"row {lineno} of {path}: duplicate id {pid}")
            expected = policy_values(pid)
            got = (policy.tax, policy.fare, policy.fee)
            if any(abs(a - b) > 1e-9 for a, b in zip(expected, got)):
                raise CatalogError(
                    f"row {lineno} of {path}: id {pid} lever values {got} "
                    f"break the lattice ordering (expected {expected})"
                )
            entries[pid] = (policy, metrics)
    if len(entries) != 27:
        raise CatalogError(f"expected 27 policies in {path}, got {len(entries)}")
    return Catalog(city=city, entries=entries)


def utilitarian_optimum(catalog: Catalog) -> int:
    """Policy id maximizing total utility; ties broken by lowest id."""
    return max(catalog.ids(), key=lambda k: (catalog.metrics(k).u_total, -k))


def egalitarian_optimum(catalog: Catalog) -> int:
    """Policy id maximizing the minimum utility; ties broken by lowest id."""
    return max(catalog.ids(), key=lambda k: (catalog.metrics(k).u_min, -k))


def pareto_frontier(
    catalog: Catalog,
    x_metric: str,
    y_metric: str,
    y_direction: str = "maximize",
) -> list[int]:
    """Non-dominated policy ids in the (x, y) metric plane, x maximized.

    ``y_direction`` selects whether higher or lower y is better. Output is
    sorted by x ascending. Equal points keep the lower id only.
    """
    if y_direction not in ("maximize", "minimize"):
        raise CatalogError(f"bad y_direction: {y_direction!r}")
    sign = 1.0 if y_direction == "maximize" else -1.0
    points = [
        (catalog.metrics(k).metric(x_metric), sign * catalog.metrics(k).metric(y_metric), k)
        for k in catalog.ids()
    ]
    frontier = []
    for x, y, k in points:
        dominated = False
        for x2, y2, k2 in points:
            if k2 == k:
                continue
            if x2 >= x and y2 >= y and (x2 > x or y2 > y):
                dominated = True
                break
            if x2 == x and y2 == y and k2 < k:
                dominated = True
                break
        if not dominated:
            frontier.append((x, k))
    frontier.sort()
    return [k for _, k in frontier]
