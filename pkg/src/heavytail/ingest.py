"""Closing-price CSV -> percent log returns -> dependence check -> Hill curve."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass
from typing import Sequence, TextIO, Union

import numpy as np
from scipy import special

from .estimators import default_hill_k, hill_estimate, sample_mean


class PriceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=np.float64)
        if len(self.dates) != closes.size:
            raise PriceFormatError("dates and closes differ in length")
        if closes.size < 2:
            raise PriceFormatError("fewer than 2 rows")
        if np.any(~(closes > 0)):
            raise PriceFormatError("closes must be positive")
        closes.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "closes", closes)

    def __len__(self):
        return len(self.dates)


def parse_prices(text: Union[str, TextIO]) -> PriceSeries:
    """Parse a ``date,close`` CSV. Rows are numbered from 1 after the header."""
    fh = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["date", "close"]:
        raise PriceFormatError(f"expected header 'date,close', got {header!r}")
    dates, closes = [], []
    prev = None
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise PriceFormatError(f"row {row_no}: expected 2 fields, got {len(row)}")
        raw_date, raw_close = row[0].strip(), row[1].strip()
        try:
            day = dt.date.fromisoformat(raw_date)
        except ValueError:
            raise PriceFormatError(f"row {row_no}: bad date {raw_date!r}") from None
        try:
            close = float(raw_close)
        except ValueError:
            raise PriceFormatError(f"row {row_no}: bad close {raw_close!r}") from None
        if not (math.isfinite(close) and close > 0):
            raise PriceFormatError(f"row {row_no}: close must be positive, got {raw_close}")
        if prev is not None:
            if day == prev:
                raise PriceFormatError(f"row {row_no}: duplicate date {raw_date}")
            if day < prev:
                raise PriceFormatError(f"row {row_no}: date {raw_date} is out of order")
        prev = day
        dates.append(raw_date)
        closes.append(close)
    if len(closes) < 2:
        raise PriceFormatError("fewer than 2 rows")
    return PriceSeries(tuple(dates), np.array(closes))


def format_prices(prices: PriceSeries) -> str:
    lines = ["date,close"]
    lines += [f"{d},{float(c)!r}" for d, c in zip(prices.dates, prices.closes)]
    return "\n".join(lines) + "\n"


def log_returns(prices: PriceSeries) -> np.ndarray:
    """``100 * log(Y_k / Y_{k-1})`` for consecutive rows."""
    y = prices.closes
    return 100.0 * np.log(y[1:] / y[:-1])


def ljung_box(xs, max_lag: int = 10) -> tuple[float, float]:
    """Ljung-Box Q over lags ``1..max_lag`` and its chi-square upper-tail p-value."""
    x = np.asarray(xs, dtype=np.float64)
    n = x.size
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if max_lag >= n - 1:
        raise ValueError(f"max_lag must be < n - 1 = {n - 1}, got {max_lag}")
    d = x - x.mean()
    denom = float(np.dot(d, d))
    if denom == 0:
        raise ValueError("zero variance: autocorrelation undefined")
    q = 0.0
    for k in range(1, max_lag + 1):
        rho = float(np.dot(d[:-k], d[k:])) / denom
        q += rho * rho / (n - k)
    q *= n * (n + 2)
    return q, float(special.gammaincc(max_lag / 2, q / 2))


def analyze(prices: PriceSeries, k_grid: Sequence[int] = (), max_lag: int = 10) -> dict:
    xs = log_returns(prices)
    n_pos = int(np.count_nonzero(xs))
    if not k_grid:
        k_grid = [k for k in (default_hill_k(xs.size),) if 1 <= k < n_pos]
    hill = [{"k": int(k), "index": hill_estimate(xs, k).index} for k in k_grid]
    report = {"n": int(xs.size), "mean_return": sample_mean(xs), "hill": hill}
    if max_lag < xs.size - 1 and np.ptp(xs) > 0:
        stat, p = ljung_box(xs, max_lag)
        report["ljung_box"] = {"lags": max_lag, "statistic": stat, "p_value": p}
    else:
        report["ljung_box"] = None
    return report
