use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, Months, Utc};
use serde::{Deserialize, Serialize};

use crate::geo::TimeWindow;

/// How values are aggregated over a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Activity inside the window (daily new cases, document counts).
    Instant,
    /// Running total as of the window's last day.
    Cumulative,
    /// Mean daily value over the trailing `k` days ending on the window's last day.
    RollingAverage(u32),
}

impl FromStr for AggregateMode {
    type Err = String;

    /// `instant`, `cumulative`, `rolling` (7 days) or `rolling:<k>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "instant" => Ok(AggregateMode::Instant),
            "cumulative" => Ok(AggregateMode::Cumulative),
            "rolling" => Ok(AggregateMode::RollingAverage(7)),
            other => match other.strip_prefix("rolling:") {
                Some(k) => match k.parse::<u32>() {
                    Ok(k) if k > 0 => Ok(AggregateMode::RollingAverage(k)),
                    _ => Err(format!("bad rolling window {k:?}")),
                },
                None => Err(format!("unknown mode {s:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSize {
    Hour,
    Day,
    Week,
    Month,
    Custom(Duration),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSize {
    Day,
    Week,
    Month,
}

fn add_months(t: DateTime<Utc>, n: u32) -> DateTime<Utc> {
    t.checked_add_months(Months::new(n)).unwrap_or(DateTime::<Utc>::MAX_UTC)
}

impl WindowSize {
    pub fn end_from(self, start: DateTime<Utc>) -> DateTime<Utc> {
        match self {
            WindowSize::Hour => start + Duration::hours(1),
            WindowSize::Day => start + Duration::days(1),
            WindowSize::Week => start + Duration::days(7),
            WindowSize::Month => add_months(start, 1),
            WindowSize::Custom(d) => start + d,
        }
    }
}

impl StepSize {
    /// Start of frame `i`, measured from `origin` so month steps never drift.
    pub fn nth(self, origin: DateTime<Utc>, i: u32) -> DateTime<Utc> {
        match self {
            StepSize::Day => origin + Duration::days(i as i64),
            StepSize::Week => origin + Duration::days(7 * i as i64),
            StepSize::Month => add_months(origin, i),
        }
    }
}

impl FromStr for WindowSize {
    type Err = String;

    /// `hour|day|week|month`, or a custom length such as `3d` or `36h`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "hour" => return Ok(WindowSize::Hour),
            "day" => return Ok(WindowSize::Day),
            "week" => return Ok(WindowSize::Week),
            "month" => return Ok(WindowSize::Month),
            _ => {}
        }
        let (num, unit) = s.split_at(s.len().saturating_sub(1));
        let n: i64 = num.parse().map_err(|_| format!("bad window {s:?}"))?;
        if n <= 0 {
            return Err(format!("window must be positive, got {s:?}"));
        }
        match unit {
            "d" => Ok(WindowSize::Custom(Duration::days(n))),
            "h" => Ok(WindowSize::Custom(Duration::hours(n))),
            _ => Err(format!("bad window unit in {s:?}")),
        }
    }
}

impl FromStr for StepSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "day" => Ok(StepSize::Day),
            "week" => Ok(StepSize::Week),
            "month" => Ok(StepSize::Month),
            other => Err(format!("unknown step {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSpecError(pub String);

impl fmt::Display for FrameSpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for FrameSpecError {}

/// An animation: windows of `window` length whose starts advance by `step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    start: DateTime<Utc>,
    end: DateTime<Utc>,
    pub window: WindowSize,
    pub step: StepSize,
    pub mode: AggregateMode,
}

impl FrameSpec {
    pub fn new(
        start: DateTime<Utc>,
        end: DateTime<Utc>,
        window: WindowSize,
        step: StepSize,
        mode: AggregateMode,
    ) -> Result<Self, FrameSpecError> {
        if start >= end {
            return Err(FrameSpecError(format!("start {start} is not before end {end}")));
        }
        if let WindowSize::Custom(d) = window {
            if d <= Duration::zero() {
                return Err(FrameSpecError("custom window must be positive".into()));
            }
        }
        if mode == AggregateMode::RollingAverage(0) {
            return Err(FrameSpecError("rolling average needs at least one day".into()));
        }
        Ok(FrameSpec {
            start,
            end,
            window,
            step,
            mode,
        })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.end
    }

    /// Frame windows in order. Each is clipped to `end`; cumulative mode
    /// widens every frame back to `start`.
    pub fn windows(&self) -> Vec<TimeWindow> {
        let mut out = Vec::new();
        for i in 0.. {
            let frame_start = self.step.nth(self.start, i);
            if frame_start >= self.end {
                break;
            }
            let frame_end = self.window.end_from(frame_start).min(self.end);
            let from = match self.mode {
                AggregateMode::Cumulative => self.start,
                _ => frame_start,
            };
            out.push(TimeWindow::new(from, frame_end).expect("frame_start < frame_end"));
        }
        out
    }
}
