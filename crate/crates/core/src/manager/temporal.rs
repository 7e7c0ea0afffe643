//! Calendar periods relative to "today". Weeks are ISO weeks (Monday to
//! Sunday); months and years are calendar months and years.

use chrono::{Datelike, Days, Months, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Option<Self> {
        (start <= end).then_some(DateRange { start, end })
    }

    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn month_of(d: NaiveDate) -> Self {
        let start = d.with_day(1).expect("day 1 exists");
        let end = start + Months::new(1) - Days::new(1);
        DateRange { start, end }
    }

    pub fn year_of(d: NaiveDate) -> Self {
        DateRange {
            start: NaiveDate::from_ymd_opt(d.year(), 1, 1).expect("jan 1"),
            end: NaiveDate::from_ymd_opt(d.year(), 12, 31).expect("dec 31"),
        }
    }

    /// True when the range is exactly one calendar month.
    pub fn is_calendar_month(&self) -> bool {
        DateRange::month_of(self.start) == *self
    }

    /// The same range shifted back one calendar year (Feb 29 maps to Feb 28).
    pub fn previous_year(&self) -> Self {
        DateRange {
            start: minus_one_year(self.start),
            end: minus_one_year(self.end),
        }
    }

    /// "August 2024 (2024-08-01 ~ 2024-08-31)" for whole months, otherwise
    /// "2024-08-05 ~ 2024-08-11".
    pub fn label(&self) -> String {
        if self.is_calendar_month() {
            format!("{} ({} ~ {})", self.start.format("%B %Y"), self.start, self.end)
        } else {
            format!("{} ~ {}", self.start, self.end)
        }
    }
}

pub fn minus_one_year(d: NaiveDate) -> NaiveDate {
    d.checked_sub_months(Months::new(12)).expect("date in range")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalContext {
    pub today: NaiveDate,
    pub this_week: DateRange,
    pub last_week: DateRange,
    pub this_month: DateRange,
    pub last_month: DateRange,
    pub this_year: DateRange,
    pub last_year: DateRange,
}

pub fn build_temporal_context(today: NaiveDate) -> TemporalContext {
    let monday = today - Days::new(u64::from(today.weekday().num_days_from_monday()));
    let this_week = DateRange {
        start: monday,
        end: monday + Days::new(6),
    };
    let last_week = DateRange {
        start: monday - Days::new(7),
        end: monday - Days::new(1),
    };
    let this_month = DateRange::month_of(today);
    let last_month = DateRange::month_of(this_month.start - Days::new(1));
    let this_year = DateRange::year_of(today);
    let last_year = DateRange::year_of(this_year.start - Days::new(1));
    TemporalContext {
        today,
        this_week,
        last_week,
        this_month,
        last_month,
        this_year,
        last_year,
    }
}

impl TemporalContext {
    pub fn weekday(&self) -> Weekday {
        self.today.weekday()
    }

    /// The trailing `n` complete calendar months, oldest first, ending with
    /// last month.
    pub fn trailing_months(&self, n: usize) -> Vec<DateRange> {
        let mut months = Vec::with_capacity(n);
        let mut cur = self.last_month;
        for _ in 0..n {
            months.push(cur);
            cur = DateRange::month_of(cur.start - Days::new(1));
        }
        months.reverse();
        months
    }
}
