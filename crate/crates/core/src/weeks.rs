//! Calendar arithmetic shared by every module.
//!
//! Days are counted from 1970-01-01 (day 0). Weeks are ISO weeks counted
//! from 1970-W01, whose Monday is 1969-12-29 (day -3). Week `w` therefore
//! starts on day `7w - 3`, and every day belongs to exactly one week.

use chrono::NaiveDate;

/// Week index counted from 1970-W01.
pub type Week = i64;

/// Day index counted from 1970-01-01.
pub type Day = i64;

const MONDAY_OF_WEEK_ZERO: Day = -3;

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}

/// Day index of the Monday that opens week `w`.
pub fn week_monday(w: Week) -> Day {
    7 * w + MONDAY_OF_WEEK_ZERO
}

/// Week containing day `d`.
pub fn week_of_day(d: Day) -> Week {
    (d - MONDAY_OF_WEEK_ZERO).div_euclid(7)
}

pub fn date_to_day(date: NaiveDate) -> Day {
    (date - epoch()).num_days()
}

pub fn day_to_date(d: Day) -> NaiveDate {
    epoch() + chrono::Duration::days(d)
}

/// Parses an ISO `YYYY-MM-DD` date into a day index.
pub fn parse_date(s: &str) -> Option<Day> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .ok()
        .map(date_to_day)
}

pub fn format_day(d: Day) -> String {
    day_to_date(d).format("%Y-%m-%d").to_string()
}
