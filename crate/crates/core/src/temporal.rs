//! Month-resolution time points, signed month durations and closed intervals.
//!
//! Every comparison in the crate goes through [`TimePoint::month_index`], which
//! maps a calendar month onto a single integer axis (`year * 12 + month - 1`).
//! Year-granular points behave as the whole year when used as a window.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Astronomical year bounds accepted by [`TimePoint`].
pub const MIN_YEAR: i32 = -9999;
pub const MAX_YEAR: i32 = 9999;

const MONTH_NAMES: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("month {0} is outside 1..=12")]
    InvalidMonth(u32),
    #[error("year {0} is outside the supported range")]
    YearOutOfRange(i64),
    #[error("cannot parse time expression: unexpected token {token:?}")]
    Parse { token: String },
    #[error("interval ends ({end}) before it starts ({start})")]
    Inverted { start: String, end: String },
    #[error("ongoing interval needs a horizon but none is configured")]
    NoHorizon,
    #[error("duration magnitude must be positive, got {0} months")]
    NonPositiveDuration(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Month,
    Year,
}

/// A calendar month, or a whole year when `granularity` is [`Granularity::Year`]
/// (in which case `month` is 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimePoint {
    year: i32,
    month: u8,
    granularity: Granularity,
}

impl TimePoint {
    pub fn month(year: i32, month: u32) -> Result<Self, TimeError> {
        if !(1..=12).contains(&month) {
            return Err(TimeError::InvalidMonth(month));
        }
        check_year(year as i64)?;
        Ok(Self {
            year,
            month: month as u8,
            granularity: Granularity::Month,
        })
    }

    pub fn year(year: i32) -> Result<Self, TimeError> {
        check_year(year as i64)?;
        Ok(Self {
            year,
            month: 1,
            granularity: Granularity::Year,
        })
    }

    /// Inverse of [`month_index`](Self::month_index).
    pub fn from_month_index(index: i64, granularity: Granularity) -> Result<Self, TimeError> {
        let year = index.div_euclid(12);
        check_year(year)?;
        let month = index.rem_euclid(12) as u8 + 1;
        Ok(Self {
            year: year as i32,
            month: if granularity == Granularity::Year { 1 } else { month },
            granularity,
        })
    }

    pub fn year_value(&self) -> i32 {
        self.year
    }

    pub fn month_value(&self) -> u32 {
        self.month as u32
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn month_index(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    /// First month covered by this point.
    pub fn first_month(&self) -> i64 {
        self.month_index()
    }

    /// Last month covered by this point: December for year-granular points.
    pub fn last_month(&self) -> i64 {
        match self.granularity {
            Granularity::Month => self.month_index(),
            Granularity::Year => self.year as i64 * 12 + 11,
        }
    }

    pub fn span(&self) -> MonthSpan {
        MonthSpan::new(self.first_month(), self.last_month())
    }

    /// Moves the point by `d`. Year-granular points stay year-granular under
    /// whole-year durations; any other duration yields the month-granular
    /// point at `month_index + d`.
    pub fn add_duration(&self, d: SignedDuration) -> Result<Self, TimeError> {
        let granularity = match self.granularity {
            Granularity::Year if d.months() % 12 == 0 => Granularity::Year,
            _ => Granularity::Month,
        };
        Self::from_month_index(self.month_index() + d.months() as i64, granularity)
    }

    /// Same calendar month, month granularity.
    pub fn as_month(&self) -> Self {
        Self {
            granularity: Granularity::Month,
            ..*self
        }
    }

    /// `YYYY-MM` for month points, `YYYY` for year points.
    pub fn to_iso(&self) -> String {
        match self.granularity {
            Granularity::Month => format!("{:04}-{:02}", self.year, self.month),
            Granularity::Year => format!("{:04}", self.year),
        }
    }

    /// Reads `YYYY`, `YYYY-MM` or `YYYY-MM-DD` (day truncated), with an
    /// optional sign on the year.
    pub fn parse_iso(text: &str) -> Result<Self, TimeError> {
        let text = text.trim();
        let bad = || TimeError::Parse {
            token: text.to_string(),
        };
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let mut parts = body.split('-');
        let year_part = parts.next().ok_or_else(bad)?;
        if year_part.is_empty() || !year_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let mut year: i64 = year_part.parse().map_err(|_| bad())?;
        if negative {
            year = -year;
        }
        check_year(year)?;
        let month = parts.next();
        let day = parts.next();
        if parts.next().is_some() {
            return Err(bad());
        }
        match month {
            None => Self::year(year as i32),
            Some(m) => {
                if m.len() != 2 || !m.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad());
                }
                if let Some(d) = day {
                    if d.len() != 2 || !d.bytes().all(|b| b.is_ascii_digit()) {
                        return Err(bad());
                    }
                }
                Self::month(year as i32, m.parse().map_err(|_| bad())?)
            }
        }
    }
}

fn check_year(year: i64) -> Result<(), TimeError> {
    if (MIN_YEAR as i64..=MAX_YEAR as i64).contains(&year) {
        Ok(())
    } else {
        Err(TimeError::YearOutOfRange(year))
    }
}

impl PartialOrd for TimePoint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimePoint {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.month_index()
            .cmp(&other.month_index())
            .then(self.granularity.cmp(&other.granularity))
    }
}

/// Surface form used in questions and context sentences: `June 2005` or `2005`.
impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.granularity {
            Granularity::Month => write!(f, "{} {}", MONTH_NAMES[self.month as usize - 1], self.year),
            Granularity::Year => write!(f, "{}", self.year),
        }
    }
}

impl From<TimePoint> for String {
    fn from(p: TimePoint) -> String {
        p.to_iso()
    }
}

impl TryFrom<String> for TimePoint {
    type Error = TimeError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        TimePoint::parse_iso(&s)
    }
}

impl FromStr for TimePoint {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimePoint::parse_iso(s)
    }
}

pub fn month_index(p: &TimePoint) -> i64 {
    p.month_index()
}

pub fn add_duration(p: &TimePoint, d: SignedDuration) -> Result<TimePoint, TimeError> {
    p.add_duration(d)
}

/// Parses `Month YYYY` (full English name or three-letter abbreviation) or `YYYY`.
pub fn parse_time_expression(text: &str) -> Result<TimePoint, TimeError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let parse_year = |tok: &str| -> Result<i32, TimeError> {
        if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
            return Err(TimeError::Parse {
                token: tok.to_string(),
            });
        }
        tok.parse().map_err(|_| TimeError::Parse {
            token: tok.to_string(),
        })
    };
    match tokens.as_slice() {
        [year] => TimePoint::year(parse_year(year)?),
        [month, year] => {
            let m = month_from_name(month).ok_or_else(|| TimeError::Parse {
                token: month.to_string(),
            })?;
            TimePoint::month(parse_year(year)?, m)
        }
        [] => Err(TimeError::Parse {
            token: String::new(),
        }),
        [_, _, extra, ..] => Err(TimeError::Parse {
            token: extra.to_string(),
        }),
    }
}

fn month_from_name(name: &str) -> Option<u32> {
    let lower = name.trim_end_matches('.').to_lowercase();
    MONTH_NAMES.iter().position(|full| {
        let full = full.to_lowercase();
        lower == full || (lower.len() == 3 && full.starts_with(&lower))
    })
    .map(|i| i as u32 + 1)
}

/// A signed whole-month duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedDuration(i32);

impl SignedDuration {
    pub const fn from_months(months: i32) -> Self {
        Self(months)
    }

    pub const fn years_months(years: i32, months: i32) -> Self {
        Self(years * 12 + months)
    }

    pub const fn months(&self) -> i32 {
        self.0
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }
}

impl std::ops::Neg for SignedDuration {
    type Output = Self;

    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// Renders a positive duration as `N years`, `M months` or `N years and M months`.
pub fn format_duration(d: SignedDuration) -> Result<String, TimeError> {
    let total = d.months();
    if total <= 0 {
        return Err(TimeError::NonPositiveDuration(total as i64));
    }
    let (years, months) = (total / 12, total % 12);
    let unit = |n: i32, one: &str, many: &str| {
        if n == 1 {
            format!("{n} {one}")
        } else {
            format!("{n} {many}")
        }
    };
    Ok(match (years, months) {
        (0, m) => unit(m, "month", "months"),
        (y, 0) => unit(y, "year", "years"),
        (y, m) => format!("{} and {}", unit(y, "year", "years"), unit(m, "month", "months")),
    })
}

/// Inverse of [`format_duration`].
pub fn parse_duration(text: &str) -> Result<SignedDuration, TimeError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let bad = |tok: &str| TimeError::Parse {
        token: tok.to_string(),
    };
    let quantity = |n: &str, unit: &str| -> Result<i32, TimeError> {
        let value: i32 = n.parse().map_err(|_| bad(n))?;
        match unit {
            "year" | "years" => Ok(value * 12),
            "month" | "months" => Ok(value),
            other => Err(bad(other)),
        }
    };
    let months = match tokens.as_slice() {
        [n, unit] => quantity(n, unit)?,
        [n1, u1, "and", n2, u2] if u1.starts_with("year") && u2.starts_with("month") => {
            quantity(n1, u1)? + quantity(n2, u2)?
        }
        [_, _, other, ..] => return Err(bad(other)),
        [single] => return Err(bad(single)),
        [] => return Err(bad("")),
    };
    if months <= 0 {
        return Err(TimeError::NonPositiveDuration(months as i64));
    }
    Ok(SignedDuration(months))
}

/// A closed run of months on the `month_index` axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MonthSpan {
    pub first: i64,
    pub last: i64,
}

impl MonthSpan {
    pub fn new(first: i64, last: i64) -> Self {
        Self { first, last }
    }

    pub fn single(month: i64) -> Self {
        Self::new(month, month)
    }

    pub fn overlaps(&self, other: &MonthSpan) -> bool {
        self.first.max(other.first) <= self.last.min(other.last)
    }

    pub fn contains(&self, month: i64) -> bool {
        self.first <= month && month <= self.last
    }

    pub fn contains_span(&self, other: &MonthSpan) -> bool {
        self.first <= other.first && other.last <= self.last
    }
}

/// A closed interval of months; `end == None` means the fact is ongoing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct TimeInterval {
    start: TimePoint,
    end: Option<TimePoint>,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    start: TimePoint,
    end: Option<TimePoint>,
}

impl TryFrom<RawInterval> for TimeInterval {
    type Error = TimeError;

    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        TimeInterval::new(raw.start, raw.end)
    }
}

impl From<TimeInterval> for RawInterval {
    fn from(iv: TimeInterval) -> Self {
        RawInterval {
            start: iv.start,
            end: iv.end,
        }
    }
}

impl TimeInterval {
    pub fn new(start: TimePoint, end: Option<TimePoint>) -> Result<Self, TimeError> {
        if let Some(end) = end {
            if start.first_month() > end.last_month() {
                return Err(TimeError::Inverted {
                    start: start.to_iso(),
                    end: end.to_iso(),
                });
            }
        }
        Ok(Self { start, end })
    }

    pub fn closed(start: TimePoint, end: TimePoint) -> Result<Self, TimeError> {
        Self::new(start, Some(end))
    }

    pub fn ongoing(start: TimePoint) -> Self {
        Self { start, end: None }
    }

    pub fn start(&self) -> TimePoint {
        self.start
    }

    pub fn end(&self) -> Option<TimePoint> {
        self.end
    }

    pub fn is_ongoing(&self) -> bool {
        self.end.is_none()
    }

    /// Last month of the interval. Ongoing intervals end at the horizon, or at
    /// their own start when the horizon precedes it.
    pub fn resolved_last(&self, horizon: Option<TimePoint>) -> Result<i64, TimeError> {
        match (self.end, horizon) {
            (Some(end), _) => Ok(end.last_month()),
            (None, Some(h)) => Ok(h.last_month().max(self.start.first_month())),
            (None, None) => Err(TimeError::NoHorizon),
        }
    }

    /// Month span of the interval; an ongoing interval with no horizon is
    /// unbounded on the right.
    pub fn span(&self, horizon: Option<TimePoint>) -> MonthSpan {
        let last = self.resolved_last(horizon).unwrap_or(i64::MAX);
        MonthSpan::new(self.start.first_month(), last)
    }

    /// Shifts the covered months by `d`. A year-granular end shifted by a
    /// partial year becomes the month-granular image of its last month, so the
    /// shifted interval covers exactly the shifted months.
    pub fn shift(&self, d: SignedDuration) -> Result<Self, TimeError> {
        let end = match self.end {
            Some(e) if e.granularity() == Granularity::Year && d.months() % 12 != 0 => Some(
                TimePoint::from_month_index(e.last_month() + d.months() as i64, Granularity::Month)?,
            ),
            Some(e) => Some(e.add_duration(d)?),
            None => None,
        };
        Ok(Self {
            start: self.start.add_duration(d)?,
            end,
        })
    }
}

pub fn interval_overlaps(a: &TimeInterval, b: &TimeInterval, horizon: Option<TimePoint>) -> bool {
    a.span(horizon).overlaps(&b.span(horizon))
}

pub fn shift_interval(iv: &TimeInterval, d: SignedDuration) -> Result<TimeInterval, TimeError> {
    iv.shift(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ym(y: i32, m: u32) -> TimePoint {
        TimePoint::month(y, m).unwrap()
    }

    fn iv(a: TimePoint, b: TimePoint) -> TimeInterval {
        TimeInterval::closed(a, b).unwrap()
    }

    #[test]
    fn month_index_definition() {
        assert_eq!(ym(2005, 6).month_index(), 24065);
        assert_eq!(ym(1900, 1).month_index(), 22800);
        assert_eq!(ym(2020, 1).month_index(), 24240);
    }

    #[test]
    fn add_duration_examples() {
        assert_eq!(ym(2002, 5).add_duration(SignedDuration::from_months(74)).unwrap(), ym(2008, 7));
        assert_eq!(ym(2005, 6).add_duration(SignedDuration::from_months(-180)).unwrap(), ym(1990, 6));
        assert_eq!(ym(2000, 12).add_duration(SignedDuration::from_months(1)).unwrap(), ym(2001, 1));
        let y = TimePoint::year(2011).unwrap();
        assert_eq!(y.add_duration(SignedDuration::from_months(24)).unwrap(), TimePoint::year(2013).unwrap());
        assert_eq!(y.add_duration(SignedDuration::from_months(5)).unwrap(), ym(2011, 6));
    }

    #[test]
    fn add_duration_overflow() {
        let err = ym(MAX_YEAR, 12).add_duration(SignedDuration::from_months(1)).unwrap_err();
        assert!(matches!(err, TimeError::YearOutOfRange(_)));
    }

    #[test]
    fn overlap_examples() {
        let utrecht = iv(ym(1926, 1), ym(1934, 1));
        let sept = iv(ym(1931, 9), ym(1931, 9));
        assert!(interval_overlaps(&utrecht, &sept, None));

        let brunel = iv(ym(2005, 9), ym(2007, 3));
        let ucl = iv(ym(2007, 9), ym(2008, 9));
        assert!(!interval_overlaps(&brunel, &ucl, None));

        let a = iv(ym(2000, 1), ym(2001, 1));
        let b = iv(ym(2001, 1), ym(2003, 1));
        assert!(interval_overlaps(&a, &b, None));
    }

    #[test]
    fn ongoing_resolution() {
        let boca = TimeInterval::ongoing(ym(2021, 6));
        assert_eq!(boca.resolved_last(None), Err(TimeError::NoHorizon));
        assert_eq!(boca.resolved_last(Some(ym(2023, 10))).unwrap(), ym(2023, 10).month_index());
        // horizon before the start collapses to the start month
        assert_eq!(boca.resolved_last(Some(ym(2020, 1))).unwrap(), ym(2021, 6).month_index());
        let later = iv(ym(2030, 1), ym(2030, 2));
        assert!(interval_overlaps(&boca, &later, None));
        assert!(!interval_overlaps(&boca, &later, Some(ym(2023, 10))));
    }

    #[test]
    fn shift_examples() {
        let leiden = iv(ym(1934, 1), ym(1952, 1));
        assert_eq!(
            leiden.shift(SignedDuration::from_months(240)).unwrap(),
            iv(ym(1954, 1), ym(1972, 1))
        );
        assert_eq!(leiden.shift(SignedDuration::from_months(0)).unwrap(), leiden);
        let open = TimeInterval::ongoing(ym(2016, 7));
        assert_eq!(
            open.shift(SignedDuration::from_months(-12)).unwrap(),
            TimeInterval::ongoing(ym(2015, 7))
        );
    }

    #[test]
    fn inverted_interval_rejected() {
        assert!(matches!(
            TimeInterval::closed(ym(2008, 1), ym(2007, 12)),
            Err(TimeError::Inverted { .. })
        ));
        // a year-granular end covers the whole year
        assert!(TimeInterval::closed(ym(2005, 6), TimePoint::year(2005).unwrap()).is_ok());
    }

    #[test]
    fn parse_expressions() {
        assert_eq!(parse_time_expression("June 2005").unwrap(), ym(2005, 6));
        assert_eq!(parse_time_expression("Apr 1981").unwrap(), ym(1981, 4));
        let y = parse_time_expression("2011").unwrap();
        assert_eq!((y.year_value(), y.month_value(), y.granularity()), (2011, 1, Granularity::Year));
        match parse_time_expression("Juno 2005") {
            Err(TimeError::Parse { token }) => assert_eq!(token, "Juno"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_time_expression("June 20x5").is_err());
    }

    #[test]
    fn iso_forms() {
        assert_eq!(TimePoint::parse_iso("2005-06").unwrap(), ym(2005, 6));
        assert_eq!(TimePoint::parse_iso("2005-06-17").unwrap(), ym(2005, 6));
        assert_eq!(TimePoint::parse_iso("1850").unwrap(), TimePoint::year(1850).unwrap());
        assert_eq!(TimePoint::parse_iso("-0044-03").unwrap().year_value(), -44);
        assert!(TimePoint::parse_iso("2005-13").is_err());
        assert!(TimePoint::parse_iso("05/2005").is_err());
        assert_eq!(ym(987, 3).to_iso(), "0987-03");
        assert_eq!(TimePoint::parse_iso("0987-03").unwrap(), ym(987, 3));
    }

    #[test]
    fn display_forms() {
        assert_eq!(ym(1984, 3).to_string(), "March 1984");
        assert_eq!(TimePoint::year(2011).unwrap().to_string(), "2011");
    }

    #[test]
    fn duration_surface() {
        assert_eq!(format_duration(SignedDuration::from_months(74)).unwrap(), "6 years and 2 months");
        assert_eq!(format_duration(SignedDuration::from_months(24)).unwrap(), "2 years");
        assert_eq!(format_duration(SignedDuration::from_months(5)).unwrap(), "5 months");
        assert_eq!(format_duration(SignedDuration::from_months(13)).unwrap(), "1 year and 1 month");
        assert!(format_duration(SignedDuration::from_months(0)).is_err());
        assert!(format_duration(SignedDuration::from_months(-3)).is_err());
        assert_eq!(parse_duration("4 years and 11 months").unwrap().months(), 59);
        assert_eq!(parse_duration("15 years").unwrap().months(), 180);
        assert!(parse_duration("4 decades").is_err());
    }

    fn point() -> impl Strategy<Value = TimePoint> {
        (1000i32..3000, 1u32..=12).prop_map(|(y, m)| ym(y, m))
    }

    fn any_point() -> impl Strategy<Value = TimePoint> {
        prop_oneof![point(), (1000i32..3000).prop_map(|y| TimePoint::year(y).unwrap())]
    }

    fn interval() -> impl Strategy<Value = TimeInterval> {
        (any_point(), 0i32..600, any::<bool>(), any::<bool>()).prop_map(|(s, len, open, year_end)| {
            if open {
                TimeInterval::ongoing(s)
            } else {
                let e = s.as_month().add_duration(SignedDuration::from_months(len)).unwrap();
                let e = if year_end { TimePoint::year(e.year_value()).unwrap() } else { e };
                iv(s, e)
            }
        })
    }

    proptest! {
        #[test]
        fn month_index_is_order_embedding(a in point(), b in point()) {
            let cal = (a.year_value(), a.month_value()).cmp(&(b.year_value(), b.month_value()));
            prop_assert_eq!(cal, a.month_index().cmp(&b.month_index()));
        }

        #[test]
        fn add_then_subtract_is_identity(p in point(), d in -1200i32..=1200) {
            let d = SignedDuration::from_months(d);
            prop_assert_eq!(p.add_duration(d).unwrap().add_duration(-d).unwrap(), p);
        }

        #[test]
        fn overlap_symmetric_reflexive(a in interval(), b in interval(), h in proptest::option::of(point())) {
            prop_assert_eq!(interval_overlaps(&a, &b, h), interval_overlaps(&b, &a, h));
            prop_assert!(interval_overlaps(&a, &a, h));
        }

        #[test]
        fn shift_commutes_with_overlap(a in interval(), b in interval(), d in -1200i32..=240) {
            let d = SignedDuration::from_months(d);
            prop_assert_eq!(
                interval_overlaps(&a, &b, None),
                interval_overlaps(&a.shift(d).unwrap(), &b.shift(d).unwrap(), None)
            );
            let (sa, shifted) = (a.span(None), a.shift(d).unwrap().span(None));
            prop_assert_eq!(shifted.first, sa.first + d.months() as i64);
            if !a.is_ongoing() {
                prop_assert_eq!(shifted.last, sa.last + d.months() as i64);
            }
        }

        #[test]
        fn duration_format_round_trips(m in 1i32..5000) {
            let d = SignedDuration::from_months(m);
            prop_assert_eq!(parse_duration(&format_duration(d).unwrap()).unwrap(), d);
        }
    }
}
