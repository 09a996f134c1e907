use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, TimeZone, Utc};
use krs_core::Timestamp;

const NAIVE_FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"];

/// RFC 3339, or a local date-time / date (midnight) in `tz`.
pub fn parse_instant(raw: &str, tz: FixedOffset) -> Result<Timestamp, String> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Ok(t.with_timezone(&Utc));
    }
    let naive = NAIVE_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .or_else(|| {
            NaiveDate::parse_from_str(raw, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
        .ok_or_else(|| format!("{raw:?} is not an ISO-8601 date or date-time"))?;
    tz.from_local_datetime(&naive)
        .single()
        .map(|t| t.with_timezone(&Utc))
        .ok_or_else(|| format!("{raw:?} is not a valid local time"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        let wib = FixedOffset::east_opt(7 * 3600).unwrap();
        let expect: Timestamp = "2008-02-25T10:17:01Z".parse().unwrap();
        assert_eq!(parse_instant("2008-02-25T10:17:01Z", wib).unwrap(), expect);
        assert_eq!(parse_instant("2008-02-25T17:17:01+07:00", wib).unwrap(), expect);
        assert_eq!(parse_instant("2008-02-25T17:17:01", wib).unwrap(), expect);
        assert_eq!(parse_instant("2008-02-25 17:17:01", wib).unwrap(), expect);
        assert_eq!(
            parse_instant("2008-02-25", wib).unwrap(),
            "2008-02-24T17:00:00Z".parse::<Timestamp>().unwrap()
        );
        assert!(parse_instant("25/02/2008", wib).is_err());
    }
}
