use std::fmt::Write;

use super::temporal::{DateRange, TemporalContext};
use crate::types::Query;

fn range(r: &DateRange) -> String {
    format!("{} to {}", r.start, r.end)
}

/// Appends resolved calendar context to the seller's question. The question
/// text is kept verbatim on the first line.
pub fn augment_query(q: &Query, ctx: &TemporalContext) -> String {
    let mut out = String::new();
    out.push_str(&q.text);
    out.push_str("\n\nContext:\n");
    let _ = writeln!(out, "- Today's date: {} ({})", ctx.today, ctx.today.format("%A"));
    let _ = writeln!(out, "- Current week: {}", range(&ctx.this_week));
    let _ = writeln!(out, "- Last week: {}", range(&ctx.last_week));
    let _ = writeln!(out, "- Current month: {}", range(&ctx.this_month));
    let _ = writeln!(out, "- Last month: {}", range(&ctx.last_month));
    let _ = writeln!(out, "- Current year: {}", range(&ctx.this_year));
    let _ = writeln!(out, "- Last year: {}", range(&ctx.last_year));
    out.push_str("Instructions:\n");
    out.push_str("- \"week\" refers to the calendar week, Monday to Sunday.\n");
    out.push_str("- \"month\" and \"year\" refer to calendar months and years.\n");
    out.push_str("- Resolve relative periods such as \"last week\" or \"last month\" to the dates above.\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manager::temporal::build_temporal_context;
    use crate::types::validate_query;
    use chrono::NaiveDate;

    fn ctx() -> TemporalContext {
        build_temporal_context(NaiveDate::from_ymd_opt(2024, 8, 15).unwrap())
    }

    #[test]
    fn adds_week_context() {
        let q = validate_query("What were my sales for the last week?").unwrap();
        let frag = augment_query(&q, &ctx());
        assert!(frag.starts_with("What were my sales for the last week?\n"));
        assert!(frag.contains("Today's date: 2024-08-15 (Thursday)"));
        assert!(frag.contains("Last week: 2024-08-05 to 2024-08-11"));
        assert!(frag.contains("calendar week"));
    }

    #[test]
    fn explicit_dates_untouched() {
        let q = validate_query("sales from 2024-01-01 to 2024-01-31").unwrap();
        let frag = augment_query(&q, &ctx());
        assert!(frag.starts_with("sales from 2024-01-01 to 2024-01-31\n"));
        assert!(frag.contains("Context:"));
    }

    #[test]
    fn deterministic() {
        let q = validate_query("sales last month").unwrap();
        assert_eq!(augment_query(&q, &ctx()), augment_query(&q, &ctx()));
    }
}
