//! One-line literals for schedules, rational times and state sets.
//!
//! Schedule: `[prefix t:bits …] ; cycle o:bits … ; period P [; start s]`,
//! sections in any order, `start` defaulting to 0. The output of
//! `Schedule`'s `Display` is accepted.

use num_rational::Ratio;

use super::ParseError;
use crate::bits::{FireSet, State, StateSet};
use crate::schedule::{Event, Rational, Schedule};

/// `-3`, `7/2`, `+0.25`. Decimals are exact.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    let t = text.trim();
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let bad = || format!("bad number `{t}`");
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let value = if let Some((n, d)) = body.split_once('/') {
        if !digits(n) || !digits(d) {
            return Err(bad());
        }
        let n: i64 = n.parse().map_err(|_| bad())?;
        let d: i64 = d.parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(format!("zero denominator in `{t}`"));
        }
        Ratio::new(n, d)
    } else if let Some((w, frac)) = body.split_once('.') {
        if !(digits(w) || w.is_empty()) || !digits(frac) || frac.len() > 18 {
            return Err(bad());
        }
        let scale = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        let w: i64 = if w.is_empty() { 0 } else { w.parse().map_err(|_| bad())? };
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let n = w.checked_mul(scale).and_then(|x| x.checked_add(f)).ok_or_else(bad)?;
        Ratio::new(n, scale)
    } else {
        if !digits(body) {
            return Err(bad());
        }
        Ratio::from_integer(body.parse().map_err(|_| bad())?)
    };
    Ok(if neg { -value } else { value })
}

/// Byte ranges of the whitespace-separated words in `s`, offset by `base`.
fn words(s: &str, base: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices().chain(std::iter::once((s.len(), ' '))) {
        match (c.is_whitespace(), start) {
            (true, Some(st)) => {
                out.push((base + st, &s[st..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

/// Parses a schedule literal and checks that it is progressive. Diagnostics
/// are reported on line 1 with the column of the offending word.
pub fn parse_schedule(text: &str) -> Result<Schedule, ParseError> {
    let err = |col: usize, msg: String| ParseError::new(1, col, msg);
    let mut prefix: Option<Vec<Event>> = None;
    let mut cycle: Option<Vec<Event>> = None;
    let mut period: Option<Rational> = None;
    let mut start: Option<Rational> = None;
    let mut dim: Option<usize> = None;

    let mut offset = 0;
    for section in text.split(';') {
        let ws = words(section, offset);
        offset += section.len() + 1;
        let Some(&(kcol, keyword)) = ws.first() else {
            return Err(err(offset, "empty section".into()));
        };
        let args = &ws[1..];
        let dup = |seen: bool| if seen { Err(err(kcol + 1, format!("`{keyword}` given twice"))) } else { Ok(()) };
        match keyword {
            "prefix" | "cycle" => {
                let slot = if keyword == "prefix" { &mut prefix } else { &mut cycle };
                dup(slot.is_some())?;
                let mut events = Vec::with_capacity(args.len());
                for &(col, w) in args {
                    let (t, bits) = w
                        .split_once(':')
                        .ok_or_else(|| err(col + 1, format!("expected `time:bits`, found `{w}`")))?;
                    let time = parse_rational(t).map_err(|m| err(col + 1, m))?;
                    let fire: FireSet = bits.parse().map_err(|m| err(col + t.len() + 2, m))?;
                    match dim {
                        Some(d) if d != fire.dim() => {
                            return Err(err(
                                col + t.len() + 2,
                                format!("fire set `{bits}` has {} coordinates, expected {d}", fire.dim()),
                            ))
                        }
                        _ => dim = Some(fire.dim()),
                    }
                    events.push(Event::new(time, fire));
                }
                if keyword == "cycle" && events.is_empty() {
                    return Err(err(kcol + 1, "cycle must contain at least one event".into()));
                }
                *slot = Some(events);
            }
            "period" | "start" => {
                let slot = if keyword == "period" { &mut period } else { &mut start };
                dup(slot.is_some())?;
                let &[(col, w)] = args else {
                    return Err(err(kcol + 1, format!("`{keyword}` takes exactly one number")));
                };
                *slot = Some(parse_rational(w).map_err(|m| err(col + 1, m))?);
            }
            other => {
                return Err(err(kcol + 1, format!("unknown section `{other}` (expected prefix, cycle, period or start)")))
            }
        }
    }
    let cycle = cycle.ok_or_else(|| err(0, "missing `cycle` section".into()))?;
    let period = period.ok_or_else(|| err(0, "missing `period` section".into()))?;
    let rho = Schedule::new(prefix.unwrap_or_default(), cycle, period, start.unwrap_or_else(|| Ratio::from_integer(0)))
        .map_err(|e| err(0, e.to_string()))?;
    rho.require_progressive().map_err(|e| err(0, e.to_string()))?;
    Ok(rho)
}

/// `00,10` or `{00, 10}`; must be nonempty with one dimension throughout.
pub fn parse_state_set(text: &str) -> Result<StateSet, ParseError> {
    let t = text.trim();
    let inner = match t.strip_prefix('{') {
        Some(rest) => rest
            .strip_suffix('}')
            .ok_or_else(|| ParseError::new(1, text.len() + 1, "missing closing `}`"))?,
        None => t,
    };
    let base = text.len() - text.trim_start().len() + (t.len() - t.trim_start_matches('{').len());
    let mut states: Vec<State> = Vec::new();
    let mut offset = 0;
    for item in inner.split(',') {
        let col = base + offset + (item.len() - item.trim_start().len()) + 1;
        offset += item.len() + 1;
        let w = item.trim();
        if w.is_empty() {
            return Err(ParseError::new(1, col, "expected a state"));
        }
        let s: State = w.parse().map_err(|m| ParseError::new(1, col, m))?;
        if let Some(first) = states.first() {
            if first.dim() != s.dim() {
                return Err(ParseError::new(
                    1,
                    col,
                    format!("state `{w}` has {} coordinates, expected {}", s.dim(), first.dim()),
                ));
            }
        }
        states.push(s);
    }
    let dim = states[0].dim();
    StateSet::from_states(dim, states).map_err(|e| ParseError::new(1, 0, e.to_string()))
}

/// `{00,10}`; `{}` for the empty set.
pub fn render_state_set(set: &StateSet) -> String {
    format!("{{{set}}}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use crate::schedule::{int, rat};
    use proptest::prelude::*;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("-7/2").unwrap(), rat(-7, 2));
        assert_eq!(parse_rational("+0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("4/6").unwrap(), rat(2, 3));
        for bad in ["", "-", "1/0", "a", "1.", "1/2/3", "1e3", "--1"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn synchronous_literal() {
        let rho = parse_schedule("cycle 0:11 ; period 1 ; start 0").unwrap();
        assert_eq!(rho, Schedule::synchronous(2));
        assert_eq!(parse_schedule("cycle 0:11;period 1").unwrap(), rho);
        assert_eq!(parse_schedule("period 1 ; cycle 0:11").unwrap(), rho);
    }

    #[test]
    fn schedule_round_trip() {
        let rho = Schedule::new(
            vec![Event::new(rat(-1, 2), fs("01")), Event::new(int(2), fs("00"))],
            vec![Event::new(int(0), fs("10")), Event::new(rat(3, 2), fs("01"))],
            int(3),
            rat(7, 3),
        )
        .unwrap();
        assert_eq!(parse_schedule(&rho.to_string()).unwrap(), rho);
    }

    #[test]
    fn schedule_diagnostics() {
        let e = parse_schedule("cycle 0:10 ; period 1").unwrap_err();
        assert!(e.message.contains("coordinate 2 never fires"), "{e}");

        let e = parse_schedule("cycle 0:10 1:011 ; period 2").unwrap_err();
        assert_eq!(e.column, 14);
        assert!(e.message.contains("expected 2"), "{e}");

        let e = parse_schedule("cycle 0:1x ; period 1").unwrap_err();
        assert_eq!(e.column, 9);

        let e = parse_schedule("cycle 0:11 ; period 1/0").unwrap_err();
        assert_eq!(e.column, 21);

        assert!(parse_schedule("cycle 0:11 ; period 0").is_err());
        assert!(parse_schedule("cycle 0:11").unwrap_err().message.contains("period"));
        assert!(parse_schedule("cycle 0:11 ; period 1 ; period 2").is_err());
        assert!(parse_schedule("cycle 0:11 ; period 1 ; tempo 3").is_err());
        assert!(parse_schedule("cycle 0:11 ; period 1 ;").is_err());
        assert!(parse_schedule("prefix 1:01 ; cycle 0:11 ; period 1 ; start 1").is_err());
        assert!(parse_schedule("cycle 1:11 0:11 ; period 2").is_err());
    }

    #[test]
    fn sets() {
        assert_eq!(parse_state_set("00,10").unwrap(), set(&["00", "10"]));
        assert_eq!(parse_state_set(" { 10 , 00 } ").unwrap(), set(&["00", "10"]));
        assert_eq!(render_state_set(&set(&["10", "00"])), "{00,10}");

        let e = parse_state_set("00,101").unwrap_err();
        assert_eq!(e.column, 4);
        assert!(parse_state_set("").is_err());
        assert!(parse_state_set("{}").is_err());
        assert!(parse_state_set("{00").is_err());
        assert!(parse_state_set("00,,01").is_err());
        assert!(parse_state_set("0a").is_err());
    }

    proptest! {
        #[test]
        fn set_literals_round_trip(mask in 1u16..) {
            let s = StateSet::from_states(4, (0..16u32).filter(|k| mask >> k & 1 == 1).map(|k| State::new(4, k).unwrap())).unwrap();
            prop_assert_eq!(parse_state_set(&render_state_set(&s)).unwrap(), s.clone());
            prop_assert_eq!(parse_state_set(&s.to_string()).unwrap(), s);
        }

        #[test]
        fn rationals_round_trip(n in -1000i64..1000, d in 1i64..50) {
            let r = rat(n, d);
            prop_assert_eq!(parse_rational(&r.to_string()).unwrap(), r);
        }
    }
}
